"""Versioned JSON scenario and schedule files.

Scenario files carry the full case description (units, storage, TOU prices,
per-period uncertainty models); schedule files embed their scenario so they
are self-contained.  Floats round-trip at full precision so that reloading
a schedule reproduces its objectives bit-for-bit.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .dispatch import (DecisionVector, ESSParams, MTUnit, ObjectiveVector,
                       Scenario, TOUSchedule)
from .probmodel import LoadParams, PVParams, WindParams

FORMAT_VERSION = 1

BUNDLED_SCENARIOS = {
    "default": "decc_24h.json",
    "default-tou-corrected": "decc_24h_tou_corrected.json",
}


class ScenarioError(Exception):
    """Base class for scenario file problems."""


class ScenarioParseError(ScenarioError):
    """File unreadable or not valid JSON."""


class ScenarioValidationError(ScenarioError):
    """Semantically invalid content; carries the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


def _req(doc: dict, key: str, path: str):
    if key not in doc:
        raise ScenarioValidationError(f"{path}.{key}" if path else key,
                                      "missing required field")
    return doc[key]


def _build(cls, kwargs, path: str):
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ScenarioValidationError(path, str(exc)) from exc


def scenario_from_dict(doc: dict, source: str = "<dict>") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioValidationError("$", "scenario document must be an object")
    version = _req(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise ScenarioValidationError("format_version",
                                      f"unsupported version {version!r}")
    units = []
    for i, u in enumerate(_req(doc, "units", "")):
        upath = f"units[{i}]"
        em = _req(u, "emissions_g_per_kwh", upath)
        coeffs = tuple(_req(em, g, f"{upath}.emissions_g_per_kwh")
                       for g in ("nox", "co2", "co", "so2"))
        units.append(_build(MTUnit, dict(
            name=u.get("name", f"MT{i + 1}"),
            p_min=_req(u, "p_min_kw", upath),
            p_max=_req(u, "p_max_kw", upath),
            fuel_zeta=_req(u, "fuel_zeta", upath),
            fuel_psi=_req(u, "fuel_psi", upath),
            startstop_cost_kappa=_req(u, "startstop_cost_kappa", upath),
            reserve_price_sigma=_req(u, "reserve_price_sigma", upath),
            emission_coeffs=coeffs,
            initial_on=bool(u.get("initial_on", False)),
        ), upath))

    e = _req(doc, "ess", "")
    ess = _build(ESSParams, dict(
        cap_min=_req(e, "cap_min_kwh", "ess"),
        cap_max=_req(e, "cap_max_kwh", "ess"),
        cap_initial=_req(e, "cap_initial_kwh", "ess"),
        p_ch_max=_req(e, "p_ch_max_kw", "ess"),
        p_dc_max=_req(e, "p_dc_max_kw", "ess"),
        eff_ch=_req(e, "eff_ch", "ess"),
        eff_dc=_req(e, "eff_dc", "ess"),
        reserve_price=_req(e, "reserve_price", "ess"),
    ), "ess")

    t = _req(doc, "tou", "")
    tou = _build(TOUSchedule, dict(purchase=_req(t, "purchase", "tou"),
                                   sale=_req(t, "sale", "tou")), "tou")

    wind = tuple(_build(WindParams, dict(
        shape_k=_req(w, "shape_k", f"wind[{i}]"),
        scale_gamma=_req(w, "scale_gamma", f"wind[{i}]"),
        v_in=_req(w, "v_in", f"wind[{i}]"),
        v_rated=_req(w, "v_rated", f"wind[{i}]"),
        v_out=_req(w, "v_out", f"wind[{i}]"),
        p_rated=_req(w, "p_rated_kw", f"wind[{i}]"),
    ), f"wind[{i}]") for i, w in enumerate(_req(doc, "wind", "")))

    pv = tuple(_build(PVParams, dict(
        lambda1=_req(p, "lambda1", f"pv[{i}]"),
        lambda2=_req(p, "lambda2", f"pv[{i}]"),
        p_max=_req(p, "p_max_kw", f"pv[{i}]"),
    ), f"pv[{i}]") for i, p in enumerate(_req(doc, "pv", "")))

    load = tuple(_build(LoadParams, dict(
        mean_mu=_req(l, "mean_kw", f"load[{i}]"),
        std_sigma=_req(l, "std_kw", f"load[{i}]"),
    ), f"load[{i}]") for i, l in enumerate(_req(doc, "load", "")))

    forecast = doc.get("forecast", {})
    return _build(Scenario, dict(
        name=doc.get("name", Path(source).stem),
        horizon=_req(doc, "horizon", ""),
        dt=_req(doc, "dt_hours", ""),
        units=tuple(units),
        ess=ess,
        tou=tou,
        wind=wind,
        pv=pv,
        load=load,
        confidence_alpha=_req(doc, "confidence_alpha", ""),
        step_q=_req(doc, "step_q_kw", ""),
        controllable_load=doc.get("controllable_load_kw"),
        forecast_wt=forecast.get("wind_kw"),
        forecast_pv=forecast.get("pv_kw"),
        forecast_load=forecast.get("load_kw"),
        description=doc.get("description", ""),
    ), "$")


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": sc.name,
        "description": sc.description,
        "horizon": sc.horizon,
        "dt_hours": sc.dt,
        "step_q_kw": sc.step_q,
        "confidence_alpha": sc.confidence_alpha,
        "units": [{
            "name": u.name,
            "p_min_kw": u.p_min,
            "p_max_kw": u.p_max,
            "fuel_zeta": u.fuel_zeta,
            "fuel_psi": u.fuel_psi,
            "startstop_cost_kappa": u.startstop_cost_kappa,
            "reserve_price_sigma": u.reserve_price_sigma,
            "emissions_g_per_kwh": dict(zip(("nox", "co2", "co", "so2"),
                                            u.emission_coeffs)),
            "initial_on": u.initial_on,
        } for u in sc.units],
        "ess": {
            "cap_min_kwh": sc.ess.cap_min,
            "cap_max_kwh": sc.ess.cap_max,
            "cap_initial_kwh": sc.ess.cap_initial,
            "p_ch_max_kw": sc.ess.p_ch_max,
            "p_dc_max_kw": sc.ess.p_dc_max,
            "eff_ch": sc.ess.eff_ch,
            "eff_dc": sc.ess.eff_dc,
            "reserve_price": sc.ess.reserve_price,
        },
        "tou": {"purchase": sc.tou.purchase.tolist(),
                "sale": sc.tou.sale.tolist()},
        "wind": [{"shape_k": w.shape_k, "scale_gamma": w.scale_gamma,
                  "v_in": w.v_in, "v_rated": w.v_rated, "v_out": w.v_out,
                  "p_rated_kw": w.p_rated} for w in sc.wind],
        "pv": [{"lambda1": p.lambda1, "lambda2": p.lambda2,
                "p_max_kw": p.p_max} for p in sc.pv],
        "load": [{"mean_kw": l.mean_mu, "std_kw": l.std_sigma}
                 for l in sc.load],
        "controllable_load_kw": sc.controllable_load.tolist(),
        "forecast": {"wind_kw": sc.forecast_wt.tolist(),
                     "pv_kw": sc.forecast_pv.tolist(),
                     "load_kw": sc.forecast_load.tolist()},
    }


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc, source=str(path))


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def bundled_scenario_path(name: str = "default") -> Path:
    try:
        fname = BUNDLED_SCENARIOS[name]
    except KeyError:
        raise ScenarioParseError(
            f"unknown bundled scenario {name!r}; "
            f"choices: {sorted(BUNDLED_SCENARIOS)}") from None
    return Path(resources.files("mgdispatch") / "data" / fname)


def load_bundled_scenario(name: str = "default") -> Scenario:
    return load_scenario(bundled_scenario_path(name))


# ---------------------------------------------------------------------------
# schedule files
# ---------------------------------------------------------------------------

def schedule_to_dict(dv: DecisionVector, sc: Scenario,
                     objectives: ObjectiveVector) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scenario": scenario_to_dict(sc),
        "objectives": {"f1_cost": objectives.f1_cost,
                       "f2_emissions": objectives.f2_emissions,
                       "f3_satisfaction": objectives.f3_satisfaction},
        "commit": dv.u.tolist(),
        "startup": dv.s.tolist(),
        "p_mt_kw": dv.p_mt.tolist(),
        "r_mt_kw": dv.r_mt.tolist(),
        "p_ch_kw": dv.p_ch.tolist(),
        "p_dc_kw": dv.p_dc.tolist(),
        "p_res_kw": dv.p_res.tolist(),
    }


def schedule_from_dict(doc: dict) -> tuple[DecisionVector, Scenario,
                                           ObjectiveVector]:
    version = _req(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise ScenarioValidationError("format_version",
                                      f"unsupported version {version!r}")
    sc = scenario_from_dict(_req(doc, "scenario", ""), source="<embedded>")
    dv = DecisionVector(u=np.array(_req(doc, "commit", "")),
                        p_mt=np.array(_req(doc, "p_mt_kw", "")),
                        r_mt=np.array(_req(doc, "r_mt_kw", "")),
                        p_ch=np.array(_req(doc, "p_ch_kw", "")),
                        p_dc=np.array(_req(doc, "p_dc_kw", "")),
                        p_res=np.array(_req(doc, "p_res_kw", "")),
                        s=np.array(_req(doc, "startup", "")))
    obj = doc.get("objectives", {})
    ov = ObjectiveVector(f1_cost=obj.get("f1_cost", 0.0),
                         f2_emissions=obj.get("f2_emissions", 0.0),
                         f3_satisfaction=obj.get("f3_satisfaction", 0.0))
    return dv, sc, ov


def save_schedule(dv: DecisionVector, sc: Scenario,
                  objectives: ObjectiveVector, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schedule_to_dict(dv, sc, objectives), indent=2) + "\n")


def load_schedule(path: str | Path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path} is not valid JSON: {exc}") from exc
    return schedule_from_dict(doc)
