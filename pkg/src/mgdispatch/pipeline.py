"""End-to-end commands: optimize, decide, reserve sweep, Monte-Carlo
validation.

Each command reads versioned JSON/CSV inputs, writes deterministic output
files (CSV floats carry 9 significant digits; JSON schedules keep full
precision so re-evaluation reproduces objectives exactly), and returns a
RunReport with stage wall-clock timings.  Timings are reported on stderr by
the CLI, never written into output files, so identical seeds give
byte-identical outputs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decision import FcmParams, GrpParams, projection_and_rpv, select_bcs, \
    standardize_decision_matrix
from .dispatch import (Scenario, build_equivalent_load, check_constraints)
from .scenario_io import (FORMAT_VERSION, ScenarioParseError, load_scenario,
                          load_schedule, scenario_from_dict, scenario_to_dict)
from .thetadea import Individual, ThetaDeaParams, run

ARCHIVE_HEADER = "index,f1_cost_usd,f2_emissions_kg,f3_satisfaction_pct"


class InfeasibleScenarioError(Exception):
    """Raised when the search ends without a violation-free schedule."""

    def __init__(self, best_penalty: float):
        self.best_penalty = best_penalty
        super().__init__(
            f"no feasible schedule found (best residual penalty "
            f"{best_penalty:.6g} $)")


class InfeasibleScheduleError(Exception):
    """Raised when a schedule offered for validation violates constraints."""


@dataclass
class RunConfig:
    scenario_path: str | Path | None = None
    out_dir: str | Path = "."
    dea: ThetaDeaParams = field(default_factory=ThetaDeaParams)
    fcm: FcmParams = field(default_factory=FcmParams)
    grp: GrpParams = field(default_factory=GrpParams)
    step_q: float | None = None
    confidence_alpha: float | None = None


@dataclass
class RunReport:
    timings: dict[str, float] = field(default_factory=dict)
    files: dict[str, Path] = field(default_factory=dict)
    archive_objectives: np.ndarray | None = None
    archive: list[Individual] | None = None
    labels: np.ndarray | None = None
    rpv: np.ndarray | None = None
    bcs_indices: list[int] | None = None
    overall_best: int | None = None
    reserve_table: np.ndarray | None = None
    coverage: np.ndarray | None = None


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _load_scenario_for(cfg: RunConfig) -> Scenario:
    sc = load_scenario(cfg.scenario_path)
    if cfg.step_q is not None:
        sc.step_q = cfg.step_q
    if cfg.confidence_alpha is not None:
        sc.confidence_alpha = cfg.confidence_alpha
    return sc


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def cmd_optimize(cfg: RunConfig) -> RunReport:
    """Search the scenario, write the Pareto archive as CSV and the full
    schedules as JSON; raises InfeasibleScenarioError after writing a
    diagnostic report when nothing feasible is found."""
    report = RunReport()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    sc = _load_scenario_for(cfg)
    report.timings["load_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    el = build_equivalent_load(sc)
    report.timings["equivalent_load_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = run(sc, cfg.dea, el)
    report.timings["search_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if not result.feasible:
        (out / "infeasible.json").write_text(json.dumps({
            "feasible": False,
            "best_penalty": result.best_penalty,
            "generations": result.generations_run,
        }, indent=2) + "\n")
        report.timings["write_s"] = time.perf_counter() - t0
        raise InfeasibleScenarioError(result.best_penalty)

    objs = np.array([ind.objectives.as_array() for ind in result.archive])
    archive_path = out / "archive.csv"
    _write_csv(archive_path, ARCHIVE_HEADER,
               ([i, *row] for i, row in enumerate(objs)))

    solutions = []
    for ind in result.archive:
        dv = ind.genotype
        solutions.append({
            "objectives": {"f1_cost": ind.objectives.f1_cost,
                           "f2_emissions": ind.objectives.f2_emissions,
                           "f3_satisfaction": ind.objectives.f3_satisfaction},
            "commit": dv.u.tolist(),
            "startup": dv.s.tolist(),
            "p_mt_kw": dv.p_mt.tolist(),
            "r_mt_kw": dv.r_mt.tolist(),
            "p_ch_kw": dv.p_ch.tolist(),
            "p_dc_kw": dv.p_dc.tolist(),
            "p_res_kw": dv.p_res.tolist(),
        })
    schedules_path = out / "schedules.json"
    schedules_path.write_text(json.dumps({
        "format_version": FORMAT_VERSION,
        "scenario": scenario_to_dict(sc),
        "solutions": solutions,
    }, indent=2) + "\n")
    report.timings["write_s"] = time.perf_counter() - t0
    report.timings["total_s"] = sum(report.timings.values())

    report.files = {"archive": archive_path, "schedules": schedules_path}
    report.archive_objectives = objs
    report.archive = result.archive
    return report


def read_archive_csv(path: str | Path) -> np.ndarray:
    """Objective rows (F1, F2, F3) from an archive written by cmd_optimize."""
    path = Path(path)
    try:
        lines = path.read_text().strip().splitlines()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != ARCHIVE_HEADER:
        raise ScenarioParseError(f"{path} is not an archive CSV "
                                 f"(expected header {ARCHIVE_HEADER!r})")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return np.array(rows)[:, 1:4]


# ---------------------------------------------------------------------------
# decide
# ---------------------------------------------------------------------------

def cmd_decide(cfg: RunConfig, archive_path: str | Path,
               schedules_path: str | Path | None = None) -> RunReport:
    """Cluster an archive, rank with grey relation projection, and emit the
    cluster table, the best-compromise table and per-compromise reserve
    breakdowns."""
    report = RunReport()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    archive_path = Path(archive_path)
    if schedules_path is None:
        schedules_path = archive_path.parent / "schedules.json"

    t0 = time.perf_counter()
    objs = read_archive_csv(archive_path)
    sel = select_bcs(objs, cfg.fcm, cfg.grp)
    report.timings["analysis_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bcs_set = set(sel.bcs_indices)
    clusters_path = out / "clusters.csv"
    _write_csv(clusters_path,
               "index,f1_cost_usd,f2_emissions_kg,f3_satisfaction_pct,"
               "cluster,rpv,is_bcs",
               ([i, *objs[i], sel.labels[i], sel.rpv[i], int(i in bcs_set)]
                for i in range(objs.shape[0])))

    # overall pick: re-rank the compromise rows under the configured weights
    bcs_rows = objs[sel.bcs_indices]
    overall_rpv = projection_and_rpv(
        standardize_decision_matrix(bcs_rows), cfg.grp)
    overall = int(np.argmax(overall_rpv))
    bcs_path = out / "bcs.csv"
    _write_csv(bcs_path,
               "cluster,archive_index,f1_cost_usd,f2_emissions_kg,"
               "f3_satisfaction_pct,rpv,overall_best",
               ([sel.labels[idx], idx, *objs[idx], sel.rpv[idx],
                 int(k == overall)]
                for k, idx in enumerate(sel.bcs_indices)))

    files = {"clusters": clusters_path, "bcs": bcs_path}
    schedules_path = Path(schedules_path)
    if schedules_path.exists():
        doc = json.loads(schedules_path.read_text())
        sc = scenario_from_dict(doc["scenario"], source=str(schedules_path))
        rows = []
        for idx in sel.bcs_indices:
            sol = doc["solutions"][idx]
            r_mt = np.array(sol["r_mt_kw"]).sum(axis=0)
            p_res = np.array(sol["p_res_kw"])
            for t in range(sc.horizon):
                rows.append([idx, t, r_mt[t], p_res[t]])
            # standalone schedule file, directly consumable by validate
            sched_path = out / f"bcs_schedule_{idx}.json"
            sched_path.write_text(json.dumps({
                "format_version": FORMAT_VERSION,
                "scenario": doc["scenario"],
                "objectives": sol["objectives"],
                "commit": sol["commit"],
                "startup": sol["startup"],
                "p_mt_kw": sol["p_mt_kw"],
                "r_mt_kw": sol["r_mt_kw"],
                "p_ch_kw": sol["p_ch_kw"],
                "p_dc_kw": sol["p_dc_kw"],
                "p_res_kw": sol["p_res_kw"],
            }, indent=2) + "\n")
            files[f"bcs_schedule_{idx}"] = sched_path
        breakdown_path = out / "reserve_breakdown.csv"
        _write_csv(breakdown_path,
                   "archive_index,period,reserve_mt_kw,reserve_ess_kw", rows)
        files["reserve_breakdown"] = breakdown_path
    report.timings["write_s"] = time.perf_counter() - t0
    report.timings["total_s"] = sum(report.timings.values())

    report.files = files
    report.archive_objectives = objs
    report.labels = sel.labels
    report.rpv = sel.rpv
    report.bcs_indices = sel.bcs_indices
    report.overall_best = sel.bcs_indices[overall]
    return report


# ---------------------------------------------------------------------------
# reserve sweep
# ---------------------------------------------------------------------------

def cmd_reserve_sweep(cfg: RunConfig, alphas) -> RunReport:
    """Minimum grid-aligned reserve per period for each confidence level."""
    report = RunReport()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    alphas = [float(a) for a in alphas]
    for a in alphas:
        if not 0.5 < a < 1.0:
            raise ValueError(f"alpha {a} outside (0.5, 1)")

    t0 = time.perf_counter()
    sc = _load_scenario_for(cfg)
    el = build_equivalent_load(sc)
    rows = []
    for a in alphas:
        req = el.required_reserve(a)
        rows.extend([a, t, req[t]] for t in range(sc.horizon))
    report.timings["sweep_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sweep_path = out / "reserve_sweep.csv"
    _write_csv(sweep_path, "alpha,period,reserve_kw", rows)
    report.timings["write_s"] = time.perf_counter() - t0
    report.timings["total_s"] = sum(report.timings.values())

    report.files = {"sweep": sweep_path}
    report.reserve_table = np.array(rows)
    return report


# ---------------------------------------------------------------------------
# Monte-Carlo validation
# ---------------------------------------------------------------------------

def _sample_renewables_and_load(sc: Scenario, t: int, n: int,
                                rng: np.random.Generator):
    w = sc.wind[t]
    v = rng.weibull(w.shape_k, n) * w.scale_gamma
    wind = np.where((v < w.v_in) | (v > w.v_out), 0.0,
                    np.where(v >= w.v_rated, w.p_rated,
                             w.p_rated * (v - w.v_in) / (w.v_rated - w.v_in)))
    p = sc.pv[t]
    pv = rng.beta(p.lambda1, p.lambda2, n) * p.p_max if p.p_max > 0 \
        else np.zeros(n)
    l = sc.load[t]
    load = rng.normal(l.mean_mu, l.std_sigma, n) if l.std_sigma > 0 \
        else np.full(n, l.mean_mu)
    return wind, pv, load


def cmd_validate(cfg: RunConfig, schedule_path: str | Path,
                 n_samples: int, seed: int) -> RunReport:
    """Check a schedule's reserve coverage by sampling the continuous
    uncertainty models; writes per-period empirical coverage with a 95%
    binomial interval."""
    report = RunReport()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    dv, sc, _ = load_schedule(schedule_path)
    el = build_equivalent_load(sc)
    constraint_report = check_constraints(dv, sc, el)
    if not constraint_report.feasible(tol=1e-6):
        raise InfeasibleScheduleError(
            f"schedule violates constraints by "
            f"{constraint_report.violation_total():.6g} kW; validation "
            "expects a feasible schedule")
    report.timings["load_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    total_reserve = dv.r_mt.sum(axis=0) + dv.p_res
    rows = []
    coverage = np.empty(sc.horizon)
    for t in range(sc.horizon):
        wind, pv, load = _sample_renewables_and_load(sc, t, n_samples, rng)
        shortfall = (load - wind - pv) - el.e_el[t]
        covered = float(np.mean(total_reserve[t] >= shortfall))
        half = 1.959963985 * np.sqrt(max(covered * (1 - covered), 0.0)
                                     / n_samples)
        coverage[t] = covered
        rows.append([t, n_samples, covered,
                     max(0.0, covered - half), min(1.0, covered + half),
                     total_reserve[t]])
    report.timings["sampling_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    coverage_path = out / "coverage.csv"
    _write_csv(coverage_path,
               "period,n_samples,coverage,ci_low,ci_high,total_reserve_kw",
               rows)
    report.timings["write_s"] = time.perf_counter() - t0
    report.timings["total_s"] = sum(report.timings.values())

    report.files = {"coverage": coverage_path}
    report.coverage = coverage
    return report
