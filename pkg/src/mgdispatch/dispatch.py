"""Microgrid dispatch problem: decision encoding, objectives, constraints,
the deterministic-equivalent reserve chance constraint, and schedule repair.

A schedule commits each microturbine per period, sets its output and
spinning reserve, and drives the storage exchange (charge/discharge) plus a
storage reserve band.  Objectives are operating cost ($), gas emissions (kg)
and consumer satisfaction (% of forecast demand served).  Supply above the
expected net demand has no sink in an isolated grid and is treated as a
violation; supply below it is legal under-service and simply lowers the
satisfaction objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import repair_pass
from .probmodel import (LoadParams, ProbSeq, PVParams, WindParams, discretize,
                        distribution_mean)
from .sequences import expected_equivalent_load, seq_add, seq_sub_floor

# $ per kW of residual violation when ranking candidate schedules
PENALTY_WEIGHT = 1.0e6

GAS_NAMES = ("nox", "co2", "co", "so2")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MTUnit:
    """One microturbine: operating box, cost model, emission coefficients."""

    name: str
    p_min: float
    p_max: float
    fuel_zeta: float            # $/h fixed running cost
    fuel_psi: float             # $/kWh linear fuel cost
    startstop_cost_kappa: float
    reserve_price_sigma: float  # $/kW of spinning reserve
    emission_coeffs: tuple[float, float, float, float]  # g/kWh, GAS_NAMES order
    initial_on: bool = False

    def __post_init__(self):
        if not 0 <= self.p_min < self.p_max:
            raise ValueError(f"unit {self.name}: need 0 <= p_min < p_max")
        for label, value in (("fuel_zeta", self.fuel_zeta),
                             ("fuel_psi", self.fuel_psi),
                             ("startstop_cost_kappa", self.startstop_cost_kappa),
                             ("reserve_price_sigma", self.reserve_price_sigma)):
            if value < 0:
                raise ValueError(f"unit {self.name}: {label} must be >= 0")
        if len(self.emission_coeffs) != 4 or any(c < 0 for c in self.emission_coeffs):
            raise ValueError(f"unit {self.name}: need 4 non-negative emission "
                             "coefficients")


@dataclass(frozen=True)
class ESSParams:
    """Battery storage: energy window, exchange limits, efficiencies."""

    cap_min: float
    cap_max: float
    cap_initial: float
    p_ch_max: float
    p_dc_max: float
    eff_ch: float
    eff_dc: float
    reserve_price: float  # $/kW of reserve band

    def __post_init__(self):
        if not self.cap_min <= self.cap_initial <= self.cap_max:
            raise ValueError("need cap_min <= cap_initial <= cap_max")
        if self.p_ch_max <= 0 or self.p_dc_max <= 0:
            raise ValueError("exchange rate limits must be positive")
        for label, eff in (("eff_ch", self.eff_ch), ("eff_dc", self.eff_dc)):
            if not 0 < eff <= 1:
                raise ValueError(f"{label} must lie in (0, 1]")
        if self.reserve_price < 0:
            raise ValueError("reserve_price must be >= 0")


@dataclass(frozen=True)
class TOUSchedule:
    """Per-period purchase and sale energy prices, $/kWh."""

    purchase: np.ndarray
    sale: np.ndarray

    def __post_init__(self):
        purchase = np.ascontiguousarray(self.purchase, dtype=np.float64)
        sale = np.ascontiguousarray(self.sale, dtype=np.float64)
        if purchase.shape != sale.shape or purchase.ndim != 1:
            raise ValueError("purchase and sale price vectors must match")
        if np.any(purchase < 0) or np.any(sale < 0):
            raise ValueError("prices must be non-negative")
        if np.any(sale > purchase + 1e-12):
            raise ValueError("sale price may not exceed purchase price")
        object.__setattr__(self, "purchase", purchase)
        object.__setattr__(self, "sale", sale)


@dataclass
class Scenario:
    """Full description of one day-ahead dispatch case."""

    name: str
    horizon: int
    dt: float
    units: tuple[MTUnit, ...]
    ess: ESSParams
    tou: TOUSchedule
    wind: tuple[WindParams, ...]
    pv: tuple[PVParams, ...]
    load: tuple[LoadParams, ...]
    confidence_alpha: float
    step_q: float
    controllable_load: np.ndarray = None
    forecast_wt: np.ndarray = None
    forecast_pv: np.ndarray = None
    forecast_load: np.ndarray = None
    description: str = ""

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.5 < self.confidence_alpha < 1.0:
            raise ValueError("confidence_alpha must lie in (0.5, 1)")
        if self.step_q <= 0:
            raise ValueError("step_q must be positive")
        if not self.units:
            raise ValueError("at least one dispatchable unit is required")
        T = self.horizon
        for label in ("wind", "pv", "load"):
            if len(getattr(self, label)) != T:
                raise ValueError(f"{label} parameters must cover {T} periods")
        if self.tou.purchase.size != T:
            raise ValueError(f"TOU schedule must cover {T} periods")
        if self.controllable_load is None:
            self.controllable_load = np.zeros(T)
        self.controllable_load = np.ascontiguousarray(self.controllable_load,
                                                      dtype=np.float64)
        if self.controllable_load.size != T:
            raise ValueError("controllable_load must cover the horizon")
        if self.forecast_wt is None:
            self.forecast_wt = np.array([distribution_mean(w) for w in self.wind])
        if self.forecast_pv is None:
            self.forecast_pv = np.array([distribution_mean(p) for p in self.pv])
        if self.forecast_load is None:
            self.forecast_load = np.array([distribution_mean(l) for l in self.load])
        for label in ("forecast_wt", "forecast_pv", "forecast_load"):
            arr = np.ascontiguousarray(getattr(self, label), dtype=np.float64)
            if arr.size != T:
                raise ValueError(f"{label} must cover the horizon")
            setattr(self, label, arr)

    @property
    def n_units(self) -> int:
        return len(self.units)

    def unit_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(u, attr) for u in self.units], dtype=np.float64)


def derive_startups(u: np.ndarray, initial_on: np.ndarray) -> np.ndarray:
    """Start-up indicators: positive edges of the commitment pattern."""
    prev = np.concatenate([initial_on.reshape(-1, 1).astype(np.float64),
                           u[:, :-1]], axis=1)
    return np.maximum(u - prev, 0.0)


@dataclass
class DecisionVector:
    """One candidate schedule; start-ups are always derived, never free."""

    u: np.ndarray       # (M, T) commitment, values 0.0 / 1.0
    p_mt: np.ndarray    # (M, T) unit output, kW
    r_mt: np.ndarray    # (M, T) unit spinning reserve, kW
    p_ch: np.ndarray    # (T,) storage charge, kW
    p_dc: np.ndarray    # (T,) storage discharge, kW
    p_res: np.ndarray   # (T,) storage reserve band, kW
    s: np.ndarray = None  # (M, T) start-ups, derived from u

    def __post_init__(self):
        for label in ("u", "p_mt", "r_mt", "p_ch", "p_dc", "p_res"):
            setattr(self, label,
                    np.ascontiguousarray(getattr(self, label), dtype=np.float64))
        if self.s is None:
            self.s = derive_startups(self.u, np.zeros(self.u.shape[0]))
        else:
            self.s = np.ascontiguousarray(self.s, dtype=np.float64)

    @classmethod
    def zeros(cls, n_units: int, horizon: int) -> "DecisionVector":
        return cls(u=np.zeros((n_units, horizon)),
                   p_mt=np.zeros((n_units, horizon)),
                   r_mt=np.zeros((n_units, horizon)),
                   p_ch=np.zeros(horizon),
                   p_dc=np.zeros(horizon),
                   p_res=np.zeros(horizon))

    def copy(self) -> "DecisionVector":
        return DecisionVector(u=self.u.copy(), p_mt=self.p_mt.copy(),
                              r_mt=self.r_mt.copy(), p_ch=self.p_ch.copy(),
                              p_dc=self.p_dc.copy(), p_res=self.p_res.copy(),
                              s=self.s.copy())


@dataclass(frozen=True)
class ObjectiveVector:
    f1_cost: float
    f2_emissions: float
    f3_satisfaction: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f1_cost, self.f2_emissions, self.f3_satisfaction])

    def as_min_array(self) -> np.ndarray:
        """All-minimization form: satisfaction flipped to (100 - F3)."""
        return np.array([self.f1_cost, self.f2_emissions,
                         100.0 - self.f3_satisfaction])


# ---------------------------------------------------------------------------
# equivalent-load preprocessing
# ---------------------------------------------------------------------------

@dataclass
class EquivalentLoad:
    """Per-period equivalent-load sequences and expectations."""

    seqs: tuple[ProbSeq, ...]
    e_el: np.ndarray  # signed expected net load per period, kW
    _req_cache: dict = field(default_factory=dict, repr=False)

    def required_reserve(self, alpha: float) -> np.ndarray:
        """Smallest grid-aligned reserve meeting confidence alpha, per period."""
        key = float(alpha)
        if key not in self._req_cache:
            self._req_cache[key] = np.array(
                [min_required_reserve(seq, e, key)
                 for seq, e in zip(self.seqs, self.e_el)])
        return self._req_cache[key]


def build_equivalent_load(sc: Scenario) -> EquivalentLoad:
    """Discretize each period's models and convolve them into the
    equivalent-load sequence (load minus wind minus PV, floored at zero)."""
    seqs = []
    e_el = np.empty(sc.horizon)
    for t in range(sc.horizon):
        a = discretize(sc.wind[t], sc.step_q)
        b = discretize(sc.pv[t], sc.step_q)
        d = discretize(sc.load[t], sc.step_q)
        c = seq_add(a, b)
        seqs.append(seq_sub_floor(d, c))
        e_el[t] = expected_equivalent_load(d, a, b)
    return EquivalentLoad(seqs=tuple(seqs), e_el=e_el)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

def eval_cost(dv: DecisionVector, sc: Scenario) -> float:
    """Operating cost in $: storage exchange settled at TOU prices (charge
    bought at purchase price, discharge credited at sale price), unit
    reserve cost, start-up plus fuel cost, and the storage reserve cost."""
    exchange = float(np.dot(sc.tou.purchase, dv.p_ch)
                     - np.dot(sc.tou.sale, dv.p_dc)) * sc.dt
    sigma = sc.unit_array("reserve_price_sigma")
    reserve_mt = float(sigma @ dv.r_mt.sum(axis=1))
    kappa = sc.unit_array("startstop_cost_kappa")
    zeta = sc.unit_array("fuel_zeta")
    psi = sc.unit_array("fuel_psi")
    fuel = float((kappa @ dv.s.sum(axis=1))
                 + (zeta @ dv.u.sum(axis=1))
                 + (psi @ (dv.u * dv.p_mt).sum(axis=1)))
    reserve_ess = sc.ess.reserve_price * float(dv.p_res.sum())
    return exchange + reserve_mt + fuel + reserve_ess


def eval_emissions(dv: DecisionVector, sc: Scenario) -> float:
    """Total gas emissions in kg across all units, gases and periods."""
    per_unit_rate = np.array([sum(u.emission_coeffs) for u in sc.units])
    grams = float(per_unit_rate @ dv.p_mt.sum(axis=1)) * sc.dt
    return grams / 1000.0


def eval_satisfaction(dv: DecisionVector, sc: Scenario) -> float:
    """Share of forecast demand energy covered by generation plus net
    storage discharge, in percent, capped at 100."""
    total_load = float(sc.forecast_load.sum())
    if total_load <= 0:
        raise ValueError("total forecast load must be positive")
    supplied = float(dv.p_mt.sum() + sc.forecast_pv.sum() + sc.forecast_wt.sum()
                     + dv.p_dc.sum() - dv.p_ch.sum())
    return min(100.0, 100.0 * supplied / total_load)


def evaluate(dv: DecisionVector, sc: Scenario) -> ObjectiveVector:
    return ObjectiveVector(f1_cost=eval_cost(dv, sc),
                           f2_emissions=eval_emissions(dv, sc),
                           f3_satisfaction=eval_satisfaction(dv, sc))


# ---------------------------------------------------------------------------
# chance constraint
# ---------------------------------------------------------------------------

def _covered_index(total_reserve: float, e_el: float, q: float) -> int:
    # largest sequence index whose shortfall the reserve still covers
    return int(math.floor((total_reserve + e_el) / q + 1e-9))


def reserve_chance_satisfied(total_reserve: float, el_seq: ProbSeq,
                             e_el: float, alpha: float) -> bool:
    """True when the reserve covers the net-load deviation with probability
    at least alpha under the discretized equivalent-load distribution."""
    u_max = _covered_index(total_reserve, e_el, el_seq.step_q)
    if u_max < 0:
        return 0.0 >= alpha
    cdf = np.cumsum(el_seq.probs)
    return bool(cdf[min(u_max, cdf.size - 1)] >= alpha)


def min_required_reserve(el_seq: ProbSeq, e_el: float, alpha: float) -> float:
    """Smallest reserve on the grid {u*q - e_el} with coverage >= alpha,
    floored at zero."""
    cdf = np.cumsum(el_seq.probs)
    u_star = int(np.searchsorted(cdf, alpha, side="left"))
    u_star = min(u_star, cdf.size - 1)
    return max(0.0, u_star * el_seq.step_q - e_el)


# ---------------------------------------------------------------------------
# constraint report
# ---------------------------------------------------------------------------

@dataclass
class ConstraintReport:
    """Signed balance mismatch plus per-constraint violation magnitudes.

    A positive balance mismatch is unusable excess supply; a negative one
    is deliberate under-service and is not a violation (it is priced by the
    satisfaction objective instead).
    """

    balance_mismatch: np.ndarray      # (T,) signed: supply minus target
    mt_box: np.ndarray                # (M, T) output outside committed box
    startup_mismatch: np.ndarray      # (M, T) start-up flags vs derived
    exchange_rate: np.ndarray         # (T,) charge/discharge rate excess
    simultaneous_exchange: np.ndarray  # (T,) overlap of charge and discharge
    soc_bounds: np.ndarray            # (T+1,) energy outside capacity window
    mt_reserve_headroom: np.ndarray   # (M, T) output+reserve above capacity
    ess_reserve_cap: np.ndarray       # (T,) reserve band above storage margin
    chance_shortfall: np.ndarray      # (T,) reserve short of the alpha level
    chance_ok: np.ndarray             # (T,) bool per period
    soc: np.ndarray                   # (T+1,) stored energy trajectory

    def violation_total(self) -> float:
        """Aggregate violation in kW-equivalents (over-supply side only)."""
        return float(np.maximum(self.balance_mismatch, 0.0).sum()
                     + self.mt_box.sum()
                     + self.startup_mismatch.sum()
                     + self.exchange_rate.sum()
                     + self.simultaneous_exchange.sum()
                     + self.soc_bounds.sum()
                     + self.mt_reserve_headroom.sum()
                     + self.ess_reserve_cap.sum()
                     + self.chance_shortfall.sum())

    def feasible(self, tol: float = 1e-6) -> bool:
        return self.violation_total() <= tol

    def penalty(self) -> float:
        return PENALTY_WEIGHT * self.violation_total()


def soc_trajectory(dv: DecisionVector, sc: Scenario) -> np.ndarray:
    """Stored energy before each period (length T+1), from the exchange
    recursion with charge/discharge efficiencies."""
    ess = sc.ess
    soc = np.empty(sc.horizon + 1)
    soc[0] = ess.cap_initial
    for t in range(sc.horizon):
        soc[t + 1] = (soc[t] + ess.eff_ch * dv.p_ch[t] * sc.dt
                      - dv.p_dc[t] * sc.dt / ess.eff_dc)
    return soc


def check_constraints(dv: DecisionVector, sc: Scenario,
                      el: EquivalentLoad) -> ConstraintReport:
    """Evaluate every operating constraint; infeasibility is data, not an
    error."""
    ess = sc.ess
    p_min = sc.unit_array("p_min")[:, None]
    p_max = sc.unit_array("p_max")[:, None]
    initial_on = np.array([1.0 if u.initial_on else 0.0 for u in sc.units])

    target = el.e_el + sc.controllable_load
    net = dv.p_mt.sum(axis=0) + dv.p_dc - dv.p_ch
    balance = net - target

    mt_box = np.maximum(dv.u * p_min - dv.p_mt, 0.0) \
        + np.maximum(dv.p_mt - dv.u * p_max, 0.0) \
        + np.maximum(-dv.p_mt, 0.0) + np.maximum(-dv.r_mt, 0.0)
    startup = np.abs(dv.s - derive_startups(dv.u, initial_on))

    rate = np.maximum(dv.p_ch - ess.p_ch_max, 0.0) + np.maximum(-dv.p_ch, 0.0) \
        + np.maximum(dv.p_dc - ess.p_dc_max, 0.0) + np.maximum(-dv.p_dc, 0.0)
    simultaneous = np.where((dv.p_ch > 0) & (dv.p_dc > 0),
                            np.minimum(dv.p_ch, dv.p_dc), 0.0)

    soc = soc_trajectory(dv, sc)
    soc_bounds = np.maximum(soc - ess.cap_max, 0.0) \
        + np.maximum(ess.cap_min - soc, 0.0)

    headroom = np.maximum(dv.p_mt + dv.r_mt - dv.u * p_max, 0.0)
    res_cap = np.minimum(ess.eff_dc * (soc[:-1] - ess.cap_min) / sc.dt,
                         ess.p_dc_max - dv.p_dc)
    ess_res = np.maximum(dv.p_res - np.maximum(res_cap, 0.0), 0.0) \
        + np.maximum(-dv.p_res, 0.0)

    total_reserve = dv.r_mt.sum(axis=0) + dv.p_res
    required = el.required_reserve(sc.confidence_alpha)
    shortfall = np.maximum(required - total_reserve, 0.0)
    chance_ok = np.array([
        reserve_chance_satisfied(total_reserve[t], el.seqs[t], el.e_el[t],
                                 sc.confidence_alpha)
        for t in range(sc.horizon)])

    return ConstraintReport(balance_mismatch=balance, mt_box=mt_box,
                            startup_mismatch=startup, exchange_rate=rate,
                            simultaneous_exchange=simultaneous,
                            soc_bounds=soc_bounds,
                            mt_reserve_headroom=headroom,
                            ess_reserve_cap=ess_res,
                            chance_shortfall=shortfall,
                            chance_ok=chance_ok, soc=soc)


# ---------------------------------------------------------------------------
# repair
# ---------------------------------------------------------------------------

def repair(dv: DecisionVector, sc: Scenario,
           el: EquivalentLoad) -> tuple[DecisionVector, float]:
    """Project a raw genotype onto the feasible region as far as box,
    trajectory and reserve constraints allow.

    Commitments are snapped to {0, 1}; committed outputs are clamped into
    their boxes; simultaneous charge/discharge is resolved in favour of the
    larger leg; excess supply is trimmed (discharge first, then outputs,
    then absorbed by charging); the storage trajectory is clamped forward
    in time; reserves are capped to headroom and then lifted toward the
    per-period chance-constraint requirement.  Returns the repaired vector
    and its residual penalty (unresolved excess supply and reserve
    shortfall at PENALTY_WEIGHT $/kW); everything else is feasible by
    construction.
    """
    ess = sc.ess
    u = np.where(dv.u > 0.5, 1.0, 0.0)
    p_mt = dv.p_mt.copy()
    r_mt = dv.r_mt.copy()
    p_ch = dv.p_ch.copy()
    p_dc = dv.p_dc.copy()
    p_res = dv.p_res.copy()
    target = el.e_el + sc.controllable_load
    required = el.required_reserve(sc.confidence_alpha)

    _, over, shortfall = repair_pass(
        u, p_mt, r_mt, p_ch, p_dc, p_res,
        sc.unit_array("p_min"), sc.unit_array("p_max"),
        ess.cap_min, ess.cap_max, ess.cap_initial,
        ess.p_ch_max, ess.p_dc_max, ess.eff_ch, ess.eff_dc, sc.dt,
        target, required)

    initial_on = np.array([1.0 if un.initial_on else 0.0 for un in sc.units])
    repaired = DecisionVector(u=u, p_mt=p_mt, r_mt=r_mt, p_ch=p_ch,
                              p_dc=p_dc, p_res=p_res,
                              s=derive_startups(u, initial_on))
    penalty = PENALTY_WEIGHT * float(over.sum() + shortfall.sum())
    return repaired, penalty
