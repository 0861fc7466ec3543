"""Closed-form uncertainty models for wind, PV and load, plus discretization
into fixed-step probability sequences.

Wind speed is Weibull distributed and maps through a linear turbine power
curve, which leaves point masses at zero output (below cut-in / above
cut-out) and at rated output (between rated and cut-out speeds).  PV output
follows a scaled Beta distribution and load a Gaussian.  ``discretize``
turns any of the three into a :class:`ProbSeq`, the common currency of the
sequence algebra: ``probs[i]`` is the probability that the power lies in
the bin centred at ``i * step_q`` kW.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

# absolute tolerance for every quadrature in this module
QUAD_ABS_TOL = 1e-9

# Gaussian support is cut at +/- 5 sigma before binning (tail mass < 6e-7)
LOAD_TRUNC_SIGMAS = 5.0


@dataclass(frozen=True)
class WindParams:
    """Weibull wind-speed model and turbine power curve."""

    shape_k: float
    scale_gamma: float
    v_in: float
    v_rated: float
    v_out: float
    p_rated: float

    def __post_init__(self):
        if not (self.shape_k > 0 and self.scale_gamma > 0):
            raise ValueError("Weibull shape and scale must be positive")
        if not (0 < self.v_in < self.v_rated < self.v_out):
            raise ValueError("need 0 < v_in < v_rated < v_out")
        if not self.p_rated > 0:
            raise ValueError("rated power must be positive")


@dataclass(frozen=True)
class PVParams:
    """Beta-distributed PV output; p_max = 0 denotes a dark period."""

    lambda1: float
    lambda2: float
    p_max: float
    area: float | None = None
    efficiency: float | None = None
    r_max: float | None = None

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("Beta shape parameters must be positive")
        if self.p_max < 0:
            raise ValueError("p_max must be non-negative")
        if None not in (self.area, self.efficiency, self.r_max):
            expected = self.r_max * self.area * self.efficiency / 1000.0
            if not math.isclose(self.p_max, expected, rel_tol=1e-6):
                raise ValueError(
                    "p_max inconsistent with r_max * area * efficiency")


@dataclass(frozen=True)
class LoadParams:
    """Gaussian load; std_sigma = 0 is a degenerate (deterministic) load."""

    mean_mu: float
    std_sigma: float

    def __post_init__(self):
        if self.mean_mu < 0 or self.std_sigma < 0:
            raise ValueError("load mean and std must be non-negative")


@dataclass(frozen=True)
class ProbSeq:
    """Discrete distribution over power levels ``i * step_q`` kW."""

    step_q: float
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.step_q > 0:
            raise ValueError("step_q must be positive")
        arr = np.ascontiguousarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(arr < 0):
            raise ValueError("probabilities must be non-negative")
        total = arr.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.size

    @property
    def powers(self) -> np.ndarray:
        return np.arange(self.probs.size) * self.step_q


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def wind_speed_pdf(v: float, wp: WindParams) -> float:
    """Weibull density of the wind speed at v m/s."""
    if not math.isfinite(v):
        raise ValueError("wind speed must be finite")
    if v < 0:
        raise ValueError("wind speed must be non-negative")
    k, g = wp.shape_k, wp.scale_gamma
    if v == 0.0:
        if k > 1:
            return 0.0
        if k == 1:
            return 1.0 / g
        return math.inf
    z = v / g
    return (k / g) * z ** (k - 1) * math.exp(-z ** k)


def _speed_at(p: float, wp: WindParams) -> float:
    # inverse of the linear power curve on [v_in, v_rated]
    h = wp.v_rated / wp.v_in - 1.0
    return (1.0 + h * p / wp.p_rated) * wp.v_in


def wt_output_pdf(p: float, wp: WindParams) -> float:
    """Continuous branch of the turbine output density at p kW.

    The distribution also carries point masses at 0 and p_rated; see
    :func:`wt_point_masses`.
    """
    if not math.isfinite(p):
        raise ValueError("power must be finite")
    if p < 0 or p > wp.p_rated:
        raise ValueError("power outside [0, p_rated]")
    k, g = wp.shape_k, wp.scale_gamma
    h = wp.v_rated / wp.v_in - 1.0
    v = _speed_at(p, wp)
    z = v / g
    return (k * h * wp.v_in / (g * wp.p_rated)) * z ** (k - 1) * math.exp(-z ** k)


def _weibull_sf(v: float, wp: WindParams) -> float:
    return math.exp(-((v / wp.scale_gamma) ** wp.shape_k))


def wt_point_masses(wp: WindParams) -> tuple[float, float]:
    """(mass at zero output, mass at rated output)."""
    at_zero = (1.0 - _weibull_sf(wp.v_in, wp)) + _weibull_sf(wp.v_out, wp)
    at_rated = _weibull_sf(wp.v_rated, wp) - _weibull_sf(wp.v_out, wp)
    return at_zero, at_rated


def pv_output_pdf(p: float, pv: PVParams) -> float:
    """Beta-shaped density of the PV output at p kW."""
    if pv.p_max <= 0:
        raise ValueError("degenerate PV (p_max = 0) has no density; "
                         "discretize() represents it as a point mass at 0")
    if not math.isfinite(p):
        raise ValueError("power must be finite")
    if p < 0 or p > pv.p_max:
        raise ValueError("power outside [0, p_max]")
    a, b = pv.lambda1, pv.lambda2
    x = p / pv.p_max
    log_norm = gammaln(a + b) - gammaln(a) - gammaln(b)
    if x == 0.0 or x == 1.0:
        # boundary values only matter under an integral
        shape = a if x == 0.0 else b
        if shape < 1:
            return math.inf
        if shape > 1:
            return 0.0
        return math.exp(log_norm) / pv.p_max
    return math.exp(log_norm + (a - 1) * math.log(x) + (b - 1) * math.log1p(-x)) / pv.p_max


def load_pdf(p: float, lp: LoadParams) -> float:
    """Gaussian load density at p kW."""
    if lp.std_sigma <= 0:
        raise ValueError("degenerate load (sigma = 0) has no density; "
                         "discretize() represents it as a point mass")
    z = (p - lp.mean_mu) / lp.std_sigma
    return math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * lp.std_sigma)


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------

def _bin_edges(n_bins: int, q: float, lower: float, upper: float):
    # bin i covers [iq - q/2, iq + q/2] intersected with the support
    for i in range(n_bins + 1):
        lo = max(lower, i * q - q / 2.0)
        hi = min(upper, i * q + q / 2.0)
        yield i, lo, hi


def _discretize_density(pdf, lower: float, upper: float, q: float,
                        masses: dict[int, float] | None = None) -> ProbSeq:
    n = int(round(upper / q))
    probs = np.zeros(max(n, 0) + 1)
    if upper > lower:
        for i, lo, hi in _bin_edges(n, q, lower, upper):
            if hi > lo:
                val, _ = integrate.quad(pdf, lo, hi, epsabs=QUAD_ABS_TOL,
                                        limit=200)
                probs[i] += val
    if masses:
        for i, m in masses.items():
            probs[min(i, n)] += m
    total = probs.sum()
    if total <= 0:
        raise ValueError("discretization captured no probability mass")
    probs /= total
    if probs.size == 1:
        warnings.warn("discretization step exceeds the distribution support; "
                      "returning a single-entry sequence", stacklevel=3)
    return ProbSeq(step_q=q, probs=probs)


def discretize(params: WindParams | PVParams | LoadParams, q: float) -> ProbSeq:
    """Bin a wind, PV or load distribution onto the q-kW grid.

    Bin 0 integrates [0, q/2] plus any point mass at zero; interior bin i
    integrates [iq - q/2, iq + q/2]; the last bin picks up the remaining
    support and any boundary mass.  The result is renormalized so it sums
    to exactly 1.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    if isinstance(params, WindParams):
        m0, m1 = wt_point_masses(params)
        n_top = int(round(params.p_rated / q))
        return _discretize_density(lambda p: wt_output_pdf(p, params),
                                   0.0, params.p_rated, q,
                                   masses={0: m0, n_top: m1})
    if isinstance(params, PVParams):
        if params.p_max <= 0:
            return ProbSeq(step_q=q, probs=np.array([1.0]))
        return _discretize_density(lambda p: pv_output_pdf(p, params),
                                   0.0, params.p_max, q)
    if isinstance(params, LoadParams):
        if params.std_sigma == 0:
            idx = int(round(params.mean_mu / q))
            probs = np.zeros(idx + 1)
            probs[idx] = 1.0
            if probs.size == 1 and params.mean_mu > 0:
                warnings.warn("discretization step exceeds the load support",
                              stacklevel=2)
            return ProbSeq(step_q=q, probs=probs)
        lower = max(0.0, params.mean_mu - LOAD_TRUNC_SIGMAS * params.std_sigma)
        upper = params.mean_mu + LOAD_TRUNC_SIGMAS * params.std_sigma
        return _discretize_density(lambda p: load_pdf(p, params),
                                   lower, upper, q)
    raise TypeError(f"cannot discretize {type(params).__name__}")


def distribution_mean(params: WindParams | PVParams | LoadParams) -> float:
    """Analytic mean power of a wind, PV or load model, in kW."""
    if isinstance(params, WindParams):
        _, m_rated = wt_point_masses(params)
        cont, _ = integrate.quad(lambda p: p * wt_output_pdf(p, params),
                                 0.0, params.p_rated, epsabs=QUAD_ABS_TOL,
                                 limit=200)
        return cont + m_rated * params.p_rated
    if isinstance(params, PVParams):
        return params.p_max * params.lambda1 / (params.lambda1 + params.lambda2)
    if isinstance(params, LoadParams):
        return params.mean_mu
    raise TypeError(f"no mean defined for {type(params).__name__}")
