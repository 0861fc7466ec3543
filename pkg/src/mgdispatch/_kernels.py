"""Hot numeric kernels with a numba JIT path and a pure-numpy fallback.

The backend is chosen once at import time: numba is used when available
unless the environment variable ``MGDISPATCH_NUMBA`` is set to ``0``.
Both paths accumulate floating-point terms in the same order, so they
produce bit-identical results; ``benchmarks/bench_kernels.py`` compares
their speed.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("MGDISPATCH_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# probability-sequence convolutions
# ---------------------------------------------------------------------------

def _conv_add_loops(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    out = np.zeros(na + nb - 1)
    for ia in range(na):
        for ib in range(nb):
            out[ia + ib] += a[ia] * b[ib]
    return out


def _conv_add_numpy(a, b):
    # slot (ia+ib) receives its terms in increasing ia, matching the loop order
    na = a.shape[0]
    nb = b.shape[0]
    out = np.zeros(na + nb - 1)
    for ia in range(na):
        out[ia:ia + nb] += a[ia] * b
    return out


def _conv_sub_floor_loops(d, c):
    nd = d.shape[0]
    nc = c.shape[0]
    out = np.zeros(nd)
    for idx in range(nd):
        for ic in range(nc):
            k = idx - ic
            if k <= 0:
                out[0] += d[idx] * c[ic]
            else:
                out[k] += d[idx] * c[ic]
    return out


def _conv_sub_floor_numpy(d, c):
    # outer-product diagonals reproduce the loop accumulation order exactly:
    # cumsum is sequential, so each slot sums its terms in increasing ic
    nd = d.shape[0]
    nc = c.shape[0]
    out = np.zeros(nd)
    prod = np.outer(d, c)
    floored = prod[np.greater_equal.outer(np.arange(nc), np.arange(nd)).T]
    if floored.size:
        out[0] = floored.cumsum()[-1]
    for k in range(1, nd):
        diag = np.diagonal(prod, offset=-k)
        if diag.size:
            out[k] = diag.cumsum()[-1]
    return out


# ---------------------------------------------------------------------------
# schedule repair pass
# ---------------------------------------------------------------------------

def _repair_pass_impl(u, p_mt, r_mt, p_ch, p_dc, p_res,
                      p_min, p_max, cap_min, cap_max, cap_init,
                      ch_max, dc_max, eff_ch, eff_dc, dt,
                      target, req_reserve):
    """Forward-in-time feasibility pass over one schedule (arrays modified
    in place).

    Per period: clamp unit outputs into their committed boxes, forbid
    simultaneous charge/discharge, trim any supply in excess of the net
    demand target, clamp the storage trajectory, cap reserves to available
    headroom, and lift unit reserves toward the per-period reserve
    requirement.  Returns (soc, over_residual, reserve_shortfall) where soc
    holds the start-of-period stored energy.
    """
    n_units = u.shape[0]
    horizon = u.shape[1]
    soc = np.empty(horizon + 1)
    over_residual = np.zeros(horizon)
    shortfall = np.zeros(horizon)
    soc[0] = cap_init
    for t in range(horizon):
        # committed boxes
        for n in range(n_units):
            if u[n, t] > 0.5:
                u[n, t] = 1.0
                if p_mt[n, t] < p_min[n]:
                    p_mt[n, t] = p_min[n]
                elif p_mt[n, t] > p_max[n]:
                    p_mt[n, t] = p_max[n]
                if r_mt[n, t] < 0.0:
                    r_mt[n, t] = 0.0
            else:
                u[n, t] = 0.0
                p_mt[n, t] = 0.0
                r_mt[n, t] = 0.0
        # exchange-rate boxes, one-sided exchange
        if p_ch[t] < 0.0:
            p_ch[t] = 0.0
        elif p_ch[t] > ch_max:
            p_ch[t] = ch_max
        if p_dc[t] < 0.0:
            p_dc[t] = 0.0
        elif p_dc[t] > dc_max:
            p_dc[t] = dc_max
        if p_ch[t] > 0.0 and p_dc[t] > 0.0:
            if p_ch[t] >= p_dc[t]:
                p_dc[t] = 0.0
            else:
                p_ch[t] = 0.0
        # stored-energy trajectory clamps (before the balance trim, so the
        # trim sees the exchange powers that are actually deliverable)
        if p_ch[t] > 0.0:
            head = (cap_max - soc[t]) / (eff_ch * dt)
            if p_ch[t] > head:
                p_ch[t] = head if head > 0.0 else 0.0
        if p_dc[t] > 0.0:
            avail = (soc[t] - cap_min) * eff_dc / dt
            if p_dc[t] > avail:
                p_dc[t] = avail if avail > 0.0 else 0.0
        # supply may not exceed the net demand target: trim discharge, then
        # unit outputs toward their minima, then absorb by charging
        mt_sum = 0.0
        for n in range(n_units):
            mt_sum += p_mt[n, t]
        over = mt_sum + p_dc[t] - p_ch[t] - target[t]
        # sub-nano-kW excess is float noise; ignoring it keeps repair idempotent
        if over > 1e-9:
            cut = over if over < p_dc[t] else p_dc[t]
            p_dc[t] -= cut
            over -= cut
        if over > 1e-9:
            slack = 0.0
            for n in range(n_units):
                slack += p_mt[n, t] - p_min[n] * u[n, t]
            cut = over if over < slack else slack
            if cut > 0.0 and slack > 0.0:
                frac = cut / slack
                for n in range(n_units):
                    p_mt[n, t] -= frac * (p_mt[n, t] - p_min[n] * u[n, t])
                over -= cut
        if over > 1e-9 and p_dc[t] == 0.0:
            room = ch_max - p_ch[t]
            head = (cap_max - soc[t]) / (eff_ch * dt) - p_ch[t]
            if head < room:
                room = head
            add = over if over < room else room
            if add > 0.0:
                p_ch[t] += add
                over -= add
        if over > 1e-9:
            over_residual[t] = over
        soc[t + 1] = soc[t] + eff_ch * p_ch[t] * dt - p_dc[t] * dt / eff_dc
        # reserve caps: unit headroom, then storage margin
        for n in range(n_units):
            head = u[n, t] * p_max[n] - p_mt[n, t]
            if r_mt[n, t] > head:
                r_mt[n, t] = head if head > 0.0 else 0.0
        res_cap = eff_dc * (soc[t] - cap_min) / dt
        other = dc_max - p_dc[t]
        if other < res_cap:
            res_cap = other
        if res_cap < 0.0:
            res_cap = 0.0
        if p_res[t] < 0.0:
            p_res[t] = 0.0
        elif p_res[t] > res_cap:
            p_res[t] = res_cap
        # lift unit reserves toward the probabilistic requirement
        total = p_res[t]
        for n in range(n_units):
            total += r_mt[n, t]
        need = req_reserve[t] - total
        if need > 1e-9:
            head_sum = 0.0
            for n in range(n_units):
                head_sum += u[n, t] * p_max[n] - p_mt[n, t] - r_mt[n, t]
            lift = need if need < head_sum else head_sum
            if lift > 0.0 and head_sum > 0.0:
                frac = lift / head_sum
                for n in range(n_units):
                    r_mt[n, t] += frac * (u[n, t] * p_max[n] - p_mt[n, t] - r_mt[n, t])
                need -= lift
        if need > 1e-9:
            shortfall[t] = need
    return soc, over_residual, shortfall


if USE_NUMBA:
    conv_add = njit(cache=True)(_conv_add_loops)
    conv_sub_floor = njit(cache=True)(_conv_sub_floor_loops)
    repair_pass = njit(cache=True)(_repair_pass_impl)
else:
    conv_add = _conv_add_numpy
    conv_sub_floor = _conv_sub_floor_numpy
    repair_pass = _repair_pass_impl


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
