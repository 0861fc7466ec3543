"""Reference-point multi-objective evolutionary search.

Selection works on a penalty-then-theta comparison: schedules with lower
residual violation always win; among violation-free schedules the union is
clustered onto reference lines through the origin of the normalized
objective space, and within each cluster individuals are ranked by
Upsilon = Dis1 + theta * Dis2 (distance along the line plus penalized
distance from it).  Variation is hybrid: simulated binary crossover and
polynomial mutation on the continuous genes, uniform crossover and
bit-flips on the commitment bits; every offspring is repaired before
evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispatch import (DecisionVector, EquivalentLoad, ObjectiveVector,
                       Scenario, build_equivalent_load, eval_cost,
                       eval_emissions, eval_satisfaction, repair)


@dataclass
class ThetaDeaParams:
    theta: float = 5.0
    pop_size: int = 100
    generations: int = 100
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # default: 1/#genes per gene family
    sbx_eta: float = 15.0
    pm_eta: float = 20.0
    rng_seed: int = 1
    ref_divisions: int | None = None    # default: smallest h giving >= pop_size points

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.pop_size < 4 or self.pop_size % 2:
            raise ValueError("pop_size must be even and >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")


@dataclass
class Individual:
    genotype: DecisionVector
    objectives: ObjectiveVector
    norm_objectives: np.ndarray | None = None
    cluster_id: int = -1
    theta_fitness: float = math.nan
    feasibility_penalty: float = 0.0


@dataclass
class OptimizeResult:
    archive: list[Individual]
    feasible: bool
    best_penalty: float
    history: np.ndarray          # running best feasible scalarization per generation
    generations_run: int


# ---------------------------------------------------------------------------
# reference points and geometry
# ---------------------------------------------------------------------------

def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def generate_reference_points(m: int, h: int) -> np.ndarray:
    """Simplex-lattice directions with coordinate granularity 1/h;
    C(h+m-1, m-1) points in a fixed enumeration order."""
    if m < 2 or h < 1:
        raise ValueError("need m >= 2 and h >= 1")
    return np.array(list(_compositions(h, m)), dtype=np.float64) / h


def default_divisions(m: int, pop_size: int) -> int:
    h = 1
    while math.comb(h + m - 1, m - 1) < pop_size:
        h += 1
    return h


def normalize_objectives(f_min: np.ndarray) -> np.ndarray:
    """Min-max scale each column of an all-minimization objective matrix;
    a constant column maps to zero."""
    ideal = f_min.min(axis=0)
    span = f_min.max(axis=0) - ideal
    out = np.zeros_like(f_min)
    ok = span > 1e-12
    out[:, ok] = (f_min[:, ok] - ideal[ok]) / span[ok]
    return out


def normalize(pop: list[Individual]) -> list[Individual]:
    """Attach norm_objectives to every individual (satisfaction is flipped
    to 100 - F3 so all axes minimize)."""
    if not pop:
        raise ValueError("population must be non-empty")
    f_min = np.array([ind.objectives.as_min_array() for ind in pop])
    normed = normalize_objectives(f_min)
    for ind, row in zip(pop, normed):
        ind.norm_objectives = row
    return pop


def theta_fitness(fnorm: np.ndarray, ref: np.ndarray, theta: float) -> float:
    """Upsilon = Dis1 + theta * Dis2 against the line through the origin
    and the reference point."""
    norm_ref = float(np.linalg.norm(ref))
    if norm_ref == 0.0:
        raise ValueError("reference vector must be non-zero")
    lam = ref / norm_ref
    along = float(np.dot(fnorm, lam))
    d1 = abs(along)
    d2 = float(np.linalg.norm(fnorm - along * lam))
    return d1 + theta * d2


def _associate(f_norm: np.ndarray, refs: np.ndarray):
    """Cluster ids, perpendicular and along-line distances for a batch."""
    unit = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    along = f_norm @ unit.T                              # (N, K)
    sq = np.einsum("ij,ij->i", f_norm, f_norm)[:, None]
    d2_all = np.sqrt(np.maximum(sq - along ** 2, 0.0))
    ids = np.argmin(d2_all, axis=1)                      # ties: lowest index
    rows = np.arange(f_norm.shape[0])
    return ids, d2_all[rows, ids], np.abs(along[rows, ids])


def assign_clusters(pop: list[Individual], refs: np.ndarray) -> list[Individual]:
    """Assign each individual to the reference line it is closest to
    (perpendicular distance, ties to the lowest reference index)."""
    f_norm = np.array([ind.norm_objectives for ind in pop])
    ids, _, _ = _associate(f_norm, refs)
    for ind, cid in zip(pop, ids):
        ind.cluster_id = int(cid)
    return pop


def _theta_rank(f_norm: np.ndarray, refs: np.ndarray, theta: float,
                tiebreak: np.ndarray):
    """Per-individual (front, upsilon, cluster): front = rank within the
    cluster by ascending upsilon, stable on the tiebreak index."""
    ids, d2, d1 = _associate(f_norm, refs)
    ups = d1 + theta * d2
    order = np.lexsort((tiebreak, ups))
    front = np.empty(ids.size, dtype=np.int64)
    seen: dict[int, int] = {}
    for pos in order:
        c = int(ids[pos])
        front[pos] = seen.get(c, 0)
        seen[c] = front[pos] + 1
    return front, ups, ids


def theta_sort_and_select(pop: list[Individual], refs: np.ndarray,
                          params: ThetaDeaParams) -> list[Individual]:
    """Environmental selection: violation-free individuals enter by theta
    front order (last front truncated by lowest upsilon), then remaining
    slots fill with the least-violating schedules."""
    n = len(pop)
    penalties = np.array([ind.feasibility_penalty for ind in pop])
    f_norm = np.array([ind.norm_objectives for ind in pop])
    idx = np.arange(n)
    feas = idx[penalties <= 0.0]
    infeas = idx[penalties > 0.0]

    chosen: list[int] = []
    if feas.size:
        front, ups, ids = _theta_rank(f_norm[feas], refs, params.theta, feas)
        order = np.lexsort((feas, ups, front))
        take = min(params.pop_size, feas.size)
        chosen.extend(int(feas[i]) for i in order[:take])
        for local, global_i in enumerate(feas):
            ind = pop[int(global_i)]
            ind.cluster_id = int(ids[local])
            ind.theta_fitness = float(ups[local])
    if len(chosen) < params.pop_size and infeas.size:
        order = np.lexsort((infeas, penalties[infeas]))
        need = params.pop_size - len(chosen)
        chosen.extend(int(infeas[i]) for i in order[:need])
    return [pop[i] for i in chosen]


# ---------------------------------------------------------------------------
# hybrid variation
# ---------------------------------------------------------------------------

def _sbx(p1, p2, lb, ub, pc, eta, rng):
    n_pairs, n_genes = p1.shape
    mu = rng.random((n_pairs, n_genes))
    beta = np.where(mu <= 0.5,
                    (2.0 * mu) ** (1.0 / (eta + 1.0)),
                    (2.0 - 2.0 * mu) ** (-1.0 / (eta + 1.0)))
    cross_pair = rng.random((n_pairs, 1)) < pc
    cross_gene = rng.random((n_pairs, n_genes)) < 0.5
    beta = np.where(cross_pair & cross_gene, beta, 1.0)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return np.clip(c1, lb, ub), np.clip(c2, lb, ub)


def _poly_mutation(x, lb, ub, pm, eta, rng):
    n, n_genes = x.shape
    span = ub - lb
    site = (rng.random((n, n_genes)) < pm) & (span > 0)
    mu = rng.random((n, n_genes))
    with np.errstate(invalid="ignore", divide="ignore"):
        delta1 = (x - lb) / np.where(span > 0, span, 1.0)
        delta2 = (ub - x) / np.where(span > 0, span, 1.0)
        low = (2.0 * mu + (1.0 - 2.0 * mu)
               * (1.0 - delta1) ** (eta + 1.0)) ** (1.0 / (eta + 1.0)) - 1.0
        high = 1.0 - (2.0 * (1.0 - mu) + 2.0 * (mu - 0.5)
                      * (1.0 - delta2) ** (eta + 1.0)) ** (1.0 / (eta + 1.0))
    delta = np.where(mu <= 0.5, low, high)
    out = x + np.where(site, delta * span, 0.0)
    return np.clip(out, lb, ub)


def vary(parents_real: np.ndarray, parents_bin: np.ndarray,
         lb: np.ndarray, ub: np.ndarray, params: ThetaDeaParams,
         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Produce one offspring per parent; parents pair up consecutively."""
    n = parents_real.shape[0]
    pm_real = params.mutation_prob
    if pm_real is None:
        pm_real = 1.0 / parents_real.shape[1]
    pm_bin = params.mutation_prob
    if pm_bin is None:
        pm_bin = 1.0 / max(parents_bin.shape[1], 1)

    p1, p2 = parents_real[0::2], parents_real[1::2]
    c1, c2 = _sbx(p1, p2, lb, ub, params.crossover_prob, params.sbx_eta, rng)
    off_real = np.empty_like(parents_real)
    off_real[0::2], off_real[1::2] = c1, c2
    off_real = _poly_mutation(off_real, lb, ub, pm_real, params.pm_eta, rng)

    b1, b2 = parents_bin[0::2].copy(), parents_bin[1::2].copy()
    n_pairs, n_bits = b1.shape
    swap = (rng.random((n_pairs, 1)) < params.crossover_prob) \
        & (rng.random((n_pairs, n_bits)) < 0.5)
    b1_new = np.where(swap, b2, b1)
    b2_new = np.where(swap, b1, b2)
    off_bin = np.empty_like(parents_bin)
    off_bin[0::2], off_bin[1::2] = b1_new, b2_new
    flip = rng.random((n, n_bits)) < pm_bin
    off_bin = np.where(flip, 1.0 - off_bin, off_bin)
    return off_real, off_bin


# ---------------------------------------------------------------------------
# genotype packing
# ---------------------------------------------------------------------------

def _gene_bounds(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    T = sc.horizon
    p_max = sc.unit_array("p_max")
    ub = np.concatenate([np.repeat(p_max, T),          # p_mt
                         np.repeat(p_max, T),          # r_mt
                         np.full(T, sc.ess.p_ch_max),  # p_ch
                         np.full(T, sc.ess.p_dc_max),  # p_dc
                         np.full(T, sc.ess.p_dc_max)])  # p_res
    return np.zeros_like(ub), ub


def _genes_to_dv(xr: np.ndarray, xb: np.ndarray, sc: Scenario) -> DecisionVector:
    M, T = sc.n_units, sc.horizon
    k = M * T
    return DecisionVector(u=xb.reshape(M, T),
                          p_mt=xr[:k].reshape(M, T),
                          r_mt=xr[k:2 * k].reshape(M, T),
                          p_ch=xr[2 * k:2 * k + T],
                          p_dc=xr[2 * k + T:2 * k + 2 * T],
                          p_res=xr[2 * k + 2 * T:])


def _dv_to_genes(dv: DecisionVector) -> tuple[np.ndarray, np.ndarray]:
    xr = np.concatenate([dv.p_mt.ravel(), dv.r_mt.ravel(),
                         dv.p_ch, dv.p_dc, dv.p_res])
    return xr, dv.u.ravel().copy()


def _evaluate(dv: DecisionVector, sc: Scenario) -> ObjectiveVector:
    if sc.forecast_load.sum() <= 0:
        f3 = 100.0  # nothing demanded, trivially served
    else:
        f3 = eval_satisfaction(dv, sc)
    return ObjectiveVector(f1_cost=eval_cost(dv, sc),
                           f2_emissions=eval_emissions(dv, sc),
                           f3_satisfaction=f3)


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------

def _pareto_mask(f_min: np.ndarray) -> np.ndarray:
    n = f_min.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        dominated = (np.all(f_min <= f_min[i], axis=1)
                     & np.any(f_min < f_min[i], axis=1))
        if np.any(dominated & keep):
            keep[i] = False
    return keep


def run(sc: Scenario, params: ThetaDeaParams,
        el: EquivalentLoad | None = None) -> OptimizeResult:
    """Full evolutionary search; deterministic for a fixed rng_seed.

    The returned archive is the violation-free, classically Pareto
    non-dominated subset of the final population (theta-dominance only
    steers selection), de-duplicated on exact objective triples.
    """
    if el is None:
        el = build_equivalent_load(sc)
    rng = np.random.default_rng(params.rng_seed)
    refs = generate_reference_points(
        3, params.ref_divisions or default_divisions(3, params.pop_size))
    lb, ub = _gene_bounds(sc)
    n_bits = sc.n_units * sc.horizon

    def make_individual(xr, xb):
        dv, penalty = repair(_genes_to_dv(xr, xb, sc), sc, el)
        return Individual(genotype=dv, objectives=_evaluate(dv, sc),
                          feasibility_penalty=penalty)

    # seed the population across service levels so the initial front spans
    # from all-off to full supply; uniform genes alone cluster near half load
    pop: list[Individual] = []
    n_out = sc.n_units * sc.horizon
    level = rng.uniform(0.0, 1.1, size=params.pop_size)
    xr0 = rng.uniform(lb, ub, size=(params.pop_size, lb.size))
    jitter = rng.uniform(0.6, 1.4, size=(params.pop_size, n_out))
    xr0[:, :n_out] = np.minimum(level[:, None] * jitter, 1.0) * ub[:n_out]
    commit_p = np.clip(level, 0.25, 0.95)
    xb0 = (rng.random((params.pop_size, n_bits))
           < commit_p[:, None]).astype(np.float64)
    for i in range(params.pop_size):
        pop.append(make_individual(xr0[i], xb0[i]))

    history = np.empty(params.generations)
    running_best = math.inf
    for gen in range(params.generations):
        perm = rng.permutation(params.pop_size)
        genes = [_dv_to_genes(pop[i].genotype) for i in perm]
        par_real = np.array([g[0] for g in genes])
        par_bin = np.array([g[1] for g in genes])
        off_real, off_bin = vary(par_real, par_bin, lb, ub, params, rng)
        union = pop + [make_individual(off_real[i], off_bin[i])
                       for i in range(params.pop_size)]
        normalize(union)
        pop = theta_sort_and_select(union, refs, params)

        feas = [ind for ind in union if ind.feasibility_penalty <= 0]
        if feas:
            gen_best = min(float(np.sum(ind.norm_objectives)) for ind in feas)
            running_best = min(running_best, gen_best)
        history[gen] = running_best

    feas = [ind for ind in pop if ind.feasibility_penalty <= 0]
    if not feas:
        return OptimizeResult(archive=[], feasible=False,
                              best_penalty=min(ind.feasibility_penalty
                                               for ind in pop),
                              history=history,
                              generations_run=params.generations)

    f_min = np.array([ind.objectives.as_min_array() for ind in feas])
    mask = _pareto_mask(f_min)
    seen: set[tuple] = set()
    archive = []
    for ind, ok, row in zip(feas, mask, f_min):
        key = tuple(row)
        if ok and key not in seen:
            seen.add(key)
            archive.append(ind)
    return OptimizeResult(archive=archive, feasible=True, best_penalty=0.0,
                          history=history, generations_run=params.generations)
