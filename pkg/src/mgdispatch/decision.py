"""Automatic compromise selection over a Pareto archive.

Fuzzy C-means splits the archive into preference groups in objective space;
within each group every scheme is scored by grey relation projection
against the all-ones (positive) and all-zeros (negative) ideal rows of the
standardized decision matrix, and the scheme with the highest relative
projection value (RPV) becomes that group's best compromise solution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FcmParams:
    n_clusters: int = 3
    fuzziness_m: float = 2.0
    tolerance_eps: float = 1e-6
    max_iters: int = 300
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ValueError("n_clusters must be >= 2")
        if self.fuzziness_m <= 1:
            raise ValueError("fuzziness_m must exceed 1")
        if self.tolerance_eps <= 0:
            raise ValueError("tolerance_eps must be positive")


@dataclass
class MembershipMatrix:
    mu: np.ndarray                  # (N, K) row-stochastic memberships
    centers: np.ndarray             # (K, d)
    j_history: list[float] = field(default_factory=list)

    @property
    def hard_labels(self) -> np.ndarray:
        return np.argmax(self.mu, axis=1)  # ties resolve to lowest index


@dataclass
class GrpParams:
    weights: np.ndarray = None      # per-indicator, normalized to sum 1
    resolution_rho: float = 0.5

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.full(3, 1.0 / 3.0)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if np.any(self.weights < 0) or self.weights.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")
        self.weights = self.weights / self.weights.sum()
        if not 0 < self.resolution_rho <= 1:
            raise ValueError("resolution_rho must lie in (0, 1]")


# ---------------------------------------------------------------------------
# fuzzy C-means
# ---------------------------------------------------------------------------

def _seed_centers(points: np.ndarray, k: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Farthest-point seeding: one random start, then greedy max-min."""
    centers = [points[int(rng.integers(points.shape[0]))]]
    for _ in range(1, k):
        dist = np.min(
            [np.sum((points - c) ** 2, axis=1) for c in centers], axis=0)
        centers.append(points[int(np.argmax(dist))])
    return np.array(centers)


def _memberships(points: np.ndarray, centers: np.ndarray,
                 m: float) -> np.ndarray:
    d2 = np.maximum(
        ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), 0.0)
    zero_rows = np.any(d2 <= 1e-300, axis=1)
    power = 1.0 / (m - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = d2 ** -power
        mu = inv / inv.sum(axis=1, keepdims=True)
    if np.any(zero_rows):
        # a point sitting exactly on a center belongs to it outright
        for i in np.where(zero_rows)[0]:
            row = np.zeros(centers.shape[0])
            row[int(np.argmin(d2[i]))] = 1.0
            mu[i] = row
    return mu


def fcm_cluster(points: np.ndarray, p: FcmParams) -> MembershipMatrix:
    """Alternate membership/center updates until the loss J stabilizes.

    J = sum_ij mu_ij^m ||w_i - v_j||^2 is non-increasing across iterations;
    each membership row sums to one.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if np.unique(points, axis=0).shape[0] < p.n_clusters:
        raise ValueError("need at least n_clusters distinct points")
    rng = np.random.default_rng(p.rng_seed)
    centers = _seed_centers(points, p.n_clusters, rng)
    mu = _memberships(points, centers, p.fuzziness_m)
    history: list[float] = []
    j_prev = None
    for _ in range(p.max_iters):
        um = mu ** p.fuzziness_m
        centers = (um.T @ points) / um.sum(axis=0)[:, None]
        mu = _memberships(points, centers, p.fuzziness_m)
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        j_cur = float((mu ** p.fuzziness_m * d2).sum())
        history.append(j_cur)
        if j_prev is not None and abs(j_cur - j_prev) < p.tolerance_eps:
            break
        j_prev = j_cur
    return MembershipMatrix(mu=mu, centers=centers, j_history=history)


# ---------------------------------------------------------------------------
# grey relation projection
# ---------------------------------------------------------------------------

def standardize_decision_matrix(objectives: np.ndarray) -> np.ndarray:
    """Map raw (cost, emissions, satisfaction) rows into [0, 1], larger is
    better: cost-type columns flip, the benefit column keeps orientation;
    constant columns become all ones."""
    objectives = np.ascontiguousarray(objectives, dtype=np.float64)
    if objectives.ndim != 2 or objectives.shape[0] == 0:
        raise ValueError("need a non-empty 2-D objective matrix")
    out = np.ones_like(objectives)
    lo = objectives.min(axis=0)
    hi = objectives.max(axis=0)
    span = hi - lo
    benefit = np.zeros(objectives.shape[1], dtype=bool)
    benefit[-1] = True  # satisfaction
    for col in range(objectives.shape[1]):
        if span[col] <= 1e-12:
            continue
        if benefit[col]:
            out[:, col] = (objectives[:, col] - lo[col]) / span[col]
        else:
            out[:, col] = (hi[col] - objectives[:, col]) / span[col]
    return out


def grey_relation_coeff(scheme_rows: np.ndarray, ideal_row: np.ndarray,
                        rho: float) -> np.ndarray:
    """Deng coefficients of each scheme row against an ideal row, with the
    min/max deviations taken over all schemes and indicators."""
    scheme_rows = np.atleast_2d(np.asarray(scheme_rows, dtype=np.float64))
    delta = np.abs(scheme_rows - ideal_row)
    d_min = delta.min()
    d_max = delta.max()
    return (d_min + rho * d_max) / (delta + rho * d_max)


def projection_and_rpv(std_rows: np.ndarray, p: GrpParams) -> np.ndarray:
    """RPV of each standardized scheme row: projection onto the all-ones
    ideal divided by the sum of projections onto both ideals."""
    std_rows = np.atleast_2d(np.asarray(std_rows, dtype=np.float64))
    n_ind = std_rows.shape[1]
    w = p.weights
    coef = w ** 2 / np.sqrt(np.sum(w ** 2))
    grc_pos = grey_relation_coeff(std_rows, np.ones(n_ind), p.resolution_rho)
    grc_neg = grey_relation_coeff(std_rows, np.zeros(n_ind), p.resolution_rho)
    pro_pos = grc_pos @ coef
    pro_neg = grc_neg @ coef
    return pro_pos / (pro_pos + pro_neg)


@dataclass
class BcsSelection:
    bcs_indices: list[int]          # one archive index per non-empty cluster
    labels: np.ndarray              # (N,) hard cluster labels
    rpv: np.ndarray                 # (N,) per-scheme RPV within its cluster
    membership: MembershipMatrix
    standardized: np.ndarray        # (N, 3) decision matrix


def select_bcs(objectives: np.ndarray, fcm: FcmParams,
               grp: GrpParams) -> BcsSelection:
    """Cluster the archive, rank each cluster by RPV, and return the
    max-RPV scheme per cluster (ties to the lowest archive index)."""
    objectives = np.ascontiguousarray(objectives, dtype=np.float64)
    if objectives.shape[0] < fcm.n_clusters:
        raise ValueError("archive smaller than the number of clusters")
    std = standardize_decision_matrix(objectives)
    member = fcm_cluster(std, fcm)
    labels = member.hard_labels
    rpv = np.zeros(objectives.shape[0])
    bcs: list[int] = []
    for j in range(fcm.n_clusters):
        members = np.where(labels == j)[0]
        if members.size == 0:
            warnings.warn(f"cluster {j} is empty after hard labeling",
                          stacklevel=2)
            continue
        scores = projection_and_rpv(std[members], grp)
        rpv[members] = scores
        bcs.append(int(members[int(np.argmax(scores))]))
    return BcsSelection(bcs_indices=bcs, labels=labels, rpv=rpv,
                        membership=member, standardized=std)
