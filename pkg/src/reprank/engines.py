"""
Ranking engines: plain mean, iterative refinement (IR) and the
correlation-based reputation algorithm.

All three share the same quality estimate, a reputation-weighted average of
the ratings an object received.  IR and the correlation method alternate
between that estimate and a reputation update until the mean squared change
of the qualities drops below ``delta``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from reprank.rating_core import DegenerateError, RatingTable


class Algorithm(str, enum.Enum):
    MEAN = "mean"
    IR = "ir"
    CORR = "corr"


class IsolatedNodeError(DegenerateError):
    """An object without ratings or a user without ratings reached an engine."""


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    algorithm: Algorithm = Algorithm.CORR
    delta: float = 1e-6
    max_iterations: int = 1000
    ir_exponent: float = 1.0
    ir_epsilon: float = 1e-8
    init: str = "degree"  # or "uniform"

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.ir_exponent > 0 or not self.ir_epsilon > 0:
            raise ValueError("ir_exponent and ir_epsilon must be positive")
        if self.init not in ("degree", "uniform"):
            raise ValueError(f"unknown initialization {self.init!r}")


@dataclass
class RankResult:
    quality: np.ndarray
    reputation: np.ndarray
    iterations: int
    converged: bool
    final_change: float


def _require_rated_objects(table: RatingTable) -> None:
    empty = np.flatnonzero(table.object_degree == 0)
    if len(empty):
        raise IsolatedNodeError(
            f"object {table.object_ids[empty[0]]} (index {empty[0]}) has no ratings"
            + (f" ({len(empty)} such objects)" if len(empty) > 1 else "")
        )


def _require_rated_users(table: RatingTable) -> None:
    empty = np.flatnonzero(table.user_degree == 0)
    if len(empty):
        raise IsolatedNodeError(
            f"user {table.user_ids[empty[0]]} (index {empty[0]}) has no ratings"
            + (f" ({len(empty)} such users)" if len(empty) > 1 else "")
        )


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite value in {what}")
    return x


def _object_extrema(table: RatingTable, support: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-object min and max rating, optionally over the entries flagged in ``support`` only."""
    v = table.values
    lo_v, hi_v = v, v
    if support is not None:
        lo_v = np.where(support, v, np.inf)
        hi_v = np.where(support, v, -np.inf)
    order = table.by_object
    starts = table.object_indptr[:-1]
    return np.minimum.reduceat(lo_v[order], starts), np.maximum.reduceat(hi_v[order], starts)


def quality_update(table: RatingTable, reputation: np.ndarray) -> np.ndarray:
    """
    Reputation-weighted average rating of every object.

    Objects whose raters all have zero reputation fall back to the plain
    mean of their ratings.
    """
    reputation = np.asarray(reputation, dtype=np.float64)
    if reputation.shape != (table.n_users,):
        raise ValueError(f"reputation has shape {reputation.shape}, expected ({table.n_users},)")
    _require_rated_objects(table)
    u, o, r = table.users, table.objects, table.values
    w = reputation[u]
    num = np.bincount(o, weights=w * r, minlength=table.n_objects)
    den = np.bincount(o, weights=w, minlength=table.n_objects)
    plain = np.bincount(o, weights=r, minlength=table.n_objects) / table.object_degree
    zero = den == 0
    q = np.where(zero, plain, num / np.where(zero, 1.0, den))
    # rounding can push a convex combination an ulp outside the ratings it
    # mixes; zero-weight ratings are not among them unless all weights are zero
    lo, hi = _object_extrema(table, (w > 0) | zero[o])
    return _check_finite(np.clip(q, lo, hi), "quality")


def mean_quality(table: RatingTable) -> np.ndarray:
    return quality_update(table, np.ones(table.n_users))


def _pearson(r: np.ndarray, q: np.ndarray) -> float:
    k = len(r)
    if k < 2 or r.min() == r.max() or q.min() == q.max():
        return 0.0
    dr = r - r.sum() / k
    dq = q - q.sum() / k
    sr = np.sqrt(np.dot(dr, dr) / k)
    sq = np.sqrt(np.dot(dq, dq) / k)
    if sr == 0 or sq == 0:
        return 0.0
    return float(np.clip(np.dot(dr, dq) / k / (sr * sq), -1.0, 1.0))


def user_correlation(table: RatingTable, quality: np.ndarray, user: int) -> float:
    """Pearson correlation between one user's ratings and the qualities of the rated objects."""
    if table.user_degree[user] == 0:
        raise IsolatedNodeError(f"user {user} has no ratings")
    objs = table.rated_objects(user)
    return _pearson(table.user_ratings(user), np.asarray(quality, dtype=np.float64)[objs])


def correlations(table: RatingTable, quality: np.ndarray) -> np.ndarray:
    """Vectorised :func:`user_correlation` for all users (0 for users without ratings)."""
    quality = np.asarray(quality, dtype=np.float64)
    if quality.shape != (table.n_objects,):
        raise ValueError(f"quality has shape {quality.shape}, expected ({table.n_objects},)")
    u, r = table.users, table.values
    q = quality[table.objects]
    n = table.n_users
    k = table.user_degree.astype(np.float64)
    safe_k = np.where(k > 0, k, 1.0)

    mr = np.bincount(u, weights=r, minlength=n) / safe_k
    mq = np.bincount(u, weights=q, minlength=n) / safe_k
    dr = r - mr[u]
    dq = q - mq[u]
    var_r = np.bincount(u, weights=dr * dr, minlength=n) / safe_k
    var_q = np.bincount(u, weights=dq * dq, minlength=n) / safe_k
    cov = np.bincount(u, weights=dr * dq, minlength=n) / safe_k

    flat = _flat_users(table, r) | _flat_users(table, q) | (k < 2)
    flat |= (var_r == 0) | (var_q == 0)
    denom = np.sqrt(np.where(flat, 1.0, var_r)) * np.sqrt(np.where(flat, 1.0, var_q))
    corr = np.where(flat, 0.0, cov / denom)
    return _check_finite(np.clip(corr, -1.0, 1.0), "correlation")


def _flat_users(table: RatingTable, x: np.ndarray) -> np.ndarray:
    """Users whose entries in ``x`` (canonical order) are all equal; True for unrated users."""
    out = np.ones(table.n_users, dtype=bool)
    rated = table.user_degree > 0
    if not rated.any():
        return out
    starts = table.user_indptr[:-1][rated]
    out[rated] = np.minimum.reduceat(x, starts) == np.maximum.reduceat(x, starts)
    return out


def clamp_reputation(corr):
    """Negative correlations earn no reputation."""
    if np.ndim(corr) == 0:
        return float(corr) if corr >= 0 else 0.0
    return np.maximum(corr, 0.0)


def correlation_reputation(table: RatingTable, quality: np.ndarray) -> np.ndarray:
    return clamp_reputation(correlations(table, quality))


def initial_reputation(table: RatingTable) -> np.ndarray:
    """Degree-proportional start: ku_i / |O|."""
    if table.n_objects == 0:
        raise DegenerateError("no objects")
    return table.user_degree / table.n_objects


def convergence_change(prev: np.ndarray, new: np.ndarray) -> float:
    """Mean squared difference between two quality vectors."""
    prev = np.asarray(prev, dtype=np.float64)
    new = np.asarray(new, dtype=np.float64)
    if prev.shape != new.shape:
        raise ValueError(f"length mismatch: {prev.shape} vs {new.shape}")
    if prev.size == 0:
        return 0.0
    d = prev - new
    return float(np.dot(d, d) / prev.size)


def ir_reputation_update(
    table: RatingTable, quality: np.ndarray, exponent: float = 1.0, epsilon: float = 1e-8
) -> np.ndarray:
    """IR reputation: ``(mean squared deviation from current qualities + epsilon) ** -exponent``."""
    _require_rated_users(table)
    quality = np.asarray(quality, dtype=np.float64)
    d = table.values - quality[table.objects]
    msd = np.bincount(table.users, weights=d * d, minlength=table.n_users) / table.user_degree
    return _check_finite((msd + epsilon) ** (-exponent), "IR reputation")


def reputation_update(table: RatingTable, quality: np.ndarray, config: EngineConfig) -> np.ndarray:
    if config.algorithm is Algorithm.IR:
        return ir_reputation_update(table, quality, config.ir_exponent, config.ir_epsilon)
    if config.algorithm is Algorithm.CORR:
        return correlation_reputation(table, quality)
    raise ValueError(f"{config.algorithm} has no reputation update")


def step(table: RatingTable, quality: np.ndarray, config: EngineConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """One iteration from ``quality``: returns (reputation, new quality, change)."""
    rep = reputation_update(table, quality, config)
    new = quality_update(table, rep)
    return rep, new, convergence_change(quality, new)


def run(table: RatingTable, config: EngineConfig | None = None) -> RankResult:
    config = config or EngineConfig()
    _require_rated_objects(table)
    if config.algorithm is Algorithm.MEAN:
        return RankResult(mean_quality(table), np.ones(table.n_users), 1, True, 0.0)

    _require_rated_users(table)
    if config.init == "uniform":
        rep = np.ones(table.n_users)
    else:
        rep = initial_reputation(table)
    quality = quality_update(table, rep)

    change = np.inf
    it = 0
    while it < config.max_iterations:
        it += 1
        rep, quality, change = step(table, quality, config)
        if change < config.delta:
            break
    return RankResult(quality, rep, it, bool(change < config.delta), float(change))
