"""
Ranking and reputation metrics.

``kendall_tau`` is the plain pair-sign average (tied pairs count zero, no
tau-b correction), computed in O(n log n) with a merge-sort inversion count.
``auc`` scores ties one half and is computed from average ranks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from reprank.rating_core import DegenerateError
from reprank.synthetic import GroundTruth, Label


def _tied_pairs(x: np.ndarray) -> int:
    _, counts = np.unique(x, return_counts=True, axis=0)
    counts = counts.astype(object)
    return int(sum(c * (c - 1) // 2 for c in counts))


def count_inversions(seq: Sequence[float]) -> int:
    """Number of pairs i < j with seq[i] > seq[j] (bottom-up merge sort)."""
    a = list(seq)
    n = len(a)
    buf = [None] * n
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    inv += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            buf[k : k + mid - i] = a[i:mid]
            k += mid - i
            buf[k : k + hi - j] = a[j:hi]
        a, buf = buf, a
        width *= 2
    return inv


def kendall_tau(truth, estimate) -> float:
    """
    Pairwise rank agreement in [-1, 1].

    Each pair contributes ``sign((t_a - t_b) * (e_a - e_b))``; the sum is
    normalised by the number of pairs.
    """
    x = np.asarray(truth, dtype=np.float64)
    y = np.asarray(estimate, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 2:
        raise DegenerateError("kendall_tau needs at least two items")
    order = np.lexsort((y, x))
    swaps = count_inversions(y[order].tolist())
    n0 = n * (n - 1) // 2
    s = n0 - _tied_pairs(x) - _tied_pairs(y) + _tied_pairs(np.column_stack([x, y])) - 2 * swaps
    return 2 * s / (n * (n - 1))


def _benchmark_mask(n: int, benchmark: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter((int(b) for b in benchmark), dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("benchmark id out of range")
    mask[idx] = True
    k = int(mask.sum())
    if k == 0 or k == n:
        raise DegenerateError("benchmark must be a non-empty proper subset of the objects")
    return mask


def auc(scores, benchmark: Iterable[int]) -> float:
    """Probability that a benchmark object outscores a non-benchmark one (ties = 1/2)."""
    s = np.asarray(scores, dtype=np.float64)
    mask = _benchmark_mask(len(s), benchmark)
    nb = int(mask.sum())
    nn = len(s) - nb
    ranks = rankdata(s, method="average")
    u = float(ranks[mask].sum()) - nb * (nb + 1) / 2
    return u / (nb * nn)


def top_fraction_benchmark(truth: GroundTruth | np.ndarray, fraction: float = 0.05) -> set[int]:
    """The floor(fraction * |O|) objects with the highest true quality; ties go to lower ids."""
    q = truth.true_quality if isinstance(truth, GroundTruth) else np.asarray(truth, dtype=np.float64)
    if not 0 < fraction < 1:
        raise ValueError(f"fraction {fraction} outside (0, 1)")
    k = int(np.floor(fraction * len(q)))
    if k == 0:
        raise DegenerateError(f"fraction {fraction} of {len(q)} objects selects nothing")
    order = np.lexsort((np.arange(len(q)), -q))
    return {int(a) for a in order[:k]}


def _bin_index(x: np.ndarray, width: float) -> np.ndarray:
    # rounding first keeps values like 0.3 / 0.01 = 29.999... in the right bin
    return np.floor(np.round(np.asarray(x, dtype=np.float64) / width, 9)).astype(np.int64)


@dataclass(frozen=True)
class ErrorBin:
    center: float
    mean_reputation: float
    count: int


def reputation_vs_error(
    reputation, truth: GroundTruth, bin_width: float = 0.01, honest_only: bool = True
) -> list[ErrorBin]:
    """Mean reputation of users grouped by error magnitude in bins [k*w, (k+1)*w)."""
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    rep = np.asarray(reputation, dtype=np.float64)
    sigma = truth.error_magnitude
    keep = ~truth.spammer_mask if honest_only else np.ones(len(rep), dtype=bool)
    bins = _bin_index(sigma[keep], bin_width)
    rep = rep[keep]
    out = []
    for b in np.unique(bins):
        sel = bins == b
        center = round((int(b) + 0.5) * bin_width, 12)
        out.append(ErrorBin(center, float(rep[sel].mean()), int(sel.sum())))
    return out


@dataclass
class ReputationHistogram:
    """Counts per bucket [k*w, (k+1)*w) over [0, 1]; reputations >= 1 land in the top bucket."""

    bucket_width: float
    honest: np.ndarray
    spammer: np.ndarray

    @property
    def edges(self) -> np.ndarray:
        return np.round(np.arange(len(self.honest) + 1) * self.bucket_width, 12)

    def fraction_below(self, population: str, threshold: float) -> float:
        counts = getattr(self, population)
        total = counts.sum()
        if total == 0:
            return float("nan")
        k = int(_bin_index(np.array([threshold]), self.bucket_width)[0])
        return float(counts[:k].sum() / total)


def reputation_histogram(reputation, labels: Sequence[Label] | np.ndarray, bucket_width: float = 0.1) -> ReputationHistogram:
    if not bucket_width > 0:
        raise ValueError("bucket_width must be positive")
    rep = np.asarray(reputation, dtype=np.float64)
    if len(labels) and isinstance(labels[0], Label):
        spam = np.array([lab.is_spammer for lab in labels], dtype=bool)
    else:
        spam = np.asarray(labels, dtype=bool)
    n_buckets = max(1, int(np.ceil(np.round(1.0 / bucket_width, 9))))
    idx = np.clip(_bin_index(rep, bucket_width), 0, n_buckets - 1)
    return ReputationHistogram(
        bucket_width,
        np.bincount(idx[~spam], minlength=n_buckets),
        np.bincount(idx[spam], minlength=n_buckets),
    )


@dataclass
class EvalReport:
    algorithm: str
    auc: float
    tau: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    final_change: float | None = None
    histogram: ReputationHistogram | None = None
    error_series: list[ErrorBin] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"algorithm = {self.algorithm}"]
        for key in ("tau", "auc", "iterations", "converged", "final_change"):
            val = getattr(self, key)
            if val is None:
                continue
            if isinstance(val, bool):
                val = "true" if val else "false"
            lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
        if self.histogram is not None:
            h = self.histogram
            lines.append("[reputation_histogram]")
            lines.append("bucket_lo,bucket_hi,honest,spammer")
            e = h.edges.tolist()
            for k in range(len(h.honest)):
                lines.append(f"{e[k]!r},{e[k + 1]!r},{h.honest[k]},{h.spammer[k]}")
        if self.error_series:
            lines.append("[reputation_vs_error]")
            lines.append("sigma_center,mean_reputation,count")
            for b in self.error_series:
                lines.append(f"{b.center!r},{b.mean_reputation!r},{b.count}")
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Read back the key/value part and series blocks of :meth:`EvalReport.to_text`."""
    out: dict = {"series": {}}
    block = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            block = line[1:-1]
            out["series"][block] = []
        elif block is None:
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
        else:
            out["series"][block].append(line.split(","))
    return out
