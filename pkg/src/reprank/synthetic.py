"""
Artificial rating data with known ground truth.

Pairs are grown one rating at a time by preferential attachment: a user is
picked with probability proportional to ``ku + 1`` and, independently, an
object with probability proportional to ``ko + 1``.  A pair that already
carries a rating is discarded and both picks are redrawn.

Honest ratings are ``Q + N(0, sigma_i)`` clipped to the scale; spammers rate
uniformly at random or always push the scale maximum (or minimum).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from reprank.rating_core import RatingError, RatingScale, RatingTable


class InfeasibleSparsityError(RatingError):
    pass


class SpamKind(str, enum.Enum):
    RANDOM = "random"
    PUSH = "push"


class Label(str, enum.Enum):
    HONEST = "honest"
    RANDOM = "random"
    PUSH_MAX = "push_max"
    PUSH_MIN = "push_min"

    @property
    def is_spammer(self) -> bool:
        return self is not Label.HONEST


@dataclass(frozen=True)
class SpamConfig:
    ratio: float
    kind: SpamKind = SpamKind.RANDOM

    def __post_init__(self):
        object.__setattr__(self, "kind", SpamKind(self.kind))
        if not 0 <= self.ratio <= 1:
            raise ValueError(f"spam ratio {self.ratio} outside [0, 1]")


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int = 6000
    n_objects: int = 4000
    sparsity: float = 0.02
    sigma_min: float = 0.1
    sigma_max: float = 0.5
    scale: RatingScale = field(default_factory=RatingScale)
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1 or self.n_objects < 1:
            raise ValueError("need at least one user and one object")
        if not 0 < self.sparsity <= 1:
            raise ValueError(f"sparsity {self.sparsity} outside (0, 1]")
        if not 0 <= self.sigma_min <= self.sigma_max:
            raise ValueError("need 0 <= sigma_min <= sigma_max")

    @property
    def n_ratings(self) -> int:
        return int(round(self.sparsity * self.n_users * self.n_objects))


@dataclass
class GroundTruth:
    true_quality: np.ndarray
    error_magnitude: np.ndarray
    labels: list[Label]

    @property
    def spammer_mask(self) -> np.ndarray:
        return np.array([lab.is_spammer for lab in self.labels], dtype=bool)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            np.array_equal(self.true_quality, other.true_quality)
            and np.array_equal(self.error_magnitude, other.error_magnitude)
            and self.labels == other.labels
        )

    __hash__ = None

    def subset(self, users: np.ndarray, objects: np.ndarray) -> "GroundTruth":
        return GroundTruth(
            self.true_quality[objects],
            self.error_magnitude[users],
            [self.labels[i] for i in users],
        )


def assign_labels(n_users: int, spam: SpamConfig | None, rng: np.random.Generator) -> list[Label]:
    labels = [Label.HONEST] * n_users
    if spam is None:
        return labels
    n_spam = int(np.floor(spam.ratio * n_users))
    if n_spam == 0:
        # no draws, so a zero ratio reproduces the clean data for the same seed
        return labels
    chosen = np.sort(rng.choice(n_users, size=n_spam, replace=False))
    if spam.kind is SpamKind.RANDOM:
        for i in chosen:
            labels[i] = Label.RANDOM
    else:
        coins = rng.random(n_spam) < 0.5
        for i, up in zip(chosen, coins):
            labels[i] = Label.PUSH_MAX if up else Label.PUSH_MIN
    return labels


def preferential_pick(x: float, n_nodes: int, history: list[int]) -> int:
    """
    Map a uniform draw ``x`` in [0, 1) to a node picked with probability
    ``(k + 1) / (len(history) + n_nodes)``.

    ``history`` lists the node of every rating made so far, so node ``i``
    occurs ``k_i`` times in it.  The draw either lands on one of the
    ``n_nodes`` unit weights or copies a past endpoint.
    """
    total = len(history) + n_nodes
    j = min(int(x * total), total - 1)
    return j if j < n_nodes else history[j - n_nodes]


def attach_pairs(
    n_users: int, n_objects: int, n_ratings: int, rng: np.random.Generator, block: int = 1 << 16
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw ``n_ratings`` distinct (user, object) pairs by preferential attachment.

    Returns the pairs in the order they were created.
    """
    if n_ratings > n_users * n_objects:
        raise InfeasibleSparsityError(
            f"{n_ratings} ratings do not fit in {n_users} x {n_objects} pairs"
        )
    hist_u: list[int] = []
    hist_o: list[int] = []
    seen: set[int] = set()
    buf: list[float] = []
    pos = 0
    while len(hist_u) < n_ratings:
        if pos + 2 > len(buf):
            buf = rng.random(block).tolist()
            pos = 0
        i = preferential_pick(buf[pos], n_users, hist_u)
        a = preferential_pick(buf[pos + 1], n_objects, hist_o)
        pos += 2
        key = i * n_objects + a
        if key in seen:
            continue
        seen.add(key)
        hist_u.append(i)
        hist_o.append(a)
    return np.asarray(hist_u, dtype=np.int64), np.asarray(hist_o, dtype=np.int64)


def rate(
    users: np.ndarray,
    objects: np.ndarray,
    truth: GroundTruth,
    scale: RatingScale,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rating values for the given pairs according to each user's label."""
    n = len(users)
    noise = rng.standard_normal(n)
    uniform = rng.uniform(scale.min, scale.max, n)
    honest = truth.true_quality[objects] + noise * truth.error_magnitude[users]
    honest = np.clip(honest, scale.min, scale.max)

    code = np.array([_LABEL_CODE[lab] for lab in truth.labels], dtype=np.int8)[users]
    values = np.select(
        [code == 0, code == 1, code == 2, code == 3],
        [honest, uniform, np.full(n, scale.max), np.full(n, scale.min)],
    )
    if scale.discrete:
        values = np.clip(np.round(values), scale.min, scale.max)
    return values


_LABEL_CODE = {Label.HONEST: 0, Label.RANDOM: 1, Label.PUSH_MAX: 2, Label.PUSH_MIN: 3}


def generate(config: GeneratorConfig, spam: SpamConfig | None = None) -> tuple[RatingTable, GroundTruth]:
    """
    Build a rating table and its ground truth.

    Draw order from the seeded generator: qualities, error magnitudes, spam
    labels and polarities, attachment pairs, then rating noise.
    """
    n_ratings = config.n_ratings
    if n_ratings > config.n_users * config.n_objects:
        raise InfeasibleSparsityError(
            f"sparsity {config.sparsity} needs {n_ratings} ratings, "
            f"only {config.n_users * config.n_objects} pairs exist"
        )
    scale = config.scale
    rng = np.random.default_rng(config.seed)
    quality = rng.uniform(scale.min, scale.max, config.n_objects)
    sigma = rng.uniform(config.sigma_min, config.sigma_max, config.n_users)
    labels = assign_labels(config.n_users, spam, rng)
    truth = GroundTruth(quality, sigma, labels)

    users, objects = attach_pairs(config.n_users, config.n_objects, n_ratings, rng)
    values = rate(users, objects, truth, scale, rng)
    table = RatingTable.from_arrays(config.n_users, config.n_objects, users, objects, values, scale)
    return table, truth


def degree_distribution(table: RatingTable) -> tuple[dict[int, int], dict[int, int]]:
    """Histograms {degree: count} of user and object degrees (zero degrees omitted)."""
    if len(table) == 0:
        raise RatingError("empty table")
    ku = Counter(int(k) for k in table.user_degree if k > 0)
    ko = Counter(int(k) for k in table.object_degree if k > 0)
    return dict(sorted(ku.items())), dict(sorted(ko.items()))


def selection_probabilities(degrees: np.ndarray) -> np.ndarray:
    """Preferential-attachment pick probabilities ``(k + 1) / sum(k + 1)``."""
    w = np.asarray(degrees, dtype=np.float64) + 1.0
    return w / w.sum()
