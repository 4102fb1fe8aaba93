"""
Sparse bipartite rating table.

Users and objects are dense zero-based indices.  Ratings are kept in a
canonical order sorted by (user, object); every reduction in the engines
relies on that order so that sums are taken in ascending index order and
results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class RatingError(ValueError):
    """Base class for malformed rating data."""


class RatingRangeError(RatingError):
    pass


class DuplicateRatingError(RatingError):
    pass


class DegenerateError(RatingError):
    """Raised when an operation has nothing meaningful to work on."""


@dataclass(frozen=True)
class RatingScale:
    min: float = 0.0
    max: float = 1.0
    discrete: bool = False

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"scale min {self.min} must be below max {self.max}")
        if self.discrete and not (float(self.min).is_integer() and float(self.max).is_integer()):
            raise ValueError("discrete scale needs integer bounds")

    def check(self, value: float) -> None:
        if not (self.min <= value <= self.max):
            raise RatingRangeError(f"rating {value!r} outside [{self.min}, {self.max}]")
        if self.discrete and not float(value).is_integer():
            raise RatingRangeError(f"rating {value!r} is not an integer on a discrete scale")

    def check_array(self, values: np.ndarray) -> None:
        bad = (values < self.min) | (values > self.max) | np.isnan(values)
        if self.discrete:
            bad |= values != np.round(values)
        if bad.any():
            v = values[np.argmax(bad)]
            self.check(float(v))
            raise RatingRangeError(f"rating {v!r} not allowed on {self}")


class RatingTable:
    """
    Ratings ``r[i, a]`` given by users ``i`` to objects ``a``.

    At most one rating per pair.  ``user_ids``/``object_ids`` optionally carry
    external labels for the dense indices (used by file I/O); they default to
    the string form of the index.
    """

    def __init__(
        self,
        n_users: int,
        n_objects: int,
        scale: RatingScale | None = None,
        user_ids: Sequence[str] | None = None,
        object_ids: Sequence[str] | None = None,
    ):
        if n_users < 0 or n_objects < 0:
            raise ValueError("dimensions must be non-negative")
        self.n_users = int(n_users)
        self.n_objects = int(n_objects)
        self.scale = scale if scale is not None else RatingScale()
        self.user_ids = _labels(user_ids, self.n_users, "user")
        self.object_ids = _labels(object_ids, self.n_objects, "object")

        self._users = np.empty(0, dtype=np.int64)
        self._objects = np.empty(0, dtype=np.int64)
        self._values = np.empty(0, dtype=np.float64)
        self._pending: list[tuple[int, int, float]] = []
        self._keys: set[int] | None = None
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def from_arrays(
        cls,
        n_users: int,
        n_objects: int,
        users: Iterable[int],
        objects: Iterable[int],
        values: Iterable[float],
        scale: RatingScale | None = None,
        user_ids: Sequence[str] | None = None,
        object_ids: Sequence[str] | None = None,
    ) -> "RatingTable":
        """Bulk constructor with the same validation as :meth:`add_rating`."""
        table = cls(n_users, n_objects, scale, user_ids, object_ids)
        u = np.asarray(users, dtype=np.int64).ravel()
        o = np.asarray(objects, dtype=np.int64).ravel()
        v = np.asarray(values, dtype=np.float64).ravel()
        if not (len(u) == len(o) == len(v)):
            raise ValueError("users, objects and values must have equal length")
        if len(u):
            if u.min() < 0 or u.max() >= n_users:
                raise IndexError("user index out of range")
            if o.min() < 0 or o.max() >= n_objects:
                raise IndexError("object index out of range")
        table.scale.check_array(v)

        order = np.lexsort((o, u))
        u, o, v = u[order], o[order], v[order]
        if len(u) > 1:
            dup = (u[1:] == u[:-1]) & (o[1:] == o[:-1])
            if dup.any():
                k = int(np.argmax(dup))
                raise DuplicateRatingError(f"pair ({u[k]}, {o[k]}) rated twice")
        table._users, table._objects, table._values = u, o, v
        return table

    # -- mutation ---------------------------------------------------------

    def add_rating(self, user: int, obj: int, value: float) -> None:
        if not 0 <= user < self.n_users:
            raise IndexError(f"user {user} out of range [0, {self.n_users})")
        if not 0 <= obj < self.n_objects:
            raise IndexError(f"object {obj} out of range [0, {self.n_objects})")
        value = float(value)
        self.scale.check(value)
        keys = self._key_set()
        key = user * self.n_objects + obj
        if key in keys:
            raise DuplicateRatingError(f"pair ({user}, {obj}) already rated")
        keys.add(key)
        self._pending.append((user, obj, value))
        self._cache.clear()

    def _key_set(self) -> set[int]:
        if self._keys is None:
            self._flush()
            self._keys = set((self._users * self.n_objects + self._objects).tolist())
        return self._keys

    def _flush(self) -> None:
        if not self._pending:
            return
        pu, po, pv = zip(*self._pending)
        u = np.concatenate([self._users, np.asarray(pu, dtype=np.int64)])
        o = np.concatenate([self._objects, np.asarray(po, dtype=np.int64)])
        v = np.concatenate([self._values, np.asarray(pv, dtype=np.float64)])
        order = np.lexsort((o, u))
        self._users, self._objects, self._values = u[order], o[order], v[order]
        self._pending = []

    # -- canonical arrays ---------------------------------------------------

    @property
    def users(self) -> np.ndarray:
        self._flush()
        return self._users

    @property
    def objects(self) -> np.ndarray:
        self._flush()
        return self._objects

    @property
    def values(self) -> np.ndarray:
        self._flush()
        return self._values

    def _cached(self, name: str, build) -> np.ndarray:
        self._flush()
        if name not in self._cache:
            self._cache[name] = build()
        return self._cache[name]

    @property
    def user_degree(self) -> np.ndarray:
        """ku_i for every user."""
        return self._cached("ku", lambda: np.bincount(self._users, minlength=self.n_users))

    @property
    def object_degree(self) -> np.ndarray:
        """ko_a for every object."""
        return self._cached("ko", lambda: np.bincount(self._objects, minlength=self.n_objects))

    @property
    def user_indptr(self) -> np.ndarray:
        """CSR row pointer: user ``i`` owns entries ``indptr[i]:indptr[i+1]``."""
        return self._cached(
            "indptr", lambda: np.concatenate([[0], np.cumsum(self.user_degree)]).astype(np.int64)
        )

    @property
    def by_object(self) -> np.ndarray:
        """Permutation of entries grouping them by object (users ascending within)."""
        return self._cached("by_object", lambda: np.argsort(self._objects, kind="stable"))

    @property
    def object_indptr(self) -> np.ndarray:
        return self._cached(
            "oindptr", lambda: np.concatenate([[0], np.cumsum(self.object_degree)]).astype(np.int64)
        )

    # -- queries ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._values) + len(self._pending)

    @property
    def n_ratings(self) -> int:
        return len(self)

    def rated_objects(self, user: int) -> np.ndarray:
        """O_i: objects rated by ``user``, ascending."""
        p = self.user_indptr
        return self.objects[p[user] : p[user + 1]]

    def user_ratings(self, user: int) -> np.ndarray:
        p = self.user_indptr
        return self.values[p[user] : p[user + 1]]

    def raters(self, obj: int) -> np.ndarray:
        """U_a: users who rated ``obj``, ascending."""
        p = self.object_indptr
        return self.users[self.by_object[p[obj] : p[obj + 1]]]

    def object_ratings(self, obj: int) -> np.ndarray:
        p = self.object_indptr
        return self.values[self.by_object[p[obj] : p[obj + 1]]]

    def get(self, user: int, obj: int, default: float | None = None) -> float | None:
        p = self.user_indptr
        lo, hi = p[user], p[user + 1]
        k = lo + np.searchsorted(self.objects[lo:hi], obj)
        if k < hi and self.objects[k] == obj:
            return float(self.values[k])
        return default

    def __contains__(self, pair) -> bool:
        user, obj = pair
        return self.get(user, obj) is not None

    def sparsity(self) -> float:
        """Fraction of user/object pairs carrying a rating."""
        if self.n_users == 0 or self.n_objects == 0:
            raise DegenerateError("sparsity undefined for a table with an empty dimension")
        return len(self) / (self.n_users * self.n_objects)

    def subset(self, users: np.ndarray | None = None, objects: np.ndarray | None = None) -> "RatingTable":
        """Restrict to the given (ascending) users and objects, re-indexed densely."""
        users = np.arange(self.n_users) if users is None else np.asarray(users, dtype=np.int64)
        objects = np.arange(self.n_objects) if objects is None else np.asarray(objects, dtype=np.int64)
        umap = np.full(self.n_users, -1, dtype=np.int64)
        umap[users] = np.arange(len(users))
        omap = np.full(self.n_objects, -1, dtype=np.int64)
        omap[objects] = np.arange(len(objects))
        nu, no = umap[self.users], omap[self.objects]
        keep = (nu >= 0) & (no >= 0)
        return RatingTable.from_arrays(
            len(users),
            len(objects),
            nu[keep],
            no[keep],
            self.values[keep],
            self.scale,
            [self.user_ids[i] for i in users],
            [self.object_ids[a] for a in objects],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatingTable):
            return NotImplemented
        return (
            self.n_users == other.n_users
            and self.n_objects == other.n_objects
            and self.scale == other.scale
            and self.user_ids == other.user_ids
            and self.object_ids == other.object_ids
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.objects, other.objects)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"RatingTable(n_users={self.n_users}, n_objects={self.n_objects}, n_ratings={len(self)})"


def _labels(ids: Sequence[str] | None, n: int, what: str) -> list[str]:
    if ids is None:
        return [str(i) for i in range(n)]
    ids = [str(x) for x in ids]
    if len(ids) != n:
        raise ValueError(f"expected {n} {what} ids, got {len(ids)}")
    if len(set(ids)) != n:
        raise ValueError(f"{what} ids are not unique")
    return ids


def prune_isolated(table: RatingTable) -> tuple[RatingTable, np.ndarray, np.ndarray]:
    """Drop users and objects without ratings; returns the kept original indices too."""
    users = np.flatnonzero(table.user_degree > 0)
    objects = np.flatnonzero(table.object_degree > 0)
    return table.subset(users, objects), users, objects


def sparsity(table: RatingTable) -> float:
    return table.sparsity()
