"""
Reading and writing rating data.

Formats
-------
ratings (triples)
    ``user,object,rating`` per line; the delimiter is configurable and lines
    starting with ``#`` are comments.  Extra trailing fields are ignored.
ratings (MovieLens)
    ``user::object::rating::timestamp``.
ground truth sidecar
    An ``[objects]`` section of ``id,Q`` rows followed by a ``[users]``
    section of ``id,sigma,label`` rows.
benchmark list
    One external object id per line.
object catalog
    Object id in the first field of each line (MovieLens ``movies.dat`` or
    any delimited file); used to report catalog-wide statistics that include
    objects nobody rated.

External ids are mapped to dense indices in sorted order (numerically when
every id is an integer), so writing a table and loading it back is lossless
as long as every user and object carries at least one rating.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from reprank.rating_core import (
    DegenerateError,
    DuplicateRatingError,
    RatingError,
    RatingRangeError,
    RatingScale,
    RatingTable,
)
from reprank.synthetic import GroundTruth, Label

log = logging.getLogger(__name__)

TRIPLES = "triples"
MOVIELENS = "movielens"


class ParseError(RatingError):
    pass


class EmptyDatasetError(DegenerateError):
    pass


class EmptyBenchmarkError(DegenerateError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    n_users: int
    n_objects: int
    n_ratings: int
    mean_user_degree: float
    mean_object_degree: float
    sparsity: float
    scale: RatingScale
    user_index: Mapping[str, int]
    object_index: Mapping[str, int]

    @classmethod
    def from_table(cls, table: RatingTable) -> "DatasetManifest":
        n = len(table)
        return cls(
            n_users=table.n_users,
            n_objects=table.n_objects,
            n_ratings=n,
            mean_user_degree=n / table.n_users if table.n_users else 0.0,
            mean_object_degree=n / table.n_objects if table.n_objects else 0.0,
            sparsity=table.sparsity(),
            scale=table.scale,
            user_index={u: i for i, u in enumerate(table.user_ids)},
            object_index={a: i for i, a in enumerate(table.object_ids)},
        )

    def summary(self) -> str:
        return (
            f"users={self.n_users} objects={self.n_objects} ratings={self.n_ratings} "
            f"mean_ku={self.mean_user_degree:.1f} mean_ko={self.mean_object_degree:.1f} "
            f"sparsity={self.sparsity:.4f}"
        )


def _id_order(ids: Iterable[str]) -> list[str]:
    ids = list(ids)
    try:
        return sorted(ids, key=int)
    except ValueError:
        return sorted(ids)


def _split(line: str, fmt: str, delimiter: str) -> list[str]:
    if fmt == MOVIELENS:
        return line.split("::")
    if fmt == TRIPLES:
        return line.split(delimiter)
    raise ValueError(f"unknown ratings format {fmt!r}")


def load_ratings(
    path: str | os.PathLike,
    fmt: str = TRIPLES,
    scale: RatingScale | None = None,
    delimiter: str = ",",
) -> tuple[RatingTable, DatasetManifest]:
    scale = scale or RatingScale()
    records: list[tuple[str, str, float]] = []
    first_seen: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in _split(line, fmt, delimiter)]
            if len(fields) < 3 or not fields[0] or not fields[1]:
                raise ParseError(f"{path}:{lineno}: expected user{delimiter}object{delimiter}rating, got {line!r}")
            try:
                value = float(fields[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: rating {fields[2]!r} is not a number") from None
            try:
                scale.check(value)
            except RatingRangeError as exc:
                raise RatingRangeError(f"{path}:{lineno}: {exc}") from None
            pair = (fields[0], fields[1])
            if pair in first_seen:
                raise DuplicateRatingError(
                    f"{path}:{lineno}: pair {pair} already rated on line {first_seen[pair]}"
                )
            first_seen[pair] = lineno
            records.append((fields[0], fields[1], value))
    if not records:
        raise EmptyDatasetError(f"{path}: no ratings")

    user_ids = _id_order({r[0] for r in records})
    object_ids = _id_order({r[1] for r in records})
    uidx = {u: i for i, u in enumerate(user_ids)}
    oidx = {a: i for i, a in enumerate(object_ids)}
    table = RatingTable.from_arrays(
        len(user_ids),
        len(object_ids),
        [uidx[r[0]] for r in records],
        [oidx[r[1]] for r in records],
        [r[2] for r in records],
        scale,
        user_ids,
        object_ids,
    )
    return table, DatasetManifest.from_table(table)


def format_value(value: float, scale: RatingScale) -> str:
    if scale.discrete:
        return str(int(value))
    return repr(float(value))


def write_ratings(table: RatingTable, path: str | os.PathLike, delimiter: str = ",") -> None:
    s = table.scale
    uid, oid = table.user_ids, table.object_ids
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# users={table.n_users} objects={table.n_objects} ratings={len(table)}\n")
        fh.write(f"# scale={s.min!r},{s.max!r}{',discrete' if s.discrete else ''}\n")
        for u, o, v in zip(table.users.tolist(), table.objects.tolist(), table.values.tolist()):
            fh.write(f"{uid[u]}{delimiter}{oid[o]}{delimiter}{format_value(v, s)}\n")


def filter_min_degree(table: RatingTable, min_user_degree: int) -> RatingTable:
    """
    Keep users with at least ``min_user_degree`` ratings, then drop objects
    left without ratings.  External ids travel with the rows.
    """
    if min_user_degree < 0:
        raise ValueError("min_user_degree must be non-negative")
    users = np.flatnonzero(table.user_degree >= min_user_degree)
    if len(users) == 0:
        raise EmptyDatasetError(f"no user has {min_user_degree} or more ratings")
    kept = table.subset(users=users)
    return kept.subset(objects=np.flatnonzero(kept.object_degree > 0))


def read_catalog(path: str | os.PathLike, fmt: str = MOVIELENS, delimiter: str = ",") -> list[str]:
    """Object ids listed in a catalog file, in file order, without duplicates."""
    seen: dict[str, None] = {}
    # movies.dat ships in latin-1; only the id column matters here
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                seen.setdefault(_split(line, fmt, delimiter)[0].strip(), None)
    return list(seen)


def load_benchmark(path: str | os.PathLike, id_map: Mapping[str, int] | RatingTable) -> set[int]:
    """Dense ids of the listed objects present in the table; unknown ids are logged and skipped."""
    if isinstance(id_map, RatingTable):
        id_map = {a: i for i, a in enumerate(id_map.object_ids)}
    found: set[int] = set()
    missing: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in id_map:
                found.add(id_map[line])
            else:
                missing.append(line)
    if missing:
        log.warning("%d benchmark ids not in the table (first: %s)", len(missing), missing[0])
    if not found:
        raise EmptyBenchmarkError(f"{path}: none of the benchmark ids occur in the table")
    return found


def write_truth(truth: GroundTruth, table: RatingTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("[objects]\nid,Q\n")
        for a, q in zip(table.object_ids, truth.true_quality.tolist()):
            fh.write(f"{a},{q!r}\n")
        fh.write("[users]\nid,sigma,label\n")
        for u, s, lab in zip(table.user_ids, truth.error_magnitude.tolist(), truth.labels):
            fh.write(f"{u},{s!r},{lab.value}\n")


@dataclass
class TruthFile:
    """Ground truth keyed by external id, as stored in a sidecar file."""

    object_quality: dict[str, float]
    user_sigma: dict[str, float]
    user_label: dict[str, Label]

    def align(self, object_ids: Iterable[str], user_ids: Iterable[str] | None = None) -> GroundTruth:
        try:
            q = np.array([self.object_quality[a] for a in object_ids], dtype=np.float64)
            if user_ids is None:
                return GroundTruth(q, np.empty(0), [])
            user_ids = list(user_ids)
            sig = np.array([self.user_sigma[u] for u in user_ids], dtype=np.float64)
            labels = [self.user_label[u] for u in user_ids]
        except KeyError as exc:
            raise ParseError(f"no ground truth for id {exc.args[0]}") from None
        return GroundTruth(q, sig, labels)


def read_truth(path: str | os.PathLike) -> TruthFile:
    quality: dict[str, float] = {}
    sigma: dict[str, float] = {}
    labels: dict[str, Label] = {}
    section = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in ("[objects]", "[users]"):
                section = line[1:-1]
                continue
            fields = line.split(",")
            if fields[0] == "id":
                continue
            try:
                if section == "objects":
                    quality[fields[0]] = float(fields[1])
                elif section == "users":
                    sigma[fields[0]] = float(fields[1])
                    labels[fields[0]] = Label(fields[2])
                else:
                    raise ParseError(f"{path}:{lineno}: row outside a section")
            except (IndexError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return TruthFile(quality, sigma, labels)
