"""
Experiment plumbing shared by the command line and the acceptance suite:
generate, prune isolated nodes, rank with each algorithm, score.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from reprank.engines import Algorithm, EngineConfig, RankResult, run
from reprank.metrics import auc, kendall_tau, top_fraction_benchmark
from reprank.rating_core import RatingScale, RatingTable, prune_isolated
from reprank.synthetic import GeneratorConfig, GroundTruth, SpamConfig, generate


@dataclass
class ExperimentSpec:
    users: int = 6000
    objects: int = 4000
    sparsity: float = 0.02
    sigma_min: float = 0.1
    sigma_max: float = 0.5
    scale_min: float = 0.0
    scale_max: float = 1.0
    discrete: bool = False
    seed: int = 1
    seeds: list[int] = field(default_factory=lambda: list(range(1, 11)))
    algorithms: list[str] = field(default_factory=lambda: ["mean", "ir", "corr"])
    delta: float = 1e-6
    max_iters: int = 1000
    ir_exponent: float = 1.0
    ir_epsilon: float = 1e-8
    spam_kinds: list[str] = field(default_factory=lambda: ["random"])
    spam_ratios: list[float] = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(11)])
    ratings: str | None = None
    format: str = "triples"
    delimiter: str = ","
    min_user_degree: int = 0
    truth: str | None = None
    rank_dir: str | None = None
    reputation: str | None = None
    benchmark_file: str | None = None
    benchmark_top_fraction: float = 0.05
    bin_width: float = 0.01
    bucket_width: float = 0.1
    out_dir: str = "out"

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for a in self.algorithms:
            Algorithm(a)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if any(not 0 <= r <= 1 for r in self.spam_ratios):
            raise ValueError("spam ratios must lie in [0, 1]")
        if list(self.spam_ratios) != sorted(self.spam_ratios):
            raise ValueError("spam ratios must be ascending")

    @classmethod
    def from_file(cls, path: str | os.PathLike, **overrides) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update(overrides)
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def scale(self) -> RatingScale:
        return RatingScale(self.scale_min, self.scale_max, self.discrete)

    def generator_config(self, seed: int) -> GeneratorConfig:
        return GeneratorConfig(
            self.users, self.objects, self.sparsity, self.sigma_min, self.sigma_max, self.scale, seed
        )

    def engine_config(self, algorithm: str) -> EngineConfig:
        return EngineConfig(
            Algorithm(algorithm), self.delta, self.max_iters, self.ir_exponent, self.ir_epsilon
        )


@dataclass
class Scored:
    algorithm: str
    result: RankResult
    tau: float | None
    auc: float | None


@dataclass
class Cell:
    """One generated dataset ranked by several algorithms."""

    seed: int
    spam: SpamConfig | None
    table: RatingTable
    truth: GroundTruth
    benchmark: set[int]
    scores: dict[str, Scored]


def prepare(table: RatingTable, truth: GroundTruth) -> tuple[RatingTable, GroundTruth]:
    """Drop users/objects without ratings and restrict the ground truth to match."""
    pruned, users, objects = prune_isolated(table)
    return pruned, truth.subset(users, objects)


def score(
    table: RatingTable,
    configs: Iterable[EngineConfig],
    truth: GroundTruth | None = None,
    benchmark: set[int] | None = None,
) -> dict[str, Scored]:
    out = {}
    for cfg in configs:
        res = run(table, cfg)
        tau = kendall_tau(truth.true_quality, res.quality) if truth is not None else None
        a = auc(res.quality, benchmark) if benchmark else None
        out[cfg.algorithm.value] = Scored(cfg.algorithm.value, res, tau, a)
    return out


def run_cell(
    gen: GeneratorConfig,
    spam: SpamConfig | None = None,
    configs: Sequence[EngineConfig] = (),
    top_fraction: float = 0.05,
) -> Cell:
    configs = configs or [EngineConfig(a) for a in Algorithm]
    table, truth = prepare(*generate(gen, spam))
    bench = top_fraction_benchmark(truth, top_fraction)
    return Cell(gen.seed, spam, table, truth, bench, score(table, configs, truth, bench))


def sweep(spec: ExperimentSpec) -> Iterable[Cell]:
    """Every (kind, ratio, seed) cell in the order they are written out."""
    configs = [spec.engine_config(a) for a in spec.algorithms]
    for kind in spec.spam_kinds:
        for ratio in spec.spam_ratios:
            for seed in spec.seeds:
                yield run_cell(
                    spec.generator_config(seed), SpamConfig(ratio, kind), configs, spec.benchmark_top_fraction
                )


def mean_over_seeds(rows: Sequence[dict], keys: Sequence[str], metrics: Sequence[str] = ("tau", "auc")) -> list[dict]:
    """Average metric columns of long-format rows grouped by ``keys`` (first-seen order)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, members in groups.items():
        row = dict(zip(keys, key))
        for m in metrics:
            vals = [r[m] for r in members if r[m] is not None]
            row[m] = float(np.mean(vals)) if vals else None
        row["n_seeds"] = len(members)
        out.append(row)
    return out
