"""
Command line driver.

    reprank generate   --users 6000 --objects 4000 --seed 3 --out-dir data
    reprank rank       --ratings data/ratings.csv --out-dir ranked
    reprank evaluate   --rank-dir ranked --truth data/truth.csv
    reprank evaluate   --seeds 1,2,3              # generate, rank and score in one go
    reprank spam-sweep --spam-kind random --spam-ratios 0,0.5,0.9 --seeds 1,2
    reprank bin-report --reputation ranked/reputation_corr.csv --truth data/truth.csv

Every flag may also come from a JSON file given with ``--config``; flags on
the command line win.  Exit status: 0 success, 2 bad input, 3 an engine hit
its iteration cap without converging.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from typing import Sequence

import numpy as np

from reprank import ingestion
from reprank.engines import EngineConfig, RankResult
from reprank.experiment import ExperimentSpec, mean_over_seeds, run_cell, score, sweep
from reprank.metrics import (
    EvalReport,
    auc,
    kendall_tau,
    reputation_histogram,
    reputation_vs_error,
    top_fraction_benchmark,
)
from reprank.rating_core import RatingError
from reprank.synthetic import SpamConfig, generate

log = logging.getLogger("reprank")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


class InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _words(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("shared")
    g.add_argument("--config", help="JSON file with default values for any flag")
    g.add_argument("--seed", type=int)
    g.add_argument("--seeds", type=_ints, help="comma separated list")
    g.add_argument("--algorithm", dest="algorithms", action="append", choices=["mean", "ir", "corr"])
    g.add_argument("--delta", type=float)
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--ir-exponent", dest="ir_exponent", type=float)
    g.add_argument("--ir-epsilon", dest="ir_epsilon", type=float)
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("-v", "--verbose", action="store_true")

    g = p.add_argument_group("generator")
    g.add_argument("--users", type=int)
    g.add_argument("--objects", type=int)
    g.add_argument("--sparsity", type=float)
    g.add_argument("--sigma-min", dest="sigma_min", type=float)
    g.add_argument("--sigma-max", dest="sigma_max", type=float)

    g = p.add_argument_group("spam")
    g.add_argument("--spam-kind", dest="spam_kinds", type=_words, help="random, push or random,push")
    g.add_argument("--spam-ratios", dest="spam_ratios", type=_floats)

    g = p.add_argument_group("data")
    g.add_argument("--ratings")
    g.add_argument("--format", choices=["triples", "movielens"])
    g.add_argument("--delimiter")
    g.add_argument("--scale-min", dest="scale_min", type=float)
    g.add_argument("--scale-max", dest="scale_max", type=float)
    g.add_argument("--discrete", action="store_true")
    g.add_argument("--min-user-degree", dest="min_user_degree", type=int)
    g.add_argument("--truth", help="ground-truth sidecar written by `generate`")
    g.add_argument("--rank-dir", dest="rank_dir", help="directory written by `rank`")
    g.add_argument("--reputation", help="reputation CSV written by `rank`")
    g.add_argument("--benchmark-file", dest="benchmark_file")
    g.add_argument("--benchmark-top-fraction", dest="benchmark_top_fraction", type=float)
    g.add_argument("--bin-width", dest="bin_width", type=float)
    g.add_argument("--bucket-width", dest="bucket_width", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="reprank", description="Reputation-weighted ranking experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("generate", "write a synthetic ratings file and its ground truth"),
        ("rank", "rank the objects of a ratings file"),
        ("evaluate", "score rankings by Kendall tau and AUC"),
        ("spam-sweep", "robustness of each algorithm against growing spam"),
        ("bin-report", "reputation against error magnitude and reputation histograms"),
    ]:
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return parser


def make_spec(args: argparse.Namespace) -> tuple[ExperimentSpec, set[str]]:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    if getattr(args, "format", None) == "movielens" or flags.get("format") == "movielens":
        flags.setdefault("scale_min", 1.0)
        flags.setdefault("scale_max", 5.0)
        flags.setdefault("discrete", True)
    if hasattr(args, "config"):
        spec = ExperimentSpec.from_file(args.config, **flags)
    else:
        spec = ExperimentSpec(**flags)
    return spec, set(flags)


def _writer(path: str):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_rows(path: str, header: Sequence[str], rows) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _engine_configs(spec: ExperimentSpec) -> list[EngineConfig]:
    return [spec.engine_config(a) for a in spec.algorithms]


# -- subcommands ---------------------------------------------------------


def cmd_generate(spec: ExperimentSpec, given: set[str]) -> int:
    spam = None
    if "spam_kinds" in given or "spam_ratios" in given:
        if len(spec.spam_kinds) != 1 or len(spec.spam_ratios) != 1:
            raise InputError("generate takes a single --spam-kind and a single --spam-ratios value")
        spam = SpamConfig(spec.spam_ratios[0], spec.spam_kinds[0])
    table, truth = generate(spec.generator_config(spec.seed), spam)
    os.makedirs(spec.out_dir, exist_ok=True)
    ingestion.write_ratings(table, os.path.join(spec.out_dir, "ratings.csv"))
    ingestion.write_truth(truth, table, os.path.join(spec.out_dir, "truth.csv"))
    print(ingestion.DatasetManifest.from_table(table).summary())
    return EXIT_OK


def _load(spec: ExperimentSpec):
    if not spec.ratings:
        raise InputError("--ratings is required")
    table, _ = ingestion.load_ratings(spec.ratings, spec.format, spec.scale, spec.delimiter)
    if spec.min_user_degree > 0:
        table = ingestion.filter_min_degree(table, spec.min_user_degree)
    print(ingestion.DatasetManifest.from_table(table).summary())
    return table


def _ranking(quality: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.arange(len(quality)), -quality))
    ranks = np.empty(len(quality), dtype=np.int64)
    ranks[order] = np.arange(1, len(quality) + 1)
    return ranks


def write_rank_outputs(out_dir: str, table, results: dict[str, RankResult]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for alg, res in results.items():
        ranks = _ranking(res.quality)
        _write_rows(
            os.path.join(out_dir, f"quality_{alg}.csv"),
            ["object_id", "quality", "rank"],
            zip(table.object_ids, res.quality.tolist(), ranks.tolist()),
        )
        _write_rows(
            os.path.join(out_dir, f"reputation_{alg}.csv"),
            ["user_id", "reputation"],
            zip(table.user_ids, res.reputation.tolist()),
        )
    _write_rows(
        os.path.join(out_dir, "rank_summary.csv"),
        ["algorithm", "iterations", "converged", "final_change"],
        [(a, r.iterations, r.converged, r.final_change) for a, r in results.items()],
    )


def _report_convergence(results: dict[str, RankResult]) -> int:
    status = EXIT_OK
    for alg, res in results.items():
        tag = "converged" if res.converged else "NOT converged"
        print(f"{alg}: {res.iterations} iterations, {tag}, final change {res.final_change:.3e}")
        if not res.converged:
            status = EXIT_NOT_CONVERGED
    return status


def cmd_rank(spec: ExperimentSpec, given: set[str]) -> int:
    table = _load(spec)
    results = {s.algorithm: s.result for s in score(table, _engine_configs(spec)).values()}
    write_rank_outputs(spec.out_dir, table, results)
    return _report_convergence(results)


def _read_csv(path: str) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _report(alg: str, tau, a, reputation=None, truth=None, spec=None, summary=None) -> EvalReport:
    rep = EvalReport(alg, a, tau)
    if summary is not None:
        rep.iterations, rep.converged, rep.final_change = summary
    if reputation is not None and truth is not None and len(truth.labels):
        rep.histogram = reputation_histogram(reputation, truth.labels, spec.bucket_width)
        rep.error_series = reputation_vs_error(reputation, truth, spec.bin_width)
    return rep


def _evaluate_files(spec: ExperimentSpec) -> int:
    summary = {r["algorithm"]: r for r in _read_csv(os.path.join(spec.rank_dir, "rank_summary.csv"))}
    algorithms = [a for a in spec.algorithms if a in summary] if spec.algorithms else list(summary)
    truth_file = ingestion.read_truth(spec.truth) if spec.truth else None
    rows, status = [], EXIT_OK
    for alg in algorithms:
        qrows = _read_csv(os.path.join(spec.rank_dir, f"quality_{alg}.csv"))
        rrows = _read_csv(os.path.join(spec.rank_dir, f"reputation_{alg}.csv"))
        object_ids = [r["object_id"] for r in qrows]
        quality = np.array([float(r["quality"]) for r in qrows])
        reputation = np.array([float(r["reputation"]) for r in rrows])
        truth = truth_file.align(object_ids, [r["user_id"] for r in rrows]) if truth_file else None
        if spec.benchmark_file:
            bench = ingestion.load_benchmark(spec.benchmark_file, {a: i for i, a in enumerate(object_ids)})
        else:
            bench = top_fraction_benchmark(truth, spec.benchmark_top_fraction)
        tau = kendall_tau(truth.true_quality, quality) if truth else None
        s = summary[alg]
        converged = s["converged"] == "true"
        if not converged:
            status = EXIT_NOT_CONVERGED
        report = _report(
            alg, tau, auc(quality, bench), reputation, truth, spec,
            (int(s["iterations"]), converged, float(s["final_change"])),
        )
        _write_text(os.path.join(spec.out_dir, f"report_{alg}.txt"), report.to_text())
        rows.append((alg, tau, report.auc))
        print(f"{alg}: tau={_fmt(tau) or 'n/a'} auc={report.auc:.4f}")
    _write_rows(os.path.join(spec.out_dir, "evaluation.csv"), ["algorithm", "tau", "auc"], rows)
    return status


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _evaluate_real(spec: ExperimentSpec) -> int:
    table = _load(spec)
    if spec.benchmark_file:
        bench = ingestion.load_benchmark(spec.benchmark_file, table)
        truth = None
    else:
        truth = ingestion.read_truth(spec.truth).align(table.object_ids, table.user_ids)
        bench = top_fraction_benchmark(truth, spec.benchmark_top_fraction)
    scored = score(table, _engine_configs(spec), truth, bench)
    results = {a: s.result for a, s in scored.items()}
    write_rank_outputs(spec.out_dir, table, results)
    rows = []
    for alg, s in scored.items():
        r = s.result
        report = _report(alg, s.tau, s.auc, r.reputation, truth, spec,
                         (r.iterations, r.converged, r.final_change))
        _write_text(os.path.join(spec.out_dir, f"report_{alg}.txt"), report.to_text())
        rows.append((alg, s.tau, s.auc))
        print(f"{alg}: tau={_fmt(s.tau) or 'n/a'} auc={s.auc:.4f}")
    _write_rows(os.path.join(spec.out_dir, "evaluation.csv"), ["algorithm", "tau", "auc"], rows)
    return _report_convergence(results)


def _evaluate_synthetic(spec: ExperimentSpec) -> int:
    configs = _engine_configs(spec)
    rows, status = [], EXIT_OK
    for seed in spec.seeds:
        cell = run_cell(spec.generator_config(seed), None, configs, spec.benchmark_top_fraction)
        for alg, s in cell.scores.items():
            r = s.result
            if not r.converged:
                status = EXIT_NOT_CONVERGED
            rows.append(dict(seed=seed, algorithm=alg, tau=s.tau, auc=s.auc, iterations=r.iterations,
                             converged=r.converged, final_change=r.final_change))
            report = _report(alg, s.tau, s.auc, r.reputation, cell.truth, spec,
                             (r.iterations, r.converged, r.final_change))
            _write_text(os.path.join(spec.out_dir, f"report_{alg}_seed{seed}.txt"), report.to_text())
    header = ["seed", "algorithm", "tau", "auc", "iterations", "converged", "final_change"]
    _write_rows(os.path.join(spec.out_dir, "evaluation.csv"), header, [[r[k] for k in header] for r in rows])
    means = mean_over_seeds(rows, ["algorithm"])
    _write_rows(os.path.join(spec.out_dir, "evaluation_mean.csv"), ["algorithm", "tau", "auc", "n_seeds"],
                [[m["algorithm"], m["tau"], m["auc"], m["n_seeds"]] for m in means])
    for m in means:
        print(f"{m['algorithm']}: mean tau={m['tau']:.4f} mean auc={m['auc']:.4f} over {m['n_seeds']} seeds")
    return status


def cmd_evaluate(spec: ExperimentSpec, given: set[str]) -> int:
    os.makedirs(spec.out_dir, exist_ok=True)
    if spec.rank_dir or spec.ratings:
        if not spec.truth and not spec.benchmark_file:
            raise InputError("nothing to evaluate against: give --truth or --benchmark-file")
        return _evaluate_files(spec) if spec.rank_dir else _evaluate_real(spec)
    return _evaluate_synthetic(spec)


def cmd_spam_sweep(spec: ExperimentSpec, given: set[str]) -> int:
    os.makedirs(spec.out_dir, exist_ok=True)
    rows, hist_rows, bin_rows = [], [], []
    status = EXIT_OK
    for cell in sweep(spec):
        kind, ratio = cell.spam.kind.value, cell.spam.ratio
        for alg, s in cell.scores.items():
            r = s.result
            if not r.converged:
                status = EXIT_NOT_CONVERGED
            rows.append(dict(kind=kind, ratio=ratio, algorithm=alg, seed=cell.seed, tau=s.tau, auc=s.auc,
                             iterations=r.iterations, converged=r.converged))
            if alg != "corr":
                continue
            h = reputation_histogram(r.reputation, cell.truth.labels, spec.bucket_width)
            edges = h.edges.tolist()
            for pop in ("honest", "spammer"):
                counts = getattr(h, pop)
                for k in range(len(counts)):
                    hist_rows.append((kind, ratio, cell.seed, alg, pop, edges[k], edges[k + 1], int(counts[k])))
            for b in reputation_vs_error(r.reputation, cell.truth, spec.bin_width):
                bin_rows.append((kind, ratio, cell.seed, alg, b.center, b.mean_reputation, b.count))
        log.info("kind=%s ratio=%s seed=%s done", kind, ratio, cell.seed)

    header = ["kind", "ratio", "algorithm", "seed", "tau", "auc", "iterations", "converged"]
    _write_rows(os.path.join(spec.out_dir, "sweep.csv"), header, [[r[k] for k in header] for r in rows])
    means = mean_over_seeds(rows, ["kind", "ratio", "algorithm"])
    _write_rows(os.path.join(spec.out_dir, "sweep_mean.csv"), ["kind", "ratio", "algorithm", "tau", "auc", "n_seeds"],
                [[m["kind"], m["ratio"], m["algorithm"], m["tau"], m["auc"], m["n_seeds"]] for m in means])
    _write_rows(os.path.join(spec.out_dir, "reputation_histogram.csv"),
                ["kind", "ratio", "seed", "algorithm", "population", "bucket_lo", "bucket_hi", "count"], hist_rows)
    _write_rows(os.path.join(spec.out_dir, "reputation_vs_error.csv"),
                ["kind", "ratio", "seed", "algorithm", "sigma_center", "mean_reputation", "count"], bin_rows)
    for m in means:
        print(f"{m['kind']} {m['ratio']:.2f} {m['algorithm']:>4}: tau={m['tau']:.4f} auc={m['auc']:.4f}")
    return status


def cmd_bin_report(spec: ExperimentSpec, given: set[str]) -> int:
    if not spec.reputation or not spec.truth:
        raise InputError("bin-report needs --reputation and --truth")
    rrows = _read_csv(spec.reputation)
    reputation = np.array([float(r["reputation"]) for r in rrows])
    tf = ingestion.read_truth(spec.truth)
    user_ids = [r["user_id"] for r in rrows]
    truth = tf.align(list(tf.object_quality), user_ids)
    os.makedirs(spec.out_dir, exist_ok=True)
    bins = reputation_vs_error(reputation, truth, spec.bin_width)
    _write_rows(os.path.join(spec.out_dir, "reputation_vs_error.csv"), ["sigma_center", "mean_reputation", "count"],
                [(b.center, b.mean_reputation, b.count) for b in bins])
    h = reputation_histogram(reputation, truth.labels, spec.bucket_width)
    edges = h.edges.tolist()
    _write_rows(os.path.join(spec.out_dir, "reputation_histogram.csv"), ["bucket_lo", "bucket_hi", "honest", "spammer"],
                [(edges[k], edges[k + 1], int(h.honest[k]), int(h.spammer[k])) for k in range(len(h.honest))])
    for b in bins:
        print(f"sigma {b.center:.3f}: mean reputation {b.mean_reputation:.4f} ({b.count} users)")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "rank": cmd_rank,
    "evaluate": cmd_evaluate,
    "spam-sweep": cmd_spam_sweep,
    "bin-report": cmd_bin_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        spec, given = make_spec(args)
        return COMMANDS[args.command](spec, given)
    except (InputError, RatingError, ValueError, KeyError, OSError) as exc:
        print(f"reprank {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
