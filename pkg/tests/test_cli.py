import csv
import json

import pytest

from reprank.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, main

SMALL = ["--users", "120", "--objects", "80", "--sparsity", "0.1"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def listing(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert main(["generate", *SMALL, "--seed", "3", "--out-dir", str(out)]) == EXIT_OK
    return out


def test_generate_desk_scale(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["generate", "--users", "60", "--objects", "40", "--out-dir", str(out)]) == EXIT_OK
    lines = [ln for ln in (out / "ratings.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 48
    assert "ratings=48" in capsys.readouterr().out
    assert (out / "truth.csv").exists()


def test_generate_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", *SMALL, "--seed", "9", "--out-dir", str(tmp_path / name)]) == EXIT_OK
    assert listing(tmp_path / "a") == listing(tmp_path / "b")
    main(["generate", *SMALL, "--seed", "10", "--out-dir", str(tmp_path / "c")])
    assert listing(tmp_path / "a") != listing(tmp_path / "c")


def test_generate_with_spam(tmp_path):
    out = tmp_path / "s"
    args = ["generate", *SMALL, "--spam-kind", "push", "--spam-ratios", "0.25", "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    labels = [ln.split(",")[2] for ln in (out / "truth.csv").read_text().split("[users]")[1].split()[1:]]
    assert sum(lab.startswith("push") for lab in labels) == 30
    bad = ["generate", *SMALL, "--spam-ratios", "0.1,0.2", "--out-dir", str(out)]
    assert main(bad) == EXIT_INPUT


def test_rank_outputs(dataset, tmp_path, capsys):
    out = tmp_path / "ranked"
    assert main(["rank", "--ratings", str(dataset / "ratings.csv"), "--out-dir", str(out)]) == EXIT_OK
    summary = {r["algorithm"]: r for r in rows(out / "rank_summary.csv")}
    assert summary["mean"]["iterations"] == "1"
    assert summary["corr"]["converged"] == "true"
    assert float(summary["corr"]["final_change"]) < 1e-6
    q = rows(out / "quality_corr.csv")
    assert sorted(int(r["rank"]) for r in q) == list(range(1, len(q) + 1))
    best = min(q, key=lambda r: int(r["rank"]))
    assert float(best["quality"]) == max(float(r["quality"]) for r in q)
    raters = {ln.split(",")[0] for ln in (dataset / "ratings.csv").read_text().splitlines() if not ln.startswith("#")}
    assert {r["user_id"] for r in rows(out / "reputation_ir.csv")} == raters
    assert "converged" in capsys.readouterr().out


def test_rank_single_algorithm(dataset, tmp_path):
    out = tmp_path / "r"
    main(["rank", "--ratings", str(dataset / "ratings.csv"), "--algorithm", "ir", "--out-dir", str(out)])
    assert [r["algorithm"] for r in rows(out / "rank_summary.csv")] == ["ir"]


def test_non_convergence_exit_status(dataset, tmp_path, capsys):
    args = ["rank", "--ratings", str(dataset / "ratings.csv"), "--algorithm", "corr",
            "--max-iters", "1", "--delta", "1e-300", "--out-dir", str(tmp_path / "r")]
    assert main(args) == EXIT_NOT_CONVERGED
    assert "NOT converged" in capsys.readouterr().out


def test_input_errors(tmp_path, capsys):
    assert main(["rank", "--out-dir", str(tmp_path)]) == EXIT_INPUT
    assert main(["rank", "--ratings", str(tmp_path / "missing.csv"), "--out-dir", str(tmp_path)]) == EXIT_INPUT
    bad = tmp_path / "bad.csv"
    bad.write_text("1,1,7\n")
    assert main(["rank", "--ratings", str(bad), "--out-dir", str(tmp_path)]) == EXIT_INPUT
    assert "bad.csv:1" in capsys.readouterr().err
    assert main(["generate", "--spam-ratios", "0.5,0.1", "--out-dir", str(tmp_path)]) == EXIT_INPUT


def test_evaluate_needs_reference(dataset, tmp_path):
    rank_dir = tmp_path / "ranked"
    main(["rank", "--ratings", str(dataset / "ratings.csv"), "--out-dir", str(rank_dir)])
    assert main(["evaluate", "--rank-dir", str(rank_dir), "--out-dir", str(tmp_path / "e")]) == EXIT_INPUT


def test_evaluate_rank_dir_against_truth(dataset, tmp_path):
    rank_dir = tmp_path / "ranked"
    main(["rank", "--ratings", str(dataset / "ratings.csv"), "--out-dir", str(rank_dir)])
    out = tmp_path / "e"
    args = ["evaluate", "--rank-dir", str(rank_dir), "--truth", str(dataset / "truth.csv"), "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    ev = {r["algorithm"]: r for r in rows(out / "evaluation.csv")}
    assert set(ev) == {"mean", "ir", "corr"}
    for r in ev.values():
        assert 0.5 < float(r["tau"]) <= 1 and 0.5 < float(r["auc"]) <= 1
    assert (out / "report_corr.txt").read_text().startswith("algorithm = corr")


def test_evaluate_truth_as_estimate(dataset, tmp_path):
    # a ranking that is the truth itself scores perfectly
    text = (dataset / "truth.csv").read_text()
    objects = [ln.split(",") for ln in text.split("[objects]")[1].split("[users]")[0].split()[1:]]
    users = [ln.split(",") for ln in text.split("[users]")[1].split()[1:]]
    rank_dir = tmp_path / "oracle"
    rank_dir.mkdir()
    (rank_dir / "quality_mean.csv").write_text(
        "object_id,quality,rank\n" + "".join(f"{o},{q},0\n" for o, q in objects))
    (rank_dir / "reputation_mean.csv").write_text(
        "user_id,reputation\n" + "".join(f"{u[0]},1.0\n" for u in users))
    (rank_dir / "rank_summary.csv").write_text("algorithm,iterations,converged,final_change\nmean,1,true,0.0\n")
    out = tmp_path / "e"
    assert main(["evaluate", "--rank-dir", str(rank_dir), "--truth", str(dataset / "truth.csv"),
                 "--out-dir", str(out)]) == EXIT_OK
    (r,) = rows(out / "evaluation.csv")
    assert float(r["tau"]) == 1.0 and float(r["auc"]) == 1.0


def test_evaluate_real_data_with_benchmark(dataset, tmp_path):
    bench = tmp_path / "bench.txt"
    bench.write_text("0\n1\n2\n3\n4\n")
    out = tmp_path / "e"
    args = ["evaluate", "--ratings", str(dataset / "ratings.csv"), "--benchmark-file", str(bench),
            "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    for r in rows(out / "evaluation.csv"):
        assert r["tau"] == ""
        assert 0 <= float(r["auc"]) <= 1
    assert (out / "quality_corr.csv").exists()


def test_evaluate_synthetic_seeds(tmp_path):
    out = tmp_path / "e"
    args = ["evaluate", *SMALL, "--seeds", "1,2", "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    assert len(rows(out / "evaluation.csv")) == 6
    means = {r["algorithm"]: r for r in rows(out / "evaluation_mean.csv")}
    assert means["corr"]["n_seeds"] == "2"
    assert (out / "report_ir_seed2.txt").exists()


def test_spam_sweep_rows_and_zero_ratio(tmp_path):
    out = tmp_path / "sw"
    args = ["spam-sweep", *SMALL, "--spam-kind", "random,push", "--spam-ratios", "0,0.5,1",
            "--seeds", "1,2", "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    sweep = rows(out / "sweep.csv")
    assert len(sweep) == 3 * 2 * 2 * 3
    assert len(rows(out / "sweep_mean.csv")) == 3 * 2 * 3
    hist = rows(out / "reputation_histogram.csv")
    assert {r["algorithm"] for r in hist} == {"corr"}
    assert rows(out / "reputation_vs_error.csv")

    ev = tmp_path / "ev"
    main(["evaluate", *SMALL, "--seeds", "1,2", "--out-dir", str(ev)])
    clean = {(r["seed"], r["algorithm"]): (r["tau"], r["auc"]) for r in rows(ev / "evaluation.csv")}
    for r in sweep:
        if float(r["ratio"]) == 0.0:
            assert clean[r["seed"], r["algorithm"]] == (r["tau"], r["auc"])


def test_spam_sweep_is_byte_identical(tmp_path):
    args = ["spam-sweep", *SMALL, "--spam-ratios", "0.2,0.6", "--seeds", "4"]
    main([*args, "--out-dir", str(tmp_path / "a")])
    main([*args, "--out-dir", str(tmp_path / "b")])
    assert listing(tmp_path / "a") == listing(tmp_path / "b")


def test_bin_report(tmp_path):
    data = tmp_path / "d"
    main(["generate", *SMALL, "--spam-kind", "random", "--spam-ratios", "0.3", "--out-dir", str(data)])
    main(["rank", "--ratings", str(data / "ratings.csv"), "--algorithm", "corr", "--out-dir", str(tmp_path / "r")])
    out = tmp_path / "b"
    args = ["bin-report", "--reputation", str(tmp_path / "r" / "reputation_corr.csv"),
            "--truth", str(data / "truth.csv"), "--out-dir", str(out)]
    assert main(args) == EXIT_OK
    hist = rows(out / "reputation_histogram.csv")
    assert len(hist) == 10
    rated = {r["user_id"] for r in rows(tmp_path / "r" / "reputation_corr.csv")}
    users = [ln.split(",") for ln in (data / "truth.csv").read_text().split("[users]")[1].split()[1:]]
    assert sum(int(r["spammer"]) for r in hist) == sum(u[0] in rated and u[2] != "honest" for u in users) > 0
    assert rows(out / "reputation_vs_error.csv")
    assert main(["bin-report", "--out-dir", str(out)]) == EXIT_INPUT


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"users": 60, "objects": 40, "seed": 5}))
    main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "a")])
    main(["generate", "--users", "60", "--objects", "40", "--seed", "5", "--out-dir", str(tmp_path / "b")])
    assert listing(tmp_path / "a") == listing(tmp_path / "b")
    main(["generate", "--config", str(cfg), "--users", "100", "--out-dir", str(tmp_path / "c")])
    assert "users=100" in (tmp_path / "c" / "ratings.csv").read_text().splitlines()[0]

    cfg.write_text(json.dumps({"userz": 60}))
    assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "d")]) == EXIT_INPUT
