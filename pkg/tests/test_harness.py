"""Sweep orchestration: result files, metrics, determinism, and parallelism."""

import json
from pathlib import Path

import pytest

from edgeflip import DataError, UsageError, generate_sbm, save_bundle
from edgeflip.harness import (
    ExperimentConfig,
    bench_influence,
    read_results_csv,
    run_sweep,
)


@pytest.fixture(scope="module")
def small_bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundles") / "sbm-small"
    g = generate_sbm(3, 60, 0.12, 0.01, feature_dim=16, noise=4.0, seed=13)
    save_bundle(g, root)
    return root


def small_config(bundle, **kw):
    base = dict(bundle=str(bundle), k=2, budgets=[1, 2, 4], seed=3,
                train_per_class=10, num_targets=12,
                victim={"epochs": 150, "lr": 0.2, "l2": 5e-6, "seed": 0})
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_budgets_must_increase(self, small_bundle):
        with pytest.raises(UsageError):
            small_config(small_bundle, budgets=[2, 2])
        with pytest.raises(UsageError):
            small_config(small_bundle, budgets=[4, 2])
        with pytest.raises(UsageError):
            small_config(small_bundle, budgets=[0, 1])

    def test_bad_workers_and_k(self, small_bundle):
        with pytest.raises(UsageError):
            small_config(small_bundle, workers=0)
        with pytest.raises(UsageError):
            small_config(small_bundle, k=0)

    def test_from_json_rejects_unknown_keys(self, tmp_path, small_bundle):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bundle": str(small_bundle), "busget": 3}))
        with pytest.raises(UsageError, match="busget"):
            ExperimentConfig.from_json(cfg)

    def test_from_json_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ExperimentConfig.from_json(tmp_path / "nope.json")


@pytest.fixture(scope="module")
def sweep(small_bundle, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    summary = run_sweep(small_config(small_bundle), out)
    return out, summary


class TestRunSweep:
    def test_row_grid_complete(self, sweep):
        out, summary = sweep
        rows = read_results_csv(out / "results.csv")
        assert len(rows) == 12 * 3
        assert {r["budget"] for r in rows} == {1, 2, 4}

    def test_success_rate_recomputes_from_csv(self, sweep):
        out, summary = sweep
        rows = read_results_csv(out / "results.csv")
        for b in (1, 2, 4):
            sub = [r for r in rows if r["budget"] == b]
            rate = sum(r["success"] for r in sub) / len(sub)
            assert summary["per_budget"][str(b)]["success_rate"] == pytest.approx(rate)

    def test_success_monotone_in_budget(self, sweep):
        out, summary = sweep
        rates = [summary["per_budget"][str(b)]["success_rate"] for b in (1, 2, 4)]
        assert rates == sorted(rates)

    def test_row_invariants(self, sweep):
        out, _ = sweep
        for r in read_results_csv(out / "results.csv"):
            assert r["edges_added"] + r["edges_removed"] <= r["budget"]
            assert r["success"] == int(r["final_margin"] > 0)

    def test_summary_schema(self, sweep):
        _, summary = sweep
        assert summary["schema_version"] == 1
        assert summary["num_targets"] == 12
        assert 0.0 <= summary["label_agreement"] <= 1.0


def _strip_wall_time(path: Path) -> list[str]:
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    drop = header.index("wall_time_ms")
    return [",".join(col for i, col in enumerate(line.split(",")) if i != drop)
            for line in lines]


class TestDeterminismAndParallelism:
    def test_identical_seeds_identical_results(self, small_bundle, tmp_path):
        run_sweep(small_config(small_bundle), tmp_path / "a")
        run_sweep(small_config(small_bundle), tmp_path / "b")
        assert _strip_wall_time(tmp_path / "a" / "results.csv") == \
            _strip_wall_time(tmp_path / "b" / "results.csv")

    def test_parallel_matches_serial(self, small_bundle, tmp_path):
        run_sweep(small_config(small_bundle, workers=1), tmp_path / "serial")
        run_sweep(small_config(small_bundle, workers=2), tmp_path / "par")
        assert _strip_wall_time(tmp_path / "serial" / "results.csv") == \
            _strip_wall_time(tmp_path / "par" / "results.csv")


class TestBench:
    def test_exact_not_faster_in_median(self, small_bundle):
        cfg = small_config(small_bundle, budgets=[1, 2, 4], num_targets=6)
        report = bench_influence(cfg, max_targets=6)
        assert report["num_targets"] == 6
        assert report["median_speedup"] >= 1.0

    def test_star_graph_sanity_runs_fast(self, tmp_path):
        # hub with leaf nodes of both classes; single-hop victim
        from edgeflip import Graph

        edges = [(0, i) for i in range(1, 9)]
        g = Graph(9, edges, labels=[0] + [i % 2 for i in range(1, 9)], num_classes=2)
        save_bundle(g, tmp_path / "star")
        cfg = ExperimentConfig(bundle=str(tmp_path / "star"), k=1, budgets=[2],
                               train_per_class=2, num_targets=1, seed=0,
                               victim={"epochs": 50, "lr": 0.2, "l2": 5e-6, "seed": 0})
        report = bench_influence(cfg, max_targets=1)
        # sub-millisecond on typical hardware; generous bound against timer noise
        assert report["median_approx_ms"] < 100
        assert report["median_exact_ms"] < 100

    def test_repeat_runs_identical_ordering(self, small_bundle, tmp_path):
        cfg = small_config(small_bundle, num_targets=5)
        a = bench_influence(cfg, max_targets=5)
        b = bench_influence(cfg, max_targets=5)
        assert [r["target"] for r in a["per_target"]] == [r["target"] for r in b["per_target"]]
