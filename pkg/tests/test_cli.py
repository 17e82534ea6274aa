"""CLI surface: subcommands, JSON output, and exit codes."""

import json

import pytest

from edgeflip.cli import main

from conftest import TOY_BUNDLE

GOLDEN_ATTACK_PLAN = {
    "target": "v",
    "target_label": 1,
    "own_label": 0,
    "budget": 1,
    "mode": "exact",
    "k": 2,
    "label_source": "true_labels",
    "success": False,
    "edges_used": 1,
    "toggles": [
        {"node": "u8", "direction": "add"}
    ],
}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestAttackCommand:
    def test_exact_single_step_matches_golden(self, capsys):
        code, out, _ = run(capsys, "attack", "--bundle", str(TOY_BUNDLE),
                           "--target", "v", "--budget", "1", "--k", "2",
                           "--mode", "exact")
        assert code == 0
        plan = json.loads(out)
        for key, want in GOLDEN_ATTACK_PLAN.items():
            if key == "toggles":
                assert len(plan["toggles"]) == 1
                assert plan["toggles"][0]["node"] == "u8"
                assert plan["toggles"][0]["direction"] == "add"
            else:
                assert plan[key] == want
        assert plan["final_margin"] < 0
        assert plan["wall_time_ms"] >= 0

    def test_unknown_target_name(self, capsys):
        code, _, err = run(capsys, "attack", "--bundle", str(TOY_BUNDLE),
                           "--target", "nosuch", "--budget", "1")
        assert code == 1
        assert "nosuch" in err


class TestExitCodes:
    def test_missing_config_is_data_error(self, capsys):
        code, _, err = run(capsys, "sweep", "--config", "missing.json")
        assert code == 2
        assert "missing.json" in err

    def test_unknown_flag_is_usage_error(self, capsys):
        code, _, err = run(capsys, "--wat", "inspect", "--bundle", str(TOY_BUNDLE))
        assert code == 1
        assert "usage" in err.lower()

    def test_missing_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys)
        assert code == 1

    def test_bad_bundle_is_data_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "inspect", "--bundle", str(tmp_path))
        assert code == 2


class TestInfluenceCommand:
    def test_exact_equals_dfs(self, capsys):
        code, out, _ = run(capsys, "influence", "--bundle", str(TOY_BUNDLE),
                           "--v", "v", "--u", "u6", "--k", "2")
        assert code == 0
        payload = json.loads(out)
        assert payload["exact"] == pytest.approx(payload["dfs"], abs=1e-12)
        assert payload["v"] == "v" and payload["u"] == "u6"
        # u6 is an addition candidate, so a gain breakdown is attached
        assert payload["approx"]["direction"] == "add"

    def test_same_label_pair_has_no_breakdown(self, capsys):
        code, out, _ = run(capsys, "influence", "--bundle", str(TOY_BUNDLE),
                           "--v", "v", "--u", "u2", "--k", "2")
        assert code == 0
        assert json.loads(out)["approx"] is None


class TestGenerateAndInspect:
    def test_round_trip(self, capsys, tmp_path):
        bundle = tmp_path / "sbm"
        code, out, _ = run(capsys, "--seed", "4", "gen-sbm", "--classes", "2",
                           "--per-class", "30", "--p-in", "0.2", "--p-out", "0.02",
                           "--bundle-out", str(bundle))
        assert code == 0
        gen = json.loads(out)
        code, out, _ = run(capsys, "inspect", "--bundle", str(bundle))
        assert code == 0
        info = json.loads(out)
        assert info["num_nodes"] == 60 == gen["num_nodes"]
        assert info["num_edges"] == gen["num_edges"]
        assert info["labeled_nodes"] == 60


class TestTrainVictim:
    def test_writes_loadable_model(self, capsys, tmp_path):
        model_path = tmp_path / "model.json"
        code, out, _ = run(capsys, "train-victim", "--bundle", str(TOY_BUNDLE),
                           "--k", "2", "--model-out", str(model_path))
        assert code == 0
        info = json.loads(out)
        assert info["train_size"] == 10
        from edgeflip.victim import SgcModel

        model = SgcModel.load(model_path)
        assert model.trained and model.depth == 2


class TestSweepCommand:
    def test_sweep_end_to_end(self, capsys, tmp_path):
        from edgeflip import generate_sbm, save_bundle

        bundle = tmp_path / "b"
        save_bundle(generate_sbm(2, 40, 0.15, 0.02, feature_dim=8, noise=3.0, seed=2), bundle)
        cfg = {"bundle": str(bundle), "k": 2, "budgets": [1, 3], "seed": 1,
               "train_per_class": 8, "num_targets": 6,
               "victim": {"epochs": 100, "lr": 0.2, "l2": 5e-6, "seed": 0}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        code, out, _ = run(capsys, "--out", str(tmp_path / "results"),
                           "sweep", "--config", str(cfg_path))
        assert code == 0
        summary = json.loads(out)
        assert (tmp_path / "results" / "results.csv").is_file()
        assert (tmp_path / "results" / "summary.json").is_file()
        assert set(summary["per_budget"]) == {"1", "3"}
