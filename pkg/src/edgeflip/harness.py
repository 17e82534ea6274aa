"""Experiment orchestration: budget sweeps, metrics, and result files.

One plan is computed per target at the largest budget; success at each
smaller budget is read off the plan prefix (valid because the greedy loop
is incremental). Rows land in results.csv in (target, budget) order so
identical configs produce identical files apart from wall-time columns.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attack import AttackPlan, plan_attack, resolve_labels
from .data import load_bundle, pick_target_label, sample_split
from .errors import DataError, UsageError
from .graph import Graph
from .influence import ESTIMATED_LABELS, LABEL_SOURCES, InfluenceQuery
from .victim import DEFAULT_HYPER, SgcModel, attack_margin, train_on_graph

RESULT_COLUMNS = ("target", "target_label", "budget", "success", "edges_added",
                  "edges_removed", "final_margin", "wall_time_ms", "mode", "label_source")
SUMMARY_SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    bundle: str
    k: int = 2
    budgets: list[int] = field(default_factory=lambda: [2, 4, 6, 8, 10])
    mode: str = "approx"
    label_source: str = ESTIMATED_LABELS
    seed: int = 0
    workers: int = 1
    victim: dict = field(default_factory=lambda: dict(DEFAULT_HYPER))
    early_stop: bool = True
    require_positive_gain: bool = False
    candidate_cap: Optional[int] = None
    train_per_class: int = 20
    num_targets: int = 100

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("k must be at least 1")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        if not self.budgets:
            raise UsageError("budgets must be non-empty")
        if any(b < 1 for b in self.budgets) or any(
                a >= b for a, b in zip(self.budgets, self.budgets[1:])):
            raise UsageError("budgets must be strictly increasing positive integers")
        if self.mode not in ("approx", "exact"):
            raise UsageError("mode must be 'approx' or 'exact'")
        if self.label_source not in LABEL_SOURCES:
            raise UsageError(f"label_source must be one of {LABEL_SOURCES}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise DataError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"config file is not valid JSON: {exc}") from None
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)


# per-process context for worker pools (populated by fork initializer)
_CTX: dict = {}


def _init_worker(graph, model, config, labels_for_attack, proba):
    _CTX["graph"] = graph
    _CTX["model"] = model
    _CTX["config"] = config
    _CTX["labels"] = labels_for_attack
    _CTX["proba"] = proba


def _plan_for_target(v: int) -> tuple[int, int, float, AttackPlan]:
    g: Graph = _CTX["graph"]
    model: SgcModel = _CTX["model"]
    cfg: ExperimentConfig = _CTX["config"]
    labels = _CTX["labels"]
    proba = _CTX["proba"]
    c = pick_target_label(model, g, v, proba=proba)
    own = int(labels[v])
    q = InfluenceQuery(target=v, target_label=c, own_label=own, depth=cfg.k,
                       label_source=cfg.label_source,
                       node_labels_override=labels if cfg.label_source == ESTIMATED_LABELS else None)
    clean_margin = attack_margin(model, g, v, c)
    plan = plan_attack(
        g, q, budget=max(cfg.budgets),
        victim=lambda ov: attack_margin(model, ov, v, c),
        mode=cfg.mode, early_stop=cfg.early_stop,
        require_positive_gain=cfg.require_positive_gain,
        candidate_cap=cfg.candidate_cap)
    return v, c, clean_margin, plan


def _prepare(config: ExperimentConfig):
    g = load_bundle(config.bundle)

    def trainer(graph, train_ids):
        return train_on_graph(graph, train_ids, config.k, config.victim)

    split, model = sample_split(g, trainer, n_per_class=config.train_per_class,
                                n_targets=config.num_targets, seed=config.seed)
    proba = model.predict_proba(g)
    labels = resolve_labels(g, model, config.label_source, proba=proba)
    agreement = float(np.mean(labels[g.labels >= 0] == g.labels[g.labels >= 0]))
    return g, model, split, proba, labels, agreement


def _run_plans(config: ExperimentConfig, g, model, split, proba, labels):
    targets = split.target_ids
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                                 initargs=(g, model, config, labels, proba)) as pool:
            results = list(pool.map(_plan_for_target, targets, chunksize=4))
    else:
        _init_worker(g, model, config, labels, proba)
        results = [_plan_for_target(v) for v in targets]
    results.sort(key=lambda r: r[0])
    return results


def run_sweep(config: ExperimentConfig, out_dir) -> dict:
    """Train, split, attack every target, and write results.csv + summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g, model, split, proba, labels, agreement = _prepare(config)
    results = _run_plans(config, g, model, split, proba, labels)

    rows = []
    for v, c, clean_margin, plan in results:
        for b in config.budgets:
            steps = plan.steps_at(b)
            rows.append({
                "target": v,
                "target_label": c,
                "budget": b,
                "success": int(plan.success_at(b)),
                "edges_added": plan.edges_added(steps),
                "edges_removed": plan.edges_removed(steps),
                "final_margin": plan.margin_at(b, clean_margin),
                "wall_time_ms": round(plan.wall_time_ms, 3),
                "mode": config.mode,
                "label_source": config.label_source,
            })

    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    per_budget = {}
    times = [plan.wall_time_ms for _, _, _, plan in results]
    for b in config.budgets:
        sub = [r for r in rows if r["budget"] == b]
        added = sum(r["edges_added"] for r in sub)
        removed = sum(r["edges_removed"] for r in sub)
        per_budget[str(b)] = {
            "success_rate": sum(r["success"] for r in sub) / len(sub),
            "added_edge_fraction": added / (added + removed) if added + removed else None,
            "mean_wall_time_ms": statistics.mean(times),
            "median_wall_time_ms": statistics.median(times),
        }
    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "config": config.to_dict(),
        "num_targets": len(split.target_ids),
        "train_size": len(split.train_ids),
        "label_agreement": agreement,
        "per_budget": per_budget,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def bench_influence(config: ExperimentConfig, max_targets: int = 20) -> dict:
    """Time approx-gain planning against exact-gain planning per target."""
    g, model, split, proba, labels, _ = _prepare(config)
    targets = split.target_ids[:max_targets]
    per_target = []
    for v in targets:
        c = pick_target_label(model, g, v, proba=proba)
        q = InfluenceQuery(target=v, target_label=c, own_label=int(labels[v]),
                           depth=config.k, label_source=config.label_source,
                           node_labels_override=labels if config.label_source == ESTIMATED_LABELS else None)
        victim_cb = lambda ov: attack_margin(model, ov, v, c)
        budget = max(config.budgets)
        timings = {}
        for mode in ("approx", "exact"):
            t0 = time.perf_counter()
            plan_attack(g, q, budget, victim_cb, mode=mode,
                        early_stop=config.early_stop,
                        candidate_cap=config.candidate_cap)
            timings[mode] = (time.perf_counter() - t0) * 1e3
        per_target.append({
            "target": v,
            "approx_ms": timings["approx"],
            "exact_ms": timings["exact"],
            "speedup": timings["exact"] / max(timings["approx"], 1e-9),
        })
    speedups = [r["speedup"] for r in per_target]
    return {
        "num_targets": len(per_target),
        "median_speedup": statistics.median(speedups) if speedups else None,
        "median_approx_ms": statistics.median(r["approx_ms"] for r in per_target) if per_target else None,
        "median_exact_ms": statistics.median(r["exact_ms"] for r in per_target) if per_target else None,
        "per_target": per_target,
    }


def read_results_csv(path) -> list[dict]:
    """Parse a results.csv back into typed rows (used for metric recomputation)."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            rows.append({
                "target": int(raw["target"]),
                "target_label": int(raw["target_label"]),
                "budget": int(raw["budget"]),
                "success": int(raw["success"]),
                "edges_added": int(raw["edges_added"]),
                "edges_removed": int(raw["edges_removed"]),
                "final_margin": float(raw["final_margin"]),
                "wall_time_ms": float(raw["wall_time_ms"]),
                "mode": raw["mode"],
                "label_source": raw["label_source"],
            })
    return rows
