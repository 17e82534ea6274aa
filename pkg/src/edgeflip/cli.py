"""Command-line entry point.

Subcommands: attack (single target), sweep, influence, train-victim,
gen-sbm, inspect. Exit codes: 0 success, 1 usage error, 2 data error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .attack import build_candidates, plan_attack, resolve_labels
from .data import generate_sbm, load_bundle, pick_target_label, save_bundle
from .errors import DataError, EdgeflipError, UsageError
from .graph import norm_adj_power_row
from .harness import ExperimentConfig, bench_influence, run_sweep
from .influence import (
    ADD,
    DELETE,
    ESTIMATED_LABELS,
    TRUE_LABELS,
    InfluenceQuery,
    approx_constant,
    approx_delta,
    label_influence_exact,
)
from .victim import SgcModel, attack_margin, train_on_graph


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="edgeflip", description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="out")
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="plan an attack on one target node")
    p_attack.add_argument("--bundle", required=True)
    p_attack.add_argument("--target", required=True, help="node name or id")
    p_attack.add_argument("--budget", type=int, default=4)
    p_attack.add_argument("--k", type=int, default=2)
    p_attack.add_argument("--mode", choices=["approx", "exact"], default="approx")
    p_attack.add_argument("--label-source", choices=["true", "estimated"], default="true")
    p_attack.add_argument("--target-label", type=int, default=None,
                          help="override the second-best-class choice")
    p_attack.add_argument("--victim", default=None, help="trained model file (SGCv1)")
    p_attack.add_argument("--no-early-stop", action="store_true")

    p_sweep = sub.add_parser("sweep", help="budget sweep over sampled targets")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--bench", action="store_true",
                         help="also time approx vs exact planning")

    p_inf = sub.add_parser("influence", help="debug one influence query")
    p_inf.add_argument("--bundle", required=True)
    p_inf.add_argument("--v", required=True, help="source node name or id")
    p_inf.add_argument("--u", required=True, help="endpoint node name or id")
    p_inf.add_argument("--k", type=int, default=2)

    p_train = sub.add_parser("train-victim", help="train and save an SGC victim")
    p_train.add_argument("--bundle", required=True)
    p_train.add_argument("--k", type=int, default=2)
    p_train.add_argument("--lr", type=float, default=0.2)
    p_train.add_argument("--epochs", type=int, default=300)
    p_train.add_argument("--l2", type=float, default=5e-6)
    p_train.add_argument("--train-per-class", type=int, default=0,
                         help="0 trains on every labeled node")
    p_train.add_argument("--model-out", default="victim.json")

    p_sbm = sub.add_parser("gen-sbm", help="generate a synthetic block-model bundle")
    p_sbm.add_argument("--classes", type=int, default=4)
    p_sbm.add_argument("--per-class", type=int, default=250)
    p_sbm.add_argument("--p-in", type=float, default=0.03)
    p_sbm.add_argument("--p-out", type=float, default=0.002)
    p_sbm.add_argument("--feature-dim", type=int, default=32)
    p_sbm.add_argument("--noise", type=float, default=6.0)
    p_sbm.add_argument("--bundle-out", required=True)

    p_inspect = sub.add_parser("inspect", help="print bundle statistics")
    p_inspect.add_argument("--bundle", required=True)
    return parser


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _load_or_train_victim(g, args, label_all=True):
    if getattr(args, "victim", None):
        return SgcModel.load(args.victim)
    train_ids = [u for u in range(g.num_nodes) if g.labels[u] >= 0]
    if not train_ids:
        raise DataError("bundle has no labeled nodes to train on")
    return train_on_graph(g, train_ids, args.k, {"seed": args.seed})


def _cmd_attack(args) -> int:
    g = load_bundle(args.bundle)
    v = g.id_of(args.target)
    model = _load_or_train_victim(g, args)
    source = TRUE_LABELS if args.label_source == "true" else ESTIMATED_LABELS
    labels = resolve_labels(g, model, source)
    own = int(labels[v])
    c = args.target_label if args.target_label is not None else pick_target_label(model, g, v)
    q = InfluenceQuery(target=v, target_label=c, own_label=own, depth=args.k,
                       label_source=source,
                       node_labels_override=labels if source == ESTIMATED_LABELS else None)
    plan = plan_attack(g, q, args.budget,
                       victim=lambda ov: attack_margin(model, ov, v, c),
                       mode=args.mode, early_stop=not args.no_early_stop)
    _emit(plan.to_json_dict(g))
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.seed:
        config.seed = args.seed
    if args.workers > 1:
        config.workers = args.workers
    summary = run_sweep(config, args.out)
    if args.bench:
        summary["bench"] = bench_influence(config)
        Path(args.out, "bench.json").write_text(
            json.dumps(summary["bench"], indent=2) + "\n", encoding="utf-8")
    _emit(summary)
    return 0


def _cmd_influence(args) -> int:
    g = load_bundle(args.bundle)
    v, u = g.id_of(args.v), g.id_of(args.u)
    exact = label_influence_exact(g, v, u, args.k)
    dfs = float(norm_adj_power_row(g, v, args.k)[u])
    approx = None
    y_v = int(g.labels[v]) if g.labels[v] >= 0 else None
    y_u = int(g.labels[u]) if g.labels[u] >= 0 else None
    if y_v is not None and y_u is not None and y_u != y_v:
        q = InfluenceQuery(target=v, target_label=y_u, own_label=y_v, depth=args.k)
        direction = DELETE if g.has_edge(v, u) else ADD
        constant = approx_constant(g, q, direction)
        delta = approx_delta(g, q, u, direction)
        gain_val = constant + delta if direction == ADD else constant - delta
        approx = {"direction": direction, "constant": constant,
                  "delta": delta, "gain": gain_val}
    _emit({"v": g.name_of(v), "u": g.name_of(u), "k": args.k,
           "exact": exact, "dfs": dfs, "approx": approx})
    return 0


def _cmd_train_victim(args) -> int:
    g = load_bundle(args.bundle)
    hyper = {"lr": args.lr, "epochs": args.epochs, "l2": args.l2, "seed": args.seed}
    if args.train_per_class > 0:
        rng = np.random.default_rng(args.seed)
        train_ids = []
        for cls in range(g.num_classes):
            pool = np.where(g.labels == cls)[0]
            if pool.size < args.train_per_class:
                raise DataError(f"class {cls} has only {pool.size} labeled nodes")
            train_ids.extend(rng.choice(pool, args.train_per_class, replace=False).tolist())
        train_ids = sorted(train_ids)
    else:
        train_ids = [u for u in range(g.num_nodes) if g.labels[u] >= 0]
    model = train_on_graph(g, train_ids, args.k, hyper)
    model.save(args.model_out)
    acc = float(np.mean(model.predict(g)[train_ids] == g.labels[train_ids]))
    _emit({"model": args.model_out, "k": args.k, "train_size": len(train_ids),
           "final_loss": model.train_meta["final_loss"], "train_accuracy": acc})
    return 0


def _cmd_gen_sbm(args) -> int:
    g = generate_sbm(args.classes, args.per_class, args.p_in, args.p_out,
                     feature_dim=args.feature_dim, noise=args.noise, seed=args.seed)
    save_bundle(g, args.bundle_out)
    _emit({"bundle": args.bundle_out, "num_nodes": g.num_nodes,
           "num_edges": g.num_edges, "num_classes": g.num_classes})
    return 0


def _cmd_inspect(args) -> int:
    g = load_bundle(args.bundle)
    degs = g.degrees()
    _emit({
        "name": g.name,
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "num_classes": g.num_classes,
        "num_features": g.features.shape[1] if g.features is not None else 0,
        "labeled_nodes": int((g.labels >= 0).sum()),
        "degree_min": int(degs.min()) if g.num_nodes else None,
        "degree_mean": float(degs.mean()) if g.num_nodes else None,
        "degree_max": int(degs.max()) if g.num_nodes else None,
    })
    return 0


_COMMANDS = {
    "attack": _cmd_attack,
    "sweep": _cmd_sweep,
    "influence": _cmd_influence,
    "train-victim": _cmd_train_victim,
    "gen-sbm": _cmd_gen_sbm,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except EdgeflipError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
