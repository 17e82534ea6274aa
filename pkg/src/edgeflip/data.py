"""Graph bundle directory format, synthetic graph generation, and splits.

A bundle is a directory holding meta.json, edges.tsv, labels.tsv, plus
optional features.tsv and splits.json. The text formats are tab-separated
with LF line endings and canonical ordering so that saved bundles diff and
round-trip cleanly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import DataError, UsageError
from .graph import Graph
from .victim import SgcModel

META_KEYS = ("num_nodes", "num_classes", "num_features", "name")


@dataclass
class ExperimentSplit:
    train_ids: list[int]
    target_ids: list[int]
    seed: int


def load_bundle(path) -> Graph:
    """Read a bundle directory into a Graph with dense integer ids."""
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise DataError(f"missing meta.json in {root}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"meta.json is not valid JSON: {exc}") from None
    for key in META_KEYS:
        if key not in meta:
            raise DataError(f"meta.json missing key {key!r}")
    n = int(meta["num_nodes"])
    num_classes = int(meta["num_classes"])
    num_features = int(meta["num_features"])
    name = str(meta["name"])
    node_names = meta.get("node_names")

    edges = _read_edges(root / "edges.tsv", n)
    labels = _read_labels(root / "labels.tsv", n, num_classes)
    features = None
    feat_path = root / "features.tsv"
    if num_features > 0 and feat_path.is_file():
        features = _read_features(feat_path, n, num_features)
    elif num_features > 0:
        raise DataError(f"meta.json declares {num_features} features but features.tsv is absent")

    return Graph(n, edges, labels=labels, num_classes=num_classes,
                 features=features, node_names=node_names, name=name)


def save_bundle(g: Graph, path, name: Optional[str] = None) -> None:
    """Write a graph as a canonical bundle (sorted lines, LF endings)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    num_features = g.features.shape[1] if g.features is not None else 0
    meta = {
        "num_nodes": g.num_nodes,
        "num_classes": g.num_classes,
        "num_features": num_features,
        "name": name if name is not None else g.name,
    }
    if g.node_names is not None:
        meta["node_names"] = g.node_names
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    lines = [f"{u}\t{v}\n" for u, v in g.edges()]
    (root / "edges.tsv").write_text("".join(lines), encoding="utf-8")

    lab_lines = [f"{u}\t{int(g.labels[u])}\n" for u in range(g.num_nodes) if g.labels[u] >= 0]
    (root / "labels.tsv").write_text("".join(lab_lines), encoding="utf-8")

    if g.features is not None:
        coo = g.features.tocoo()
        triplets = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
        feat_lines = [f"{r}\t{c}\t{val!r}\n" for r, c, val in triplets]
        (root / "features.tsv").write_text("".join(feat_lines), encoding="utf-8")


def _read_edges(path: Path, n: int) -> list[tuple[int, int]]:
    if not path.is_file():
        raise DataError(f"missing edges.tsv at {path}")
    seen = set()
    dupes = 0
    loops = 0
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"edges.tsv:{lineno}: expected 'u<TAB>v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"edges.tsv:{lineno}: non-integer node id in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise DataError(f"edges.tsv:{lineno}: node id out of range [0, {n})")
        if u == v:
            loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            dupes += 1
            continue
        seen.add(key)
    if dupes:
        warnings.warn(f"{path}: dropped {dupes} duplicate/reversed edge line(s)")
    if loops:
        warnings.warn(f"{path}: dropped {loops} self-loop line(s)")
    return sorted(seen)


def _read_labels(path: Path, n: int, num_classes: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    if not path.is_file():
        return labels
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"labels.tsv:{lineno}: expected 'node<TAB>class', got {line!r}")
        try:
            u, lab = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"labels.tsv:{lineno}: non-integer field in {line!r}") from None
        if not 0 <= u < n:
            raise DataError(f"labels.tsv:{lineno}: node id {u} out of range")
        if not 0 <= lab < num_classes:
            raise DataError(f"labels.tsv:{lineno}: class {lab} out of range [0, {num_classes})")
        labels[u] = lab
    return labels


def _read_features(path: Path, n: int, num_features: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"features.tsv:{lineno}: expected 'node<TAB>dim<TAB>value'")
        try:
            u, d, val = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise DataError(f"features.tsv:{lineno}: malformed triplet {line!r}") from None
        if not 0 <= u < n:
            raise DataError(f"features.tsv:{lineno}: node id {u} out of range")
        if not 0 <= d < num_features:
            raise DataError(f"features.tsv:{lineno}: feature dim {d} out of range "
                            f"[0, {num_features})")
        rows.append(u)
        cols.append(d)
        vals.append(val)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, num_features))


def generate_sbm(classes: int, per_class: int, p_in: float, p_out: float,
                 feature_dim: int = 32, noise: float = 6.0, seed: int = 0) -> Graph:
    """Stochastic block model with class-correlated Gaussian-bump features.

    Each class owns a contiguous slab of feature dimensions set to 1 in its
    mean vector; node features are the class mean plus isotropic Gaussian
    noise. The default noise keeps single-node features weakly informative
    so the classifier must lean on neighborhood aggregation, which is the
    regime where structure perturbations matter. Deterministic per seed.
    """
    if classes < 1 or per_class < 1:
        raise UsageError("classes and per_class must be positive")
    if not p_in > p_out:
        raise UsageError("homophily requires p_in > p_out")
    if not (0 <= p_out and p_in <= 1):
        raise UsageError("edge probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = classes * per_class
    labels = np.repeat(np.arange(classes), per_class)

    edges: list[tuple[int, int]] = []
    for bi in range(classes):
        for bj in range(bi, classes):
            p = p_in if bi == bj else p_out
            ui = np.arange(bi * per_class, (bi + 1) * per_class)
            uj = np.arange(bj * per_class, (bj + 1) * per_class)
            mask = rng.random((ui.size, uj.size)) < p
            if bi == bj:
                mask = np.triu(mask, k=1)
            ii, jj = np.nonzero(mask)
            edges.extend(zip(ui[ii].tolist(), uj[jj].tolist()))

    width = max(feature_dim // classes, 1)
    means = np.zeros((classes, feature_dim))
    for k in range(classes):
        lo = (k * width) % feature_dim
        means[k, lo:lo + width] = 1.0
    X = means[labels] + noise * rng.standard_normal((n, feature_dim))

    return Graph(n, edges, labels=labels, num_classes=classes,
                 features=sp.csr_matrix(X), name=f"sbm-c{classes}x{per_class}-seed{seed}")


def sample_split(g: Graph, victim_trainer: Callable[[Graph, list[int]], SgcModel],
                 n_per_class: int = 20, n_targets: int = 100,
                 seed: int = 0) -> tuple[ExperimentSplit, SgcModel]:
    """Sample per-class training nodes, train the victim, then sample targets
    uniformly from correctly classified non-training nodes."""
    rng = np.random.default_rng(seed)
    train_ids: list[int] = []
    for cls in range(g.num_classes):
        pool = np.where(g.labels == cls)[0]
        if pool.size < n_per_class:
            raise DataError(f"class {cls} has only {pool.size} labeled nodes, "
                            f"need {n_per_class}")
        train_ids.extend(rng.choice(pool, size=n_per_class, replace=False).tolist())
    train_ids = sorted(int(i) for i in train_ids)

    model = victim_trainer(g, train_ids)
    preds = model.predict(g)
    train_set = set(train_ids)
    eligible = np.array([u for u in range(g.num_nodes)
                         if u not in train_set and g.labels[u] >= 0
                         and preds[u] == g.labels[u]], dtype=np.int64)
    if eligible.size < n_targets:
        raise DataError(f"only {eligible.size} correctly classified non-training nodes "
                        f"available, need {n_targets}")
    targets = sorted(int(i) for i in rng.choice(eligible, size=n_targets, replace=False))
    return ExperimentSplit(train_ids=train_ids, target_ids=targets, seed=seed), model


def pick_target_label(model: SgcModel, g: Graph, v: int,
                      proba: Optional[np.ndarray] = None) -> int:
    """Class with the second-largest clean probability for v (ties: lowest id)."""
    if g.num_classes < 2:
        raise UsageError("picking a target label needs at least 2 classes")
    if proba is None:
        proba = model.predict_proba(g)
    row = np.array(proba[v], dtype=float)
    y_v = int(g.labels[v])
    if y_v < 0:
        raise UsageError(f"target {g.name_of(v)} has no stored label")
    row[y_v] = -np.inf
    return int(np.argmax(row))
