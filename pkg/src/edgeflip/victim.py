"""SGC victim model, label propagation, and the attack margin.

The victim is a linear graph convolution: K symmetric-normalized
propagation passes followed by multinomial logistic regression on the
propagated features. Because the model is linear in the features, the
per-layer weight matrices collapse into a single matrix, which is what we
train and store.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DataError, UsageError
from .graph import Graph, power_row_weights

MODEL_MAGIC = "SGCv1"

DEFAULT_HYPER = {"lr": 0.2, "epochs": 300, "l2": 5e-6, "seed": 0}


@dataclass
class SgcModel:
    depth: int
    weights: np.ndarray  # d_features x num_classes, collapsed
    trained: bool = False
    train_meta: dict = field(default_factory=dict)

    @property
    def num_features(self) -> int:
        return self.weights.shape[0]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]

    def _require_trained(self):
        if not self.trained:
            raise UsageError("model has not been trained")

    def predict_proba(self, g: Graph, X=None) -> np.ndarray:
        """Class probabilities for every node on the clean graph."""
        self._require_trained()
        if X is None:
            X = feature_matrix(g)
        H = sgc_propagate(g, X, self.depth)
        return softmax_rows(H @ self.weights)

    def predict(self, g: Graph, X=None) -> np.ndarray:
        return np.argmax(self.predict_proba(g, X), axis=1)

    def save(self, path) -> None:
        payload = {
            "magic": MODEL_MAGIC,
            "depth": self.depth,
            "num_features": self.num_features,
            "num_classes": self.num_classes,
            "trained": self.trained,
            "train_meta": self.train_meta,
            "weights": self.weights.ravel().tolist(),  # row-major
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SgcModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from None
        if payload.get("magic") != MODEL_MAGIC:
            raise DataError(f"{path} is not a {MODEL_MAGIC} model file")
        d, c = payload["num_features"], payload["num_classes"]
        weights = np.array(payload["weights"], dtype=float).reshape(d, c)
        return cls(depth=int(payload["depth"]), weights=weights,
                   trained=bool(payload["trained"]), train_meta=payload.get("train_meta", {}))


def feature_matrix(g: Graph) -> sp.csr_matrix:
    """Node features, or one-hot identity rows when the dataset has none."""
    if g.features is not None:
        return g.features
    return sp.identity(g.num_nodes, format="csr")


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sgc_propagate(g: Graph, X, K: int) -> np.ndarray:
    """K normalized-adjacency passes over the feature rows: returns A_hat^K X dense."""
    if K < 0:
        raise UsageError("K must be nonnegative")
    n = g.num_nodes
    if X.shape[0] != n:
        raise UsageError(f"feature matrix has {X.shape[0]} rows, graph has {n} nodes")
    H = X
    if K > 0:
        m = g.norm_adjacency()
        for _ in range(K):
            H = m @ H
    if sp.issparse(H):
        H = H.toarray()
    return np.asarray(H, dtype=float)


def propagate_row(g_like, X, v: int, K: int) -> np.ndarray:
    """Single propagated row for one node, honoring overlay edge flips.

    Local frontier passes over the K-hop neighborhood only, so the attack
    can query margins per step without recomputing the whole graph.
    """
    weights = power_row_weights(g_like, v, K)
    idx = np.fromiter(weights.keys(), dtype=np.int64, count=len(weights))
    wts = np.fromiter(weights.values(), dtype=float, count=len(weights))
    order = np.argsort(idx)
    idx, wts = idx[order], wts[order]
    rows = X[idx]
    if sp.issparse(rows):
        out = np.asarray(wts @ rows).ravel()
    else:
        out = wts @ np.asarray(rows, dtype=float)
    return out


def loss_and_grad(W: np.ndarray, H: np.ndarray, y: np.ndarray, l2: float):
    """Mean cross-entropy over the given rows plus l2 * ||W||^2, with gradient."""
    n = H.shape[0]
    probs = softmax_rows(H @ W)
    picked = probs[np.arange(n), y]
    loss = -np.log(np.clip(picked, 1e-300, None)).mean() + l2 * float((W * W).sum())
    diff = probs
    diff[np.arange(n), y] -= 1.0
    grad = H.T @ diff / n + 2.0 * l2 * W
    return loss, grad


def sgc_train(H: np.ndarray, train_ids, labels, hyper: Optional[dict] = None,
              depth: int = 2) -> SgcModel:
    """Full-batch gradient descent on the propagated training rows.

    Deterministic: weights start at zero (the objective is convex, so no
    symmetry breaking is needed) and the loss curve is recorded in the
    model's train_meta.
    """
    cfg = dict(DEFAULT_HYPER)
    cfg.update(hyper or {})
    train_ids = np.asarray(list(train_ids), dtype=np.int64)
    if train_ids.size == 0:
        raise UsageError("training set is empty")
    y = np.asarray(labels, dtype=np.int64)[train_ids]
    if (y < 0).any():
        bad = train_ids[np.where(y < 0)[0][0]]
        raise UsageError(f"training node {bad} is unlabeled")
    num_classes = int(y.max()) + 1
    Ht = np.asarray(H, dtype=float)[train_ids]
    W = np.zeros((Ht.shape[1], num_classes))

    lr, epochs, l2 = float(cfg["lr"]), int(cfg["epochs"]), float(cfg["l2"])
    curve = []
    for _ in range(epochs):
        loss, grad = loss_and_grad(W, Ht, y, l2)
        if not np.isfinite(loss):
            raise DataError(f"training diverged: loss={loss} at epoch {len(curve)} (lr={lr})")
        curve.append(float(loss))
        W -= lr * grad
    final_loss, _ = loss_and_grad(W, Ht, y, l2)
    meta = {"epochs": epochs, "lr": lr, "l2": l2, "seed": cfg.get("seed", 0),
            "final_loss": float(final_loss), "loss_curve": curve}
    return SgcModel(depth=depth, weights=W, trained=True, train_meta=meta)


def train_on_graph(g: Graph, train_ids, K: int, hyper: Optional[dict] = None) -> SgcModel:
    """Propagate the graph's features and fit the classifier in one step."""
    X = feature_matrix(g)
    H = sgc_propagate(g, X, K)
    model = sgc_train(H, train_ids, g.labels, hyper, depth=K)
    if model.num_classes < g.num_classes:
        # training set may miss trailing classes; pad weight columns so
        # every declared class has a score
        pad = np.zeros((model.weights.shape[0], g.num_classes - model.num_classes))
        model.weights = np.hstack([model.weights, pad])
    return model


def attack_margin(model: SgcModel, g_like, v: int, c: int) -> float:
    """Probability margin toward the target label on a (possibly perturbed)
    graph: positive means the attack succeeded for this target."""
    model._require_trained()
    g_like._check_node(v)
    y_v = int(g_like.labels[v])
    if y_v < 0:
        raise UsageError(f"target {g_like.name_of(v)} has no stored label")
    if not 0 <= c < model.num_classes:
        raise UsageError(f"target label {c} out of range")
    X = feature_matrix(g_like)
    h = propagate_row(g_like, X, v, model.depth)
    p = softmax_rows(h @ model.weights)
    return float(p[c] - p[y_v])


@dataclass
class LpState:
    depth: int
    scores: np.ndarray  # n x C
    seed_mask: np.ndarray

    def predictions(self) -> np.ndarray:
        return np.argmax(self.scores, axis=1)


def label_propagation(g: Graph, seeds, K: int) -> LpState:
    """K symmetric-normalized propagation passes from one-hot seed labels."""
    if K < 0:
        raise UsageError("K must be nonnegative")
    seeds = np.asarray(list(seeds), dtype=np.int64)
    if seeds.size == 0:
        raise UsageError("label propagation needs at least one labeled seed")
    n, C = g.num_nodes, g.num_classes
    mask = np.zeros(n, dtype=bool)
    scores = np.zeros((n, C))
    for s in seeds:
        g._check_node(int(s))
        lab = int(g.labels[s])
        if lab < 0:
            raise UsageError(f"seed {g.name_of(int(s))} is unlabeled")
        scores[s, lab] = 1.0
        mask[s] = True
    if K > 0:
        m = g.norm_adjacency()
        for _ in range(K):
            scores = m @ scores
    return LpState(depth=K, scores=np.asarray(scores), seed_mask=mask)


def theorem1_check(model: SgcModel, g: Graph, u: int, K: int, tol: float = 1e-12) -> dict:
    """Compare the model's feature-based influence of node u on every node v
    against the walk-product label influence.

    For the linear victim the two differ by one constant (the u-label score
    of u's own features), so the per-v ratio should be flat; the report's
    max_rel_spread quantifies how flat.
    """
    model._require_trained()
    g._check_node(u)
    y_u = int(g.labels[u])
    if y_u < 0:
        raise UsageError(f"node {g.name_of(u)} must be labeled")

    X = feature_matrix(g)
    masked = sp.lil_matrix(X.shape)
    masked[u] = X[u]
    H = sgc_propagate(g, masked.tocsr(), K)
    feature_side = (H @ model.weights)[:, y_u]  # per-v Jacobian contraction

    # walk route, independent of the propagation machinery
    lab_side = np.zeros(g.num_nodes)
    for v, wt in _walk_weights_by_dfs(g, u, K).items():
        lab_side[v] = wt

    live = np.where(lab_side > tol)[0]
    if live.size == 0:
        raise DataError(f"no node has positive label influence from {g.name_of(u)} at K={K}")
    ratios = feature_side[live] / lab_side[live]
    scale = max(float(np.abs(ratios).max()), 1e-30)
    spread = float((ratios.max() - ratios.min()) / scale)
    x_row = np.asarray(X[u].todense()).ravel() if sp.issparse(X) else np.asarray(X[u]).ravel()
    expected = float(x_row @ model.weights[:, y_u])
    return {
        "node": u,
        "label": y_u,
        "num_nodes_checked": int(live.size),
        "expected_ratio": expected,
        "max_rel_spread": spread,
        "ratios": {int(v): float(r) for v, r in zip(live, ratios)},
    }


def spanning_reconstruction_error(model: SgcModel, g: Graph, v: int) -> float:
    """Max abs gap between the direct propagated logits of v and their
    reconstruction from per-source walk weights times per-source logits."""
    model._require_trained()
    X = feature_matrix(g)
    direct = propagate_row(g, X, v, model.depth) @ model.weights
    recon = np.zeros(model.num_classes)
    for u, wt in _walk_weights_by_dfs(g, v, model.depth).items():
        row = np.asarray(X[u].todense()).ravel() if sp.issparse(X) else np.asarray(X[u]).ravel()
        recon += wt * (row @ model.weights)
    return float(np.abs(direct - recon).max())


def _walk_weights_by_dfs(g, start: int, K: int) -> dict[int, float]:
    """Endpoint -> summed walk products via literal depth-first descent."""
    inv_sqrt: dict[int, float] = {}

    def w(node):
        x = inv_sqrt.get(node)
        if x is None:
            x = g.degree(node) ** -0.5
            inv_sqrt[node] = x
        return x

    acc: dict[int, float] = {}
    stack = [(start, K, 1.0)]
    while stack:
        node, k, s = stack.pop()
        if k == 0:
            acc[node] = acc.get(node, 0.0) + s
            continue
        sw = s * w(node)
        for nxt in g.neighbors(node):
            stack.append((nxt, k - 1, sw * w(nxt)))
    return acc
