"""Shared fixtures: the 10-node worked example and random-graph helpers."""

from pathlib import Path

import numpy as np
import pytest

from edgeflip import Graph, load_bundle

REPO_ROOT = Path(__file__).resolve().parent.parent
TOY_BUNDLE = REPO_ROOT / "fixtures" / "toy"

# 10-node fixture: target v plus u1..u9, two classes (0 = target's own class,
# 1 = attack target class)
TOY_EDGES = [(0, 2), (0, 3), (0, 5), (1, 2), (2, 3), (2, 7),
             (3, 4), (3, 5), (5, 6), (5, 7), (7, 8), (7, 9)]
TOY_LABELS = [0, 0, 0, 0, 0, 1, 1, 1, 1, 0]
TOY_NAMES = ["v", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9"]


@pytest.fixture(scope="session")
def toy() -> Graph:
    return load_bundle(TOY_BUNDLE)


@pytest.fixture(scope="session")
def toy_bundle_path() -> Path:
    return TOY_BUNDLE


def make_toy() -> Graph:
    """In-memory twin of the shipped bundle, for tests that mutate metadata."""
    return Graph(10, TOY_EDGES, labels=TOY_LABELS, num_classes=2,
                 node_names=TOY_NAMES, name="toy")


def random_graph(rng: np.random.Generator, n: int, p: float,
                 num_classes: int = 3, label_gap: bool = False) -> Graph:
    """Erdos-Renyi style test graph with uniform labels."""
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    labels = rng.integers(0, num_classes, size=n)
    if label_gap:
        labels[rng.integers(0, n)] = -1
    return Graph(n, edges, labels=labels, num_classes=num_classes)


def dense_norm_adj_power(g, K: int) -> np.ndarray:
    """Independent dense oracle: (D^-1/2 (A+I) D^-1/2)^K via numpy."""
    n = g.num_nodes
    A = np.eye(n)
    for u, v in g.edges():
        A[u, v] = A[v, u] = 1.0
    d = A.sum(axis=1)
    Dm = np.diag(d ** -0.5)
    return np.linalg.matrix_power(Dm @ A @ Dm, K)
