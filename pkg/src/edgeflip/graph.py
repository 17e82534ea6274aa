"""Sparse undirected graph with implicit self-loops, plus per-target edge overlays.

Every node carries an implicit self-loop that is never stored: degree(u) is
the stored neighbor count plus one, and neighbors(u) yields u itself first.
An EdgeOverlay records edge flips restricted to one target node's row, which
is how attack perturbations are represented without copying the graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import UsageError

UNLABELED = -1


class Graph:
    """Immutable undirected graph over dense integer node ids 0..n-1.

    Stored edges never include self-loops or duplicates; labels use
    UNLABELED (-1) for nodes without a class. A graph with zero edges is
    legal (every degree is 1 through the implicit self-loop).
    """

    def __init__(
        self,
        num_nodes: int,
        edges: Iterable[tuple[int, int]],
        labels: Optional[Sequence[int]] = None,
        num_classes: int = 0,
        features: Optional[sp.spmatrix] = None,
        node_names: Optional[Sequence[str]] = None,
        name: str = "",
    ):
        if num_nodes < 0:
            raise UsageError("num_nodes must be nonnegative")
        self._n = int(num_nodes)
        self.name = name

        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            self._check_node(u)
            self._check_node(v)
            if u == v:
                raise UsageError(f"self-loop ({u},{u}) must not be stored")
            canon.add((u, v) if u < v else (v, u))
        adj: list[list[int]] = [[] for _ in range(self._n)]
        for u, v in sorted(canon):
            adj[u].append(v)
            adj[v].append(u)
        self._adj: list[tuple[int, ...]] = [tuple(sorted(ns)) for ns in adj]
        self._adj_set: list[frozenset] = [frozenset(ns) for ns in self._adj]
        self._edges: tuple[tuple[int, int], ...] = tuple(sorted(canon))
        self._degrees = np.array([len(ns) + 1 for ns in self._adj], dtype=np.int64)

        if labels is None:
            lab = np.full(self._n, UNLABELED, dtype=np.int64)
        else:
            lab = np.asarray(labels, dtype=np.int64)
            if lab.shape != (self._n,):
                raise UsageError("labels must have one entry per node")
        self.num_classes = int(num_classes)
        known = lab[lab != UNLABELED]
        if known.size and (known.min() < 0 or known.max() >= self.num_classes):
            raise UsageError("every stored label must lie in [0, num_classes)")
        self.labels = lab
        self.labels.setflags(write=False)

        if features is not None:
            features = sp.csr_matrix(features)
            if features.shape[0] != self._n:
                raise UsageError("feature matrix must have one row per node")
        self.features = features

        if node_names is not None and len(node_names) != self._n:
            raise UsageError("node_names must have one entry per node")
        self.node_names = list(node_names) if node_names is not None else None
        self._name_to_id = (
            {nm: i for i, nm in enumerate(self.node_names)} if self.node_names else {}
        )
        self._norm_adj_cache: Optional[sp.csr_matrix] = None

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self._n:
            raise UsageError(f"node id {u} out of range [0, {self._n})")

    @property
    def num_nodes(self) -> int:
        return self._n

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def edges(self) -> tuple[tuple[int, int], ...]:
        """Stored edges in canonical (u < v) sorted order."""
        return self._edges

    def neighbors(self, u: int) -> Iterator[int]:
        """Yield u itself (the implicit self-loop) followed by stored neighbors."""
        self._check_node(u)
        yield u
        yield from self._adj[u]

    def stored_neighbors(self, u: int) -> tuple[int, ...]:
        self._check_node(u)
        return self._adj[u]

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self._degrees[u])

    def degrees(self) -> np.ndarray:
        return self._degrees

    def has_edge(self, u: int, v: int) -> bool:
        self._check_node(u)
        self._check_node(v)
        return v in self._adj_set[u]

    def name_of(self, u: int) -> str:
        self._check_node(u)
        return self.node_names[u] if self.node_names else str(u)

    def id_of(self, name: str) -> int:
        """Resolve a node name (or decimal id string) to its dense id."""
        if name in self._name_to_id:
            return self._name_to_id[name]
        try:
            u = int(name)
        except ValueError:
            raise UsageError(f"unknown node name {name!r}") from None
        self._check_node(u)
        return u

    def norm_adjacency(self) -> sp.csr_matrix:
        """Symmetrically normalized adjacency with self-loops, as CSR (cached)."""
        if self._norm_adj_cache is None:
            self._norm_adj_cache = _norm_adjacency_csr(self)
        return self._norm_adj_cache

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_norm_adj_cache"] = None
        return state


class EdgeOverlay:
    """Mutable view over a Graph recording edge flips on one target's row.

    Only edges incident to the target can be toggled, so the direct-attack
    constraint holds by construction. Toggling the same node twice restores
    base semantics.
    """

    def __init__(self, base: Graph, target: int):
        base._check_node(target)
        self.base = base
        self.target = int(target)
        self._added: set[int] = set()
        self._removed: set[int] = set()
        self._nbr_cache: dict[int, tuple[int, ...]] = {}

    @property
    def toggles(self) -> frozenset:
        return frozenset(self._added | self._removed)

    @property
    def perturbation_size(self) -> int:
        return len(self._added) + len(self._removed)

    def toggle(self, s: int) -> None:
        """Flip the connection status between the target and node s."""
        self.base._check_node(s)
        if s == self.target:
            raise UsageError("cannot toggle the target's self-loop")
        if s in self._added:
            self._added.remove(s)
        elif s in self._removed:
            self._removed.remove(s)
        elif self.base.has_edge(self.target, s):
            self._removed.add(s)
        else:
            self._added.add(s)
        self._nbr_cache.clear()

    def is_toggled(self, s: int) -> bool:
        return s in self._added or s in self._removed

    # graph-like interface ------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return self.base.num_nodes

    @property
    def num_classes(self) -> int:
        return self.base.num_classes

    @property
    def labels(self) -> np.ndarray:
        return self.base.labels

    @property
    def features(self):
        return self.base.features

    @property
    def node_names(self):
        return self.base.node_names

    def name_of(self, u: int) -> str:
        return self.base.name_of(u)

    def _check_node(self, u: int) -> None:
        self.base._check_node(u)

    def stored_neighbors(self, u: int) -> tuple[int, ...]:
        self.base._check_node(u)
        cached = self._nbr_cache.get(u)
        if cached is not None:
            return cached
        stored = self.base.stored_neighbors(u)
        if u == self.target:
            ns = (set(stored) - self._removed) | self._added
            out = tuple(sorted(ns))
        elif u in self._added:
            out = tuple(sorted(set(stored) | {self.target}))
        elif u in self._removed:
            out = tuple(x for x in stored if x != self.target)
        else:
            out = stored
        self._nbr_cache[u] = out
        return out

    def neighbors(self, u: int) -> Iterator[int]:
        yield u
        yield from self.stored_neighbors(u)

    def degree(self, u: int) -> int:
        d = self.base.degree(u)
        if u == self.target:
            return d + len(self._added) - len(self._removed)
        if u in self._added:
            return d + 1
        if u in self._removed:
            return d - 1
        return d

    def has_edge(self, u: int, v: int) -> bool:
        if u == self.target or v == self.target:
            s = v if u == self.target else u
            if s in self._added:
                return True
            if s in self._removed:
                return False
        return self.base.has_edge(u, v)


@dataclass
class WalkSet:
    """All walks of a fixed length between two endpoints.

    Each walk is a node sequence of depth+1 entries whose consecutive pairs
    are either equal (self-loop hop) or a stored/overlaid edge.
    """

    source: int
    sink: int
    depth: int
    walks: list[tuple[int, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.walks)


def k_hop(g, v: int, K: int) -> set[int]:
    """Nodes reachable from v in at most K edge steps, v included."""
    g._check_node(v)
    if K < 0:
        raise UsageError("K must be nonnegative")
    seen = {v}
    frontier = [v]
    for _ in range(K):
        nxt = []
        for p in frontier:
            for u in g.stored_neighbors(p):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        if not nxt:
            break
        frontier = nxt
    return seen


def enumerate_walks(g, v: int, u: int, K: int) -> WalkSet:
    """Exhaustively list every K-hop walk from v to u (self-loop hops allowed)."""
    g._check_node(v)
    g._check_node(u)
    if K < 1:
        raise UsageError("walk enumeration needs K >= 1")
    out = WalkSet(source=v, sink=u, depth=K)
    stack: list[tuple[int, tuple[int, ...]]] = [(v, (v,))]
    while stack:
        node, path = stack.pop()
        if len(path) == K + 1:
            if node == u:
                out.walks.append(path)
            continue
        for nxt in g.neighbors(node):
            stack.append((nxt, path + (nxt,)))
    out.walks.sort()
    return out


def power_row_weights(g, start: int, K: int, overrides=None) -> dict[int, float]:
    """Row `start` of the K-th normalized-adjacency power, as a sparse dict.

    Works on a Graph or an EdgeOverlay and touches only the K-hop
    neighborhood. `overrides` maps node -> degree to use instead of the
    structural one, which is how the attack's frozen-degree conventions are
    expressed.
    """
    g._check_node(start)
    if K < 0:
        raise UsageError("K must be nonnegative")
    overrides = overrides or {}
    inv_sqrt: dict[int, float] = {}

    def w(u: int) -> float:
        x = inv_sqrt.get(u)
        if x is None:
            d = overrides.get(u, None)
            if d is None:
                d = g.degree(u)
            x = float(d) ** -0.5
            inv_sqrt[u] = x
        return x

    cur = {start: 1.0}
    for _ in range(K):
        nxt: dict[int, float] = {}
        for p, val in cur.items():
            wp = val * w(p)
            for u in g.neighbors(p):
                nxt[u] = nxt.get(u, 0.0) + wp * w(u)
        cur = nxt
    return cur


def norm_adj_power_row(g, v: int, K: int) -> np.ndarray:
    """Dense row v of (D^-1/2 (A+I) D^-1/2)^K via repeated sparse products.

    Matrix-power oracle for the walk-product computations: independent of
    the DFS code paths.
    """
    g._check_node(v)
    if K < 0:
        raise UsageError("K must be nonnegative")
    if isinstance(g, Graph):
        m = g.norm_adjacency()
    else:
        m = _norm_adjacency_csr(g)
    r = np.zeros(g.num_nodes)
    r[v] = 1.0
    for _ in range(K):
        r = m.dot(r)
    return r


def _norm_adjacency_csr(g) -> sp.csr_matrix:
    n = g.num_nodes
    rows, cols, vals = [], [], []
    inv_sqrt = np.array([g.degree(u) ** -0.5 for u in range(n)])
    for u in range(n):
        for v in g.neighbors(u):
            rows.append(u)
            cols.append(v)
            vals.append(inv_sqrt[u] * inv_sqrt[v])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
