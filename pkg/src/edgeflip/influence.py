"""Label-influence computation over walk products.

Three interchangeable routes compute the same quantities so each can vouch
for the others: per-pair walk enumeration (label_influence_exact), a
depth-first accumulator over all endpoints (label_influence_dfs), and
sparse-row power propagation (objective_exact via power_row_weights).

On top of those sits the greedy attack's gain decomposition: a constant
part recomputed per attack step with only the target's degree adjusted
(approx_constant), plus a per-candidate delta over the walks the toggled
edge creates or destroys (approx_delta).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MissingLabelError, UsageError
from .graph import EdgeOverlay, Graph, enumerate_walks, power_row_weights

TRUE_LABELS = "true_labels"
ESTIMATED_LABELS = "estimated_labels"
LABEL_SOURCES = (TRUE_LABELS, ESTIMATED_LABELS)

ADD = "add"
DELETE = "delete"
DIRECTIONS = (ADD, DELETE)

# Walk trees grow as mean_degree**K; beyond this depth the products are
# numerically fine but the cost is not.
MAX_DEPTH = 6


@dataclass(frozen=True)
class InfluenceQuery:
    """One target's attack question: push toward target_label, away from own_label."""

    target: int
    target_label: int
    own_label: int
    depth: int
    label_source: str = TRUE_LABELS
    node_labels_override: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.target_label == self.own_label:
            raise UsageError("target_label must differ from own_label")
        if not 1 <= self.depth <= MAX_DEPTH:
            raise UsageError(f"depth must be in [1, {MAX_DEPTH}]")
        if self.label_source not in LABEL_SOURCES:
            raise UsageError(f"label_source must be one of {LABEL_SOURCES}")
        if self.label_source == ESTIMATED_LABELS and self.node_labels_override is None:
            raise UsageError("estimated_labels mode needs the estimated label array")

    def node_labels(self, g) -> np.ndarray:
        if self.node_labels_override is not None:
            return self.node_labels_override
        return g.labels


@dataclass(frozen=True)
class InfluenceBreakdown:
    """Approximate attack gain split into a constant and a candidate delta."""

    constant: float
    delta: float
    candidate: int
    direction: str

    def gain(self) -> float:
        if self.direction == ADD:
            return self.constant + self.delta
        return self.constant - self.delta


def gain(breakdown: InfluenceBreakdown) -> float:
    return breakdown.gain()


def label_influence_exact(g, v: int, u: int, K: int) -> float:
    """Sum over all K-hop walks v->u of the per-hop degree-normalized weights.

    Walk-enumeration route; degrees are read from g as-is. Returns 0.0 when
    no walk exists.
    """
    _check_depth(K)
    ws = enumerate_walks(g, v, u, K)
    inv_sqrt = {}

    def w(node):
        x = inv_sqrt.get(node)
        if x is None:
            x = g.degree(node) ** -0.5
            inv_sqrt[node] = x
        return x

    total = 0.0
    for walk in ws.walks:
        prod = 1.0
        for a, b in zip(walk, walk[1:]):
            prod *= w(a) * w(b)
        total += prod
    return total


def objective_exact(g, q: InfluenceQuery) -> float:
    """Influence objective: sum of influences onto target_label nodes minus
    sum onto own_label nodes, over the target's K-hop scope on g.

    Sparse-row power route. The target itself participates in the own-label
    sum. Raises MissingLabelError when a reachable node is unlabeled.
    """
    labels = q.node_labels(g)
    weights = power_row_weights(g, q.target, q.depth)
    pos = neg = 0.0
    for u, wt in weights.items():
        lab = labels[u]
        if lab == q.target_label:
            pos += wt
        elif lab == q.own_label:
            neg += wt
        elif lab < 0:
            raise MissingLabelError(u, g.name_of(u))
    return pos - neg


def label_influence_dfs(g, start: int, K: int, q: InfluenceQuery, overrides=None) -> float:
    """Depth-first accumulator: descend K hops from start multiplying the
    normalized edge weights, and at depth zero credit the reached node's
    label bucket. Returns (target-label sum) - (own-label sum).

    With start == q.target this equals objective_exact on the same graph.
    `overrides` maps node -> degree, replacing the structural degree in
    every hop weight that touches the node.
    """
    _check_depth(K)
    ic, iyv = _dfs_parts(g, start, K, q.node_labels(g), q.target_label, q.own_label, overrides)
    return ic - iyv


def approx_constant(g_current, q: InfluenceQuery, direction: str) -> float:
    """Objective over the current graph's walks with only the target's degree
    pre-adjusted for the upcoming toggle (+1 for add, -1 for delete).

    Recomputed each attack step on the possibly-perturbed graph.
    """
    _check_direction(direction)
    d_v = g_current.degree(q.target)
    if direction == DELETE:
        if d_v <= 1:
            raise UsageError("cannot plan a deletion: target has no stored edges")
        d_new = d_v - 1
    else:
        d_new = d_v + 1
    return label_influence_dfs(g_current, q.target, q.depth, q, overrides={q.target: d_new})


def approx_delta_parts(g: Graph, q: InfluenceQuery, candidate: int, direction: str) -> tuple[float, float]:
    """(target-label, own-label) influence sums over exactly the walks that
    toggling (target, candidate) creates (add) or destroys (delete).

    Degree convention matched to the worked gain decomposition: for add,
    hops touching the target use d_v+1 and hops touching the candidate use
    d_c+1; for delete, hops touching the target use d_v-1 and the candidate
    keeps its clean degree. All other degrees stay clean.
    """
    _check_direction(direction)
    g._check_node(candidate)
    v = q.target
    if candidate == v:
        raise UsageError("candidate must differ from the target")
    labels = q.node_labels(g)
    if direction == ADD:
        if g.has_edge(v, candidate):
            raise UsageError(f"add candidate {candidate} is already a neighbor of the target")
        overlay = EdgeOverlay(g, v)
        overlay.toggle(candidate)
        # overlay degrees are exactly d_v+1 / d_c+1 with the rest clean
        return _dfs_delta_parts(overlay, v, q.depth, labels, q.target_label, q.own_label,
                                None, (v, candidate))
    if not g.has_edge(v, candidate):
        raise UsageError(f"delete candidate {candidate} is not a neighbor of the target")
    overrides = {v: g.degree(v) - 1}
    return _dfs_delta_parts(g, v, q.depth, labels, q.target_label, q.own_label,
                            overrides, (v, candidate))


def approx_delta(g: Graph, q: InfluenceQuery, candidate: int, direction: str) -> float:
    pos, neg = approx_delta_parts(g, q, candidate, direction)
    return pos - neg


def candidate_breakdown(g, q: InfluenceQuery, candidate: int, direction: str,
                        constant: Optional[float] = None) -> InfluenceBreakdown:
    """Bundle the constant and the candidate delta into one gain record."""
    if constant is None:
        constant = approx_constant(g, q, direction)
    delta = approx_delta(g, q, candidate, direction)
    return InfluenceBreakdown(constant=constant, delta=delta,
                              candidate=candidate, direction=direction)


# internal DFS engines ---------------------------------------------------


def _dfs_parts(g, start, K, labels, c, y_own, overrides=None):
    overrides = overrides or {}
    inv_sqrt: dict[int, float] = {}

    def w(u):
        x = inv_sqrt.get(u)
        if x is None:
            d = overrides.get(u)
            if d is None:
                d = g.degree(u)
            x = float(d) ** -0.5
            inv_sqrt[u] = x
        return x

    ic = iyv = 0.0
    stack = [(start, K, 1.0)]
    while stack:
        node, k, s = stack.pop()
        if k == 0:
            lab = labels[node]
            if lab == c:
                ic += s
            elif lab == y_own:
                iyv += s
            elif lab < 0:
                raise MissingLabelError(node, g.name_of(node))
            continue
        sw = s * w(node)
        for u in g.neighbors(node):
            stack.append((u, k - 1, sw * w(u)))
    return ic, iyv


def _dfs_delta_parts(g, start, K, labels, c, y_own, overrides, edge):
    """Like _dfs_parts but only walks traversing `edge` at least once count."""
    a, b = edge
    overrides = overrides or {}
    inv_sqrt: dict[int, float] = {}

    def w(u):
        x = inv_sqrt.get(u)
        if x is None:
            d = overrides.get(u)
            if d is None:
                d = g.degree(u)
            x = float(d) ** -0.5
            inv_sqrt[u] = x
        return x

    ic = iyv = 0.0
    stack = [(start, K, 1.0, False)]
    while stack:
        node, k, s, used = stack.pop()
        if k == 0:
            if used:
                lab = labels[node]
                if lab == c:
                    ic += s
                elif lab == y_own:
                    iyv += s
                elif lab < 0:
                    raise MissingLabelError(node, g.name_of(node))
            continue
        sw = s * w(node)
        for u in g.neighbors(node):
            hop_used = used or (node == a and u == b) or (node == b and u == a)
            stack.append((u, k - 1, sw * w(u), hop_used))
    return ic, iyv


def _check_depth(K: int) -> None:
    if not 1 <= K <= MAX_DEPTH:
        raise UsageError(f"K must be in [1, {MAX_DEPTH}]")


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise UsageError(f"direction must be one of {DIRECTIONS}")
