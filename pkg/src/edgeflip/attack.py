"""Greedy budgeted edge-toggle attack against one target node.

Candidates are target-label nodes not yet adjacent to the target (adds)
and own-label neighbors (deletes). Each step recomputes the two constant
influence terms on the current overlay, ranks all unused candidates by
their decomposed gain, applies the best toggle, and asks the victim for
its margin. Success is judged by the victim margin, never by the
influence objective itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import UsageError
from .graph import EdgeOverlay, Graph
from .influence import (
    ADD,
    DELETE,
    InfluenceQuery,
    approx_constant,
    approx_delta,
    objective_exact,
)
from .victim import SgcModel

MODES = ("approx", "exact")


@dataclass
class CandidateSets:
    add_candidates: list[int]
    delete_candidates: list[int]

    def __len__(self) -> int:
        return len(self.add_candidates) + len(self.delete_candidates)


@dataclass
class AttackStep:
    node: int
    direction: str
    gain: float
    margin: float


@dataclass
class AttackPlan:
    target: int
    target_label: int
    own_label: int
    budget: int
    mode: str
    depth: int
    label_source: str
    toggles: list[AttackStep] = field(default_factory=list)
    success: bool = False
    final_margin: float = float("nan")
    wall_time_ms: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def edges_used(self) -> int:
        return len(self.toggles)

    def edges_added(self, prefix: Optional[int] = None) -> int:
        steps = self.toggles if prefix is None else self.toggles[:prefix]
        return sum(1 for s in steps if s.direction == ADD)

    def edges_removed(self, prefix: Optional[int] = None) -> int:
        steps = self.toggles if prefix is None else self.toggles[:prefix]
        return sum(1 for s in steps if s.direction == DELETE)

    def success_step(self) -> Optional[int]:
        """1-based index of the first step whose margin is positive, if any."""
        for i, s in enumerate(self.toggles, 1):
            if s.margin > 0:
                return i
        return None

    def success_at(self, budget: int) -> bool:
        step = self.success_step()
        return step is not None and step <= budget

    def margin_at(self, budget: int, clean_margin: float) -> float:
        """Margin after the effective prefix for the given budget."""
        step = self.success_step()
        cut = min(budget, len(self.toggles)) if step is None else min(step, budget)
        if cut == 0:
            return clean_margin
        return self.toggles[cut - 1].margin

    def steps_at(self, budget: int) -> int:
        step = self.success_step()
        return min(budget, len(self.toggles)) if step is None else min(step, budget)

    def to_json_dict(self, g: Optional[Graph] = None) -> dict:
        def name(u):
            return g.name_of(u) if g is not None else u

        return {
            "target": name(self.target),
            "target_label": self.target_label,
            "own_label": self.own_label,
            "budget": self.budget,
            "mode": self.mode,
            "k": self.depth,
            "label_source": self.label_source,
            "success": self.success,
            "edges_used": self.edges_used,
            "final_margin": self.final_margin,
            "toggles": [
                {"node": name(s.node), "direction": s.direction,
                 "gain": s.gain, "margin": s.margin}
                for s in self.toggles
            ],
            "notes": self.notes,
            "wall_time_ms": self.wall_time_ms,
        }


def build_candidates(g, q: InfluenceQuery, cap: Optional[int] = None) -> CandidateSets:
    """Add candidates: target-label nodes not adjacent to the target.
    Delete candidates: own-label stored neighbors of the target."""
    labels = q.node_labels(g)
    v = q.target
    if labels[v] < 0:
        raise UsageError(f"target {g.name_of(v)} has no label under {q.label_source}")
    nbrs = set(g.stored_neighbors(v))
    adds = [int(u) for u in np.where(labels == q.target_label)[0]
            if u != v and u not in nbrs]
    dels = [u for u in g.stored_neighbors(v) if labels[u] == q.own_label]
    if cap is not None and len(adds) > cap:
        adds = sorted(adds, key=lambda u: (g.degree(u), u))[:cap]
        adds.sort()
    return CandidateSets(add_candidates=adds, delete_candidates=list(dels))


def plan_attack(g: Graph, q: InfluenceQuery, budget: int,
                victim: Callable[[EdgeOverlay], float], mode: str = "approx",
                early_stop: bool = True, require_positive_gain: bool = False,
                candidate_cap: Optional[int] = None) -> AttackPlan:
    """Run the greedy loop and return the ordered toggle plan.

    `victim` maps an overlay to the attack margin; planning stops early on
    the first positive margin unless early_stop is off. Each candidate is
    used at most once.
    """
    if budget < 1:
        raise UsageError("budget must be at least 1")
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}")

    t0 = time.perf_counter()
    plan = AttackPlan(target=q.target, target_label=q.target_label,
                      own_label=q.own_label, budget=budget, mode=mode,
                      depth=q.depth, label_source=q.label_source)
    cands = build_candidates(g, q, cap=candidate_cap)
    overlay = EdgeOverlay(g, q.target)

    if len(cands) == 0:
        plan.notes.append("no candidates available")
        plan.wall_time_ms = (time.perf_counter() - t0) * 1e3
        return plan

    deltas: dict[tuple[str, int], float] = {}
    if mode == "approx":
        # one-time precompute on the clean graph; not refreshed as edges land
        for a in cands.add_candidates:
            deltas[(ADD, a)] = approx_delta(g, q, a, ADD)
        for b in cands.delete_candidates:
            deltas[(DELETE, b)] = approx_delta(g, q, b, DELETE)

    unused: list[tuple[str, int]] = [(ADD, a) for a in cands.add_candidates]
    unused += [(DELETE, b) for b in cands.delete_candidates]
    skipped_isolation = False

    while plan.edges_used < budget and unused:
        usable = []
        for direction, node in unused:
            if direction == DELETE and overlay.degree(q.target) <= 2:
                if not skipped_isolation:
                    plan.notes.append("skipped deletions that would isolate the target")
                    skipped_isolation = True
                continue
            usable.append((direction, node))
        if not usable:
            break

        scored: list[tuple[float, int, str]] = []
        if mode == "approx":
            const = {}
            if any(d == ADD for d, _ in usable):
                const[ADD] = approx_constant(overlay, q, ADD)
            if any(d == DELETE for d, _ in usable):
                const[DELETE] = approx_constant(overlay, q, DELETE)
            for direction, node in usable:
                if direction == ADD:
                    val = const[ADD] + deltas[(ADD, node)]
                else:
                    val = const[DELETE] - deltas[(DELETE, node)]
                scored.append((val, node, direction))
        else:
            for direction, node in usable:
                overlay.toggle(node)
                scored.append((objective_exact(overlay, q), node, direction))
                overlay.toggle(node)

        scored.sort(key=lambda t: (-t[0], t[1]))
        best_gain, best_node, best_dir = scored[0]
        if require_positive_gain and best_gain <= 0:
            plan.notes.append("stopped: best gain not positive")
            break

        overlay.toggle(best_node)
        unused.remove((best_dir, best_node))
        margin = victim(overlay)
        plan.toggles.append(AttackStep(node=best_node, direction=best_dir,
                                       gain=float(best_gain), margin=float(margin)))
        if early_stop and margin > 0:
            break

    if plan.toggles:
        plan.final_margin = plan.toggles[-1].margin
        plan.success = plan.final_margin > 0
    plan.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return plan


def resolve_labels(g: Graph, victim: Optional[SgcModel], source: str,
                   proba: Optional[np.ndarray] = None) -> np.ndarray:
    """Label array the attacker plans with: stored labels, or the victim's
    argmax predictions when true labels are assumed unknown."""
    if source == "true_labels":
        return g.labels
    if source == "estimated_labels":
        if victim is None or not victim.trained:
            raise UsageError("estimated labels need a trained victim model")
        if proba is not None:
            return np.argmax(proba, axis=1)
        return victim.predict(g)
    raise UsageError(f"unknown label source {source!r}")
