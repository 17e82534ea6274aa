"""Candidate construction and the greedy planning loop."""

import numpy as np
import pytest

from edgeflip import (
    Graph,
    UsageError,
    attack_margin,
    build_candidates,
    generate_sbm,
    pick_target_label,
    plan_attack,
    resolve_labels,
    sample_split,
    train_on_graph,
)
from edgeflip.attack import AttackPlan, AttackStep
from edgeflip.influence import InfluenceQuery

# frozen five-way exact objective values for the toy at budget 1
# (dense-oracle run: add u8 wins, then add u6, del u2, del u3, add u7)
TOY_EXACT_FIRST_PICK = ("u8", "add")
TOY_APPROX_FIRST_PICK = ("u6", "add")  # u6/u8 tie at -0.16554, lowest id wins


def toy_query(toy, depth=2):
    return InfluenceQuery(target=toy.id_of("v"), target_label=1, own_label=0, depth=depth)


def never_succeeds(_overlay) -> float:
    return -1.0


class TestCandidates:
    def test_toy_candidate_sets(self, toy):
        cands = build_candidates(toy, toy_query(toy))
        assert {toy.name_of(u) for u in cands.add_candidates} == {"u6", "u7", "u8"}
        assert {toy.name_of(u) for u in cands.delete_candidates} == {"u2", "u3"}

    def test_no_adds_when_all_target_label_nodes_adjacent(self):
        g = Graph(3, [(0, 1), (0, 2)], labels=[0, 1, 1], num_classes=2)
        q = InfluenceQuery(target=0, target_label=1, own_label=0, depth=2)
        cands = build_candidates(g, q)
        assert cands.add_candidates == []
        assert set(cands.delete_candidates) == set()

    def test_no_deletes_without_same_label_neighbors(self):
        g = Graph(4, [(0, 1), (0, 2)], labels=[0, 1, 1, 0], num_classes=2)
        q = InfluenceQuery(target=0, target_label=1, own_label=0, depth=2)
        assert build_candidates(g, q).delete_candidates == []

    def test_unlabeled_target_rejected(self):
        g = Graph(3, [(0, 1)], labels=[-1, 0, 1], num_classes=2)
        q = InfluenceQuery(target=0, target_label=1, own_label=0, depth=2)
        with pytest.raises(UsageError):
            build_candidates(g, q)

    def test_cap_prefers_low_degree_then_id(self, toy):
        cands = build_candidates(toy, toy_query(toy), cap=2)
        # u6/u8 have degree 2, u7 degree 5; cap keeps the low-degree pair
        assert {toy.name_of(u) for u in cands.add_candidates} == {"u6", "u8"}


class TestPlanAttack:
    def test_exact_budget_one_picks_oracle_argmax(self, toy):
        plan = plan_attack(toy, toy_query(toy), 1, never_succeeds, mode="exact")
        step = plan.toggles[0]
        assert (toy.name_of(step.node), step.direction) == TOY_EXACT_FIRST_PICK

    def test_approx_budget_one_breaks_tie_by_id(self, toy):
        plan = plan_attack(toy, toy_query(toy), 1, never_succeeds, mode="approx")
        step = plan.toggles[0]
        assert (toy.name_of(step.node), step.direction) == TOY_APPROX_FIRST_PICK

    def test_budget_zero_rejected(self, toy):
        with pytest.raises(UsageError):
            plan_attack(toy, toy_query(toy), 0, never_succeeds)

    def test_empty_candidates_fail_fast(self):
        g = Graph(3, [(0, 1), (0, 2)], labels=[0, 0, 0], num_classes=3)
        q = InfluenceQuery(target=0, target_label=1, own_label=2, depth=2)
        plan = plan_attack(g, q, 3, never_succeeds)
        assert plan.success is False
        assert plan.edges_used == 0
        assert "no candidates" in plan.notes[0]

    def test_budget_respected_and_no_reuse(self, toy):
        for budget in (1, 2, 3, 4, 5, 9):
            plan = plan_attack(toy, toy_query(toy), budget, never_succeeds, mode="approx")
            assert plan.edges_used <= budget
            nodes = [s.node for s in plan.toggles]
            assert len(nodes) == len(set(nodes))
            assert len(plan.toggles) == plan.edges_used

    def test_all_five_candidates_exhaust_at_large_budget(self, toy):
        plan = plan_attack(toy, toy_query(toy), 9, never_succeeds, mode="approx")
        assert plan.edges_used == 5

    def test_early_stop_on_positive_margin(self, toy):
        margins = iter([-0.5, 0.25, 0.9])
        plan = plan_attack(toy, toy_query(toy), 5, lambda ov: next(margins))
        assert plan.edges_used == 2
        assert plan.success is True
        assert plan.final_margin == pytest.approx(0.25)

    def test_full_budget_without_early_stop(self, toy):
        margins = iter([-0.5, 0.25, 0.9, 0.9, 0.9])
        plan = plan_attack(toy, toy_query(toy), 5, lambda ov: next(margins),
                           early_stop=False)
        assert plan.edges_used == 5
        assert plan.success is True

    def test_require_positive_gain_stops_on_toy(self, toy):
        # every toy gain is negative, so the strict variant applies nothing
        plan = plan_attack(toy, toy_query(toy), 3, never_succeeds,
                           require_positive_gain=True)
        assert plan.edges_used == 0
        assert any("not positive" in n for n in plan.notes)

    def test_last_edge_deletion_skipped(self):
        # target 0 has a single same-label neighbor and no add candidates
        g = Graph(3, [(0, 1), (1, 2)], labels=[0, 0, 0], num_classes=2)
        q = InfluenceQuery(target=0, target_label=1, own_label=0, depth=2)
        plan = plan_attack(g, q, 2, never_succeeds)
        assert plan.edges_used == 0
        assert any("isolate" in n for n in plan.notes)

    def test_prefix_queries(self, toy):
        plan = AttackPlan(target=0, target_label=1, own_label=0, budget=4,
                          mode="approx", depth=2, label_source="true_labels")
        plan.toggles = [AttackStep(6, "add", -0.1, -0.4),
                        AttackStep(2, "delete", -0.2, 0.3),
                        AttackStep(8, "add", -0.3, 0.5)]
        assert not plan.success_at(1)
        assert plan.success_at(2) and plan.success_at(3)
        assert plan.success_step() == 2
        assert plan.margin_at(1, clean_margin=-0.9) == pytest.approx(-0.4)
        assert plan.margin_at(0, clean_margin=-0.9) == pytest.approx(-0.9)
        assert plan.steps_at(4) == 2  # stops counting at the success step
        assert plan.edges_added(2) == 1 and plan.edges_removed(2) == 1


class TestModeAgreement:
    def test_modes_agree_when_approx_ranking_is_decisive(self):
        # when the approx top-2 gap exceeds the observed worked-example error
        # bound, exact and approx must pick the same first toggle
        from edgeflip.influence import approx_constant, approx_delta

        checked = 0
        for seed in range(25):
            rng = np.random.default_rng(seed)
            n = 14
            edges = [(u, w) for u in range(n) for w in range(u + 1, n)
                     if rng.random() < 0.18]
            labels = rng.integers(0, 2, size=n)
            g = Graph(n, edges, labels=labels, num_classes=2)
            v = int(rng.integers(0, n))
            own = int(labels[v])
            q = InfluenceQuery(target=v, target_label=1 - own, own_label=own, depth=2)
            scored = []
            ca = approx_constant(g, q, "add")
            cands = build_candidates(g, q)
            for a in cands.add_candidates:
                scored.append((ca + approx_delta(g, q, a, "add"), a, "add"))
            if g.degree(v) > 2 and cands.delete_candidates:
                cb = approx_constant(g, q, "delete")
                for b in cands.delete_candidates:
                    scored.append((cb - approx_delta(g, q, b, "delete"), b, "delete"))
            if len(scored) < 2:
                continue
            scored.sort(key=lambda t: (-t[0], t[1]))
            if scored[0][0] - scored[1][0] <= 0.03:
                continue
            approx_plan = plan_attack(g, q, 1, never_succeeds, mode="approx")
            exact_plan = plan_attack(g, q, 1, never_succeeds, mode="exact")
            a_step, e_step = approx_plan.toggles[0], exact_plan.toggles[0]
            assert (a_step.node, a_step.direction) == (e_step.node, e_step.direction)
            checked += 1
        assert checked >= 5


class TestResolveLabels:
    def test_true_mode_returns_stored(self, toy):
        assert np.array_equal(resolve_labels(toy, None, "true_labels"), toy.labels)

    def test_estimated_matches_truth_on_well_trained_graph(self):
        g = generate_sbm(2, 60, 0.15, 0.01, feature_dim=16, noise=1.0, seed=3)
        model = train_on_graph(g, list(range(g.num_nodes)), 2)
        train_acc = (model.predict(g) == g.labels).mean()
        assert train_acc == 1.0
        est = resolve_labels(g, model, "estimated_labels")
        assert np.array_equal(est, g.labels)

    def test_untrained_victim_rejected(self, toy):
        from edgeflip.victim import SgcModel

        model = SgcModel(depth=2, weights=np.zeros((10, 2)))
        with pytest.raises(UsageError):
            resolve_labels(toy, model, "estimated_labels")


class TestEndToEnd:
    def test_sbm_margin_flips_after_successful_plan(self):
        g = generate_sbm(2, 80, 0.1, 0.01, feature_dim=16, noise=4.0, seed=9)
        trainer = lambda gr, ids: train_on_graph(gr, ids, 2)
        split, model = sample_split(g, trainer, n_per_class=20, n_targets=10, seed=9)
        flipped = 0
        for v in split.target_ids:
            c = pick_target_label(model, g, v)
            clean = attack_margin(model, g, v, c)
            assert clean < 0
            q = InfluenceQuery(target=v, target_label=c, own_label=int(g.labels[v]), depth=2)
            plan = plan_attack(g, q, 8, lambda ov: attack_margin(model, ov, v, c))
            if plan.success:
                assert plan.final_margin > 0
                flipped += 1
        # the acceptance suite pins the real efficacy bar; here we only need
        # the margin sign to flip for a majority of targets end to end
        assert flipped >= 5
