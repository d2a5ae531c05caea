"""Tests for answer sources and the exhaustive explorer."""

import random

import pytest

from liarsearch.adversary import (
    AnswerSource,
    alpha_window,
    comparison_truth,
    explore_tree,
    make_source,
    random_alpha_source,
    scheduled_source,
    truthful_source,
)
from liarsearch.backtrack import BacktrackSearch, run_backtrack_search
from liarsearch.checkpoint import run_checkpoint_search
from liarsearch.errors import DomainError, ResourceBudgetExceeded
from liarsearch.experiments import verify_backtrack_case, verify_checkpoint_case
from liarsearch.numerics import ProbabilityVector, binom_leq
from liarsearch.placement import build_placement

U2 = ProbabilityVector.uniform(2)
U4 = ProbabilityVector.uniform(4)


class TestTruthfulSource:
    def test_never_lies(self):
        pl = build_placement(U4, 3)
        src = truthful_source(2)
        rep = run_backtrack_search(pl, 1, src, record=True)
        assert src.lies_used == 0
        assert all(not e["lie"] for e in rep.transcript if "lie" in e)

    def test_backtrack_verify_is_exactly_k_plus_1_pairs(self):
        for k in (0, 1, 2):
            pl = build_placement(U4, 9)
            rep = run_backtrack_search(pl.clone(), k, truthful_source(1))
            assert rep.verify_pairs == k + 1

    def test_checkpoint_k0_no_majority(self):
        pl = build_placement(U4, 5)
        rep = run_checkpoint_search(pl, 0, truthful_source(4))
        assert rep.majority_rounds == 0


class TestScheduledSource:
    def test_empty_schedule_is_truthful(self):
        a = scheduled_source(2, (), 1)
        b = truthful_source(2)
        for boundary in (1, 2, 3, 1, 2):
            assert a.answer(boundary) == b.answer(boundary)
        assert a.lies_used == 0

    def test_first_answer_flipped(self):
        src = scheduled_source(2, {1}, 1)
        assert src.answer(3) == 1  # truth is 0 (2 < 3)
        assert src.lies_used == 1
        assert src.answer(3) == 0

    def test_unspent_budget_is_legal(self):
        src = scheduled_source(1, {999}, 1)
        for boundary in (1, 2, 3):
            src.answer(boundary)
        assert src.lies_used == 0

    def test_oversized_schedule_rejected(self):
        with pytest.raises(DomainError):
            scheduled_source(1, {1, 2}, 1)


class TestRandomAlpha:
    def test_alpha_values(self):
        assert alpha_window(U2, 1) == 1           # mu = 1/2
        mu256 = ProbabilityVector.uniform(256)
        assert alpha_window(mu256, 7) == 4        # ceil(8/2)
        mu3 = ProbabilityVector.uniform(3)
        assert alpha_window(mu3, 1) == 1          # ceil(log2(3)/2) = 1

    def test_k0_always_empty(self):
        for seed in range(20):
            src = random_alpha_source(1, U2, 0, seed)
            assert src.schedule == frozenset()

    def test_schedule_inside_window(self):
        mu = ProbabilityVector.uniform(256)
        for seed in range(50):
            src = random_alpha_source(3, mu, 2, seed)
            assert src.schedule <= {1, 2, 3, 4}
            assert len(src.schedule) <= 2

    def test_uniform_over_subsets(self):
        # chi-square against the uniform law on all binom_leq(4, 2) = 11
        # subsets; 1e5 seeded draws, threshold ~ mean + 3 sigma of chi2(10)
        mu = ProbabilityVector.uniform(256)
        counts: dict[frozenset, int] = {}
        draws = 100_000
        for seed in range(draws):
            s = random_alpha_source(3, mu, 2, seed)
            counts[s.schedule] = counts.get(s.schedule, 0) + 1
        total_kinds = binom_leq(4, 2)
        assert len(counts) == total_kinds
        expected = draws / total_kinds
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < 10 + 3 * (20 ** 0.5)


class TestMakeSource:
    def test_specs(self):
        assert make_source("truthful", 1, U4, 2, 0).budget == 2
        src = make_source("schedule:1,5", 1, U4, 2, 0)
        assert src.schedule == frozenset({1, 5})
        src = make_source("random-alpha:seed=7", 1, U4, 1, 3)
        assert len(src.schedule) <= 1
        with pytest.raises(DomainError):
            make_source("nonsense", 1, U4, 1, 0)


class TestExplorer:
    def test_k0_single_branch_matches_truthful(self):
        pl = build_placement(U4, 2)
        for x in range(1, 5):
            res = explore_tree(lambda: BacktrackSearch(pl.clone(), 0),
                               comparison_truth(x), 0, x)
            rep = run_backtrack_search(pl.clone(), 0, truthful_source(x))
            assert res.leaves == 1
            assert res.max_questions == rep.questions
            assert res.all_valid

    def test_worst_case_monotone_in_k(self):
        pl = build_placement(U4, 8)
        x = 2
        worst = []
        for k in (0, 1, 2):
            res = explore_tree(lambda: BacktrackSearch(pl.clone(), k),
                               comparison_truth(x), k, x)
            worst.append(res.max_questions)
        assert worst == sorted(worst)

    def test_sampled_schedules_below_exhaustive_max(self):
        rng = random.Random(13)
        pl = build_placement(U4, 21)
        x = 3
        exhaustive = explore_tree(lambda: BacktrackSearch(pl.clone(), 1),
                                  comparison_truth(x), 1, x)
        for _ in range(50):
            pos = rng.randrange(1, 40)
            src = scheduled_source(x, {pos}, 1)
            rep = run_backtrack_search(pl.clone(), 1, src)
            assert rep.questions <= exhaustive.max_questions

    def test_state_budget_guard(self):
        pl = build_placement(U4, 4)
        with pytest.raises(ResourceBudgetExceeded):
            explore_tree(lambda: BacktrackSearch(pl.clone(), 2),
                         comparison_truth(1), 2, 1, state_budget=50)

    def test_contract_enforced_inline(self):
        class Greedy(AnswerSource):
            def _wants_lie(self, index, query, truthful):
                return True

        src = Greedy(comparison_truth(2), budget=2)
        for boundary in (1, 2, 3, 1, 2, 3):
            src.answer(boundary)
        assert src.lies_used == 2  # clamped at the budget, never beyond


class TestTranscripts:
    def test_search_transcript_schema(self):
        pl = build_placement(U4, 17)
        rep = run_backtrack_search(pl.clone(), 1,
                                   scheduled_source(2, {2}, 1), record=True)
        question_keys = {"t", "kind", "boundary_index", "answer_bit", "lie",
                         "depth_current", "depth_last_verified", "event"}
        questions = [e for e in rep.transcript if "boundary_index" in e]
        assert questions and all(set(e) == question_keys for e in questions)
        events = [e for e in rep.transcript if "boundary_index" not in e]
        kinds = {e["event"] for e in events}
        assert kinds <= {"jump_back", "verify", "advance_lv", "majority_reset"}
        for e in events:
            if e["event"] == "jump_back":
                assert set(e) == {"event", "atop_depth", "reason"}
                assert e["reason"] in ("radius", "verify_fail")
            if e["event"] == "verify":
                assert set(e) == {"event", "label", "result", "eq_questions"}
        lies = [e for e in questions if e["lie"]]
        assert len(lies) == rep.lies_told

    def test_checkpoint_transcript_kinds(self):
        from liarsearch.checkpoint import run_checkpoint_search

        pl = build_placement(U4, 3)
        rep = run_checkpoint_search(pl.clone(), 1,
                                    scheduled_source(1, {1}, 1), record=True)
        kinds = {e["kind"] for e in rep.transcript if "kind" in e}
        assert kinds <= {"main", "majority"}
        assert "majority" in kinds  # the first-question lie forces a re-vote


class TestExhaustiveWorstCaseOp:
    def test_dispatch_and_contract(self):
        from liarsearch.adversary import exhaustive_worst_case

        pl = build_placement(U2, 4)
        for algo in ("1", "2"):
            res0 = exhaustive_worst_case(algo, pl, 1, 0)
            res1 = exhaustive_worst_case(algo, pl, 1, 1)
            assert res0.leaves == 1
            assert res1.all_valid
            assert res1.max_questions >= res0.max_questions

    def test_exhaustive_spec_string_redirects(self):
        with pytest.raises(DomainError):
            make_source("exhaustive", 1, U4, 1, 0)


class TestPerThetaWorstCase:
    def test_both_algorithms_beat_oracle_floor(self):
        from liarsearch.oracle import optimal_worst_case

        for mu, k in ((U2, 1), (U4, 1)):
            n = len(mu)
            floor = optimal_worst_case(n, k)
            ck = verify_checkpoint_case(mu, k, seed=0, x=1)
            bt = verify_backtrack_case(mu, k, seed=0, x=1)
            assert ck.max_questions >= floor
            assert bt.max_questions >= floor
