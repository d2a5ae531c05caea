"""Tests for the backtracking (suspicion jump-back) search."""

from fractions import Fraction

from liarsearch.adversary import scheduled_source, truthful_source
from liarsearch.backtrack import (
    deepest_opposing,
    max_depth_bound,
    run_backtrack_search,
    suspicious_for,
    verify_object,
)
from liarsearch.experiments import verify_backtrack_case, verify_sweep
from liarsearch.numerics import RPRIME_LINEAR_CONSTANT, ProbabilityVector, olog
from liarsearch.placement import NodePath, build_placement

U2 = ProbabilityVector.uniform(2)
U4 = ProbabilityVector.uniform(4)
U8 = ProbabilityVector.uniform(8)


def path_of(*bits) -> NodePath:
    return NodePath(tuple(bits))


class TestSuspiciousRule:
    def test_all_matching_gives_none(self):
        assert suspicious_for(path_of(0, 0, 0), {}, 1) is None

    def test_deepest_opposing_selected(self):
        assert suspicious_for(path_of(1, 0, 0), {}, 1) == path_of(1)
        assert suspicious_for(path_of(0, 1, 0, 0), {}, 1) == path_of(0, 1)

    def test_verified_candidate_suppressed(self):
        counts = {path_of(0, 1): 2}  # k+1 = 2 answers makes it verified
        assert suspicious_for(path_of(0, 1, 0, 0), counts, 1) is None
        counts = {path_of(0, 1): 1}
        assert suspicious_for(path_of(0, 1, 0, 0), counts, 1) == path_of(0, 1)

    def test_int_helper_matches(self):
        for bits in [(0,), (1, 0), (1, 0, 0), (0, 1, 1, 0), (1, 1, 1)]:
            node = path_of(*bits).to_int()
            got = deepest_opposing(node)
            mine = bits[-1]
            want = 0
            for depth in range(len(bits) - 1, 0, -1):
                if bits[depth - 1] != mine:
                    want = path_of(*bits[:depth]).to_int()
                    break
            assert got == want


class TestBasicRuns:
    def test_truthful_cost_depth_plus_verify(self):
        for k in (0, 1, 2):
            for seed in range(10):
                pl = build_placement(U4, seed)
                for x in range(1, 5):
                    rep = run_backtrack_search(pl.clone(), k, truthful_source(x))
                    depth = pl.leaf_node(x).bit_length() - 1
                    assert rep.output_index == x
                    assert rep.questions == depth + 2 * (k + 1)
                    assert rep.verify_pairs == k + 1
                    assert rep.jump_backs == 0

    def test_single_lie_mid_descent_recovers(self):
        for seed in range(10):
            pl = build_placement(U8, seed)
            for x in (1, 4, 8):
                src = scheduled_source(x, {2}, 1)
                rep = run_backtrack_search(pl.clone(), 1, src)
                assert rep.output_index == x
                if src.lies_used:
                    assert rep.jump_backs >= 1

    def test_single_element_immediate_verify(self):
        one = ProbabilityVector(["only"], [Fraction(1)])
        rep = run_backtrack_search(build_placement(one, 1), 1,
                                   truthful_source(1))
        assert rep.questions == 4  # k+1 = 2 equality pairs
        assert rep.output_label == "only"


class TestVerifyObject:
    def test_truthful_correct_label(self):
        ok, used = verify_object(2, 1, truthful_source(2))
        assert ok and used == 4

    def test_truthful_wrong_label(self):
        ok, used = verify_object(3, 1, truthful_source(2))
        assert not ok and used == 2

    def test_one_lie_fails_fast_then_run_retries(self):
        # a spoiled first pair ends the invocation (1 unequal > 0 equal);
        # across the whole search the gate is re-entered and the total
        # equality budget comes to 1 + (k+1) = 3 pairs
        src = scheduled_source(2, {1}, 1)
        ok, used = verify_object(2, 1, src)
        assert not ok and used == 2
        for seed in range(6):
            pl = build_placement(U4, seed)
            x = 2
            depth = pl.leaf_node(x).bit_length() - 1
            spoiled = scheduled_source(x, {depth + 1}, 1)  # first verify comparison
            rep = run_backtrack_search(pl.clone(), 1, spoiled)
            assert rep.output_index == x
            if spoiled.lies_used:
                assert rep.verify_pairs == 3

    def test_budget_cap(self):
        # interleaving lies stretches one invocation to exactly its cap of
        # 2(2k+1) comparisons: pairs read =, !=, =, (!=, =)
        for k, schedule in ((1, {3}), (2, {3, 7})):
            src = scheduled_source(2, schedule, k)
            ok, used = verify_object(2, k, src)
            assert ok
            assert used == 2 * (2 * k + 1)


class TestDepthCeiling:
    def test_bound_dominates_truthful_runs(self):
        mu = ProbabilityVector.uniform(16)
        bound = max_depth_bound(Fraction(1, 16), 0)
        worst = 0
        for seed in range(100):
            pl = build_placement(mu, seed)
            for x in range(1, 17):
                rep = run_backtrack_search(pl.clone(), 0, truthful_source(x))
                worst = max(worst, rep.max_depth)
        assert worst <= bound

    def test_sequence_growth_bound(self):
        # q_i <= q_0 + 8*a*i*(olog q_0 + olog a + olog i + 1)
        for k in (1, 2, 3):
            a = RPRIME_LINEAR_CONSTANT * olog(k)
            for q0 in (4.0, 10.0, 23.0, 100.0):
                q = q0
                for i in range(1, 12):
                    q = q + a * olog(q) + a
                    cap = q0 + 8 * a * i * (olog(q0) + olog(a) + olog(i) + 1)
                    assert q <= cap, (k, q0, i)

    def test_monotone(self):
        vals = [max_depth_bound(Fraction(1, 1 << e), 1) for e in range(1, 12)]
        assert vals == sorted(vals)
        ks = [max_depth_bound(Fraction(1, 8), k) for k in range(0, 5)]
        assert ks == sorted(ks)


class TestSweepInvariants:
    def test_exhaustive_small_sweep(self):
        for mu in (U2, U4):
            for k in (0, 1, 2):
                rep = verify_sweep("2", mu, k, range(3))
                assert rep.all_valid, rep.violations[:3]

    def test_observed_depth_within_ceiling(self):
        mu = U8
        k = 1
        for seed in range(3):
            for x in range(1, 9):
                case = verify_backtrack_case(mu, k, seed, x)
                assert case.valid and not case.violations
        # explorer already asserts the decomposition; spot-check the ceiling
        pl = build_placement(mu, 0)
        rep = run_backtrack_search(pl.clone(), k,
                                   scheduled_source(3, {1}, k))
        assert rep.max_depth <= max_depth_bound(mu.prob(3), k)

    def test_tiny_radius_keeps_validity(self):
        # shrinking the suspicion radius to 1 inflates cost but cannot make
        # the search lie-acceptant: acceptance still takes k+1 equal
        # readings nobody with k lies can fake
        for seed in range(3):
            for x in range(1, 5):
                case = verify_backtrack_case(
                    U4, 1, seed, x, rprime=lambda j: 1)
                assert case.valid, case.violations

    def test_negative_control_detected(self):
        rep = verify_sweep("2", U4, 1, range(2), negative_control=True)
        assert not rep.all_valid

    def test_cost_grows_with_realized_lies(self):
        # the fine-grained guarantee is a trend: more realized lies, more
        # questions on average (matched placements and elements)
        import statistics

        means = []
        for schedule in ((), (2,), (2, 5)):
            totals = []
            for seed in range(100):
                pl = build_placement(U8, seed)
                for x in (1, 4, 7):
                    src = scheduled_source(x, schedule, 2)
                    rep = run_backtrack_search(pl.clone(), 2, src)
                    assert rep.output_index == x
                    totals.append(rep.questions)
            means.append(statistics.fmean(totals))
        assert means[0] < means[1] < means[2], means
