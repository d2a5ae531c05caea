"""Answer sources honoring the k-lie contract, and exhaustive exploration.

Sources answer queries one at a time; every emitted bit that differs from
the truthful bit consumes one unit of the lie budget, enforced inline.  The
exhaustive explorer forks the run at every question into a truthful and
(while budget remains) a lying branch, which subsumes every deterministic
adaptive adversary for a fixed placement.
"""

from __future__ import annotations

import math
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from .errors import (DomainError, InvariantViolation, ResourceBudgetExceeded,
                     SearchNonTermination)
from .numerics import ProbabilityVector, binom_leq

DEFAULT_STATE_BUDGET = 10_000_000


def comparison_truth(x_index: int):
    """Truth function for the search game: bit 0 iff x precedes the boundary."""
    def truth(boundary: int) -> int:
        return 0 if x_index < boundary else 1
    return truth


class AnswerSource:
    """Budget-enforcing answerer; subclasses choose where to lie.

    ``truth`` maps a query to its truthful bit.  ``answer`` returns the
    emitted bit and counts a lie whenever it differs from the truth.
    """

    def __init__(self, truth, budget: int):
        if budget < 0:
            raise DomainError("lie budget must be >= 0")
        self.truth = truth
        self.budget = budget
        self.lies_used = 0
        self.asked = 0

    def bind_truth(self, truth) -> None:
        """Swap the truth function (the sort rebinds it each round)."""
        self.truth = truth

    def _wants_lie(self, index: int, query, truthful: int) -> bool:
        return False

    def answer(self, query) -> int:
        t = self.truth(query)
        self.asked += 1
        if self._wants_lie(self.asked, query, t) and self.lies_used < self.budget:
            self.lies_used += 1
            bit = 1 - t
        else:
            bit = t
        if self.lies_used > self.budget:
            raise InvariantViolation("answer source exceeded its lie budget")
        return bit


class TruthfulSource(AnswerSource):
    def __init__(self, truth, budget: int = 0):
        super().__init__(truth, budget)


class ScheduledSource(AnswerSource):
    """Lies exactly at the scheduled 1-based global question indices."""

    def __init__(self, truth, schedule, budget: int):
        schedule = frozenset(int(i) for i in schedule)
        if len(schedule) > budget:
            raise DomainError("schedule larger than the lie budget")
        if schedule and min(schedule) < 1:
            raise DomainError("schedule indices are 1-based")
        super().__init__(truth, budget)
        self.schedule = schedule

    def _wants_lie(self, index, query, truthful):
        return index in self.schedule


def truthful_source(x_index: int) -> TruthfulSource:
    return TruthfulSource(comparison_truth(x_index))


def scheduled_source(x_index: int, schedule, k: int) -> ScheduledSource:
    return ScheduledSource(comparison_truth(x_index), schedule, k)


def alpha_window(mu: ProbabilityVector, x_index: int) -> int:
    """ceil(log2(1/mu(x)) / 2), computed exactly on rationals."""
    inv = 1 / mu.prob(x_index)
    a = 0
    while Fraction(4) ** a < inv:
        a += 1
    return max(a, 1) if inv > 1 else max(a, 0) or 1


def _unrank_subset(alpha: int, k: int, rank: int) -> frozenset[int]:
    """rank -> the rank-th subset of {1..alpha} of size <= k (sizes ascending)."""
    for size in range(k + 1):
        block = math.comb(alpha, size)
        if rank < block:
            chosen = []
            start = 1
            for slot in range(size, 0, -1):
                for candidate in range(start, alpha + 1):
                    c = math.comb(alpha - candidate, slot - 1)
                    if rank < c:
                        chosen.append(candidate)
                        start = candidate + 1
                        break
                    rank -= c
            return frozenset(chosen)
        rank -= block
    raise DomainError("subset rank out of range")


def random_alpha_source(x_index: int, mu: ProbabilityVector, k: int,
                        seed: int) -> ScheduledSource:
    """Lies on a uniformly random subset (size <= k) of the first alpha(x) questions."""
    alpha = alpha_window(mu, x_index)
    total = binom_leq(alpha, k)
    rank = random.Random(seed).randrange(total)
    schedule = _unrank_subset(alpha, min(k, alpha), rank)
    return ScheduledSource(comparison_truth(x_index), schedule, k)


def make_source(spec: str, x_index: int, mu: ProbabilityVector, k: int,
                seed: int) -> AnswerSource:
    """Parse a CLI adversary spec: truthful | schedule:1,5,9 | random-alpha[:seed=N]."""
    if spec == "exhaustive":
        raise DomainError(
            "the exhaustive adversary enumerates branches instead of "
            "answering; use the verify command")
    if spec == "truthful":
        return TruthfulSource(comparison_truth(x_index), budget=k)
    if spec.startswith("schedule:"):
        body = spec.split(":", 1)[1]
        indices = [int(s) for s in body.split(",") if s.strip()]
        return scheduled_source(x_index, indices, k)
    if spec == "random-alpha" or spec.startswith("random-alpha:"):
        if ":" in spec:
            body = spec.split(":", 1)[1]
            if not body.startswith("seed="):
                raise DomainError(f"bad random-alpha spec {spec!r}")
            seed = seed ^ int(body[5:])
        return random_alpha_source(x_index, mu, k, seed)
    raise DomainError(f"unknown adversary spec {spec!r}")


@dataclass
class ExplorationResult:
    """Aggregate of one exhaustive sweep over all lie placements."""

    max_questions: int
    all_valid: bool
    leaves: int
    states: int
    max_excess: int = 0  # max over leaves of questions - lies * per_lie_allowance


def explore_tree(make_state, truth, k: int, expected_index: int, *,
                 on_leaf=None, state_budget: int = DEFAULT_STATE_BUDGET) -> ExplorationResult:
    """Plain depth-first fork exploration with cloned states.

    Forks at every question into truthful/lie branches while lies remain.
    ``on_leaf(state, lies_used)`` runs per completed branch (for invariant
    checks).  Works with any runner exposing query/advance/clone/done.
    """
    maxq = 0
    valid = True
    leaves = 0
    states = 0
    stack = [(make_state(), None, 0)]
    while stack:
        st, forced, lies = stack.pop()
        if forced is not None:
            st.advance(forced)
        while not st.done:
            q = st.query()
            t = truth(q)
            if lies < k:
                fork = st.clone()
                stack.append((fork, 1 - t, lies + 1))
            st.advance(t)
            states += 1
            if states > state_budget:
                raise ResourceBudgetExceeded(
                    f"exploration exceeded {state_budget} states")
        leaves += 1
        if st.questions > maxq:
            maxq = st.questions
        if st.output_index != expected_index:
            valid = False
        if on_leaf is not None:
            on_leaf(st, lies)
    return ExplorationResult(maxq, valid, leaves, states)


def exhaustive_worst_case(algo: str, placement, x_index: int, k: int, *,
                          state_budget: int = DEFAULT_STATE_BUDGET) -> ExplorationResult:
    """Fork the run at every question into truthful/lie branches.

    Returns the maximum question count over all branches and whether every
    branch outputs the hidden element.  Subsumes every deterministic
    adaptive adversary for the fixed placement.  ``algo`` selects the
    checkpointed ("1") or backtracking ("2") search.
    """
    from .backtrack import BacktrackSearch
    from .checkpoint import CheckpointSearch

    truth = comparison_truth(x_index)
    if str(algo) == "1":
        return explore_memo(lambda: CheckpointSearch(placement.clone(), k),
                            truth, k, x_index, state_budget=state_budget)
    return explore_tree(lambda: BacktrackSearch(placement.clone(), k),
                        truth, k, x_index, state_budget=state_budget)


def explore_memo(make_state, truth, k: int, expected_index: int, *,
                 per_lie_allowance: int = 0,
                 state_budget: int = DEFAULT_STATE_BUDGET,
                 on_state=None,
                 complete=None) -> ExplorationResult:
    """Memoized exploration for runners with hashable ``memo_key``.

    States reachable along different lie placements that coincide are
    explored once; the result is identical to the plain fork tree.  Once the
    budget is spent the remaining run is deterministic and is delegated to
    ``complete`` (a fast truthful completion), when given.

    ``max_excess`` aggregates max(questions - lies * per_lie_allowance) over
    leaves, which the cost-accounting checks compare against their lie-free
    budget.
    """
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    memo: dict = {}
    counter = [0]
    leaves = [0]

    if complete is None:
        def complete(st):  # iterative truthful completion
            q0 = st.questions
            while not st.done:
                st.advance(truth(st.query()))
            return st.questions - q0, st.output_index, 0

    def leaf_value(st):
        leaves[0] += 1
        return (0, st.output_index == expected_index, 0)

    def explore(st, lies, rec_depth):
        if st.done:
            return leaf_value(st)
        if on_state is not None:
            on_state(st, lies)
        if lies == k:
            dq, out_idx, flags = complete(st)
            leaves[0] += 1
            if flags:
                raise InvariantViolation(
                    f"truthful completion raised invariant flags {flags}")
            return (dq, out_idx == expected_index, dq)
        if rec_depth > 4000:
            # only mutated (negative-control) runs can descend this far
            raise SearchNonTermination("exploration recursion ran away")
        key = (st.memo_key(), lies)
        hit = memo.get(key)
        if hit is not None:
            return hit
        counter[0] += 1
        if counter[0] > state_budget:
            raise ResourceBudgetExceeded(
                f"exploration exceeded {state_budget} states")
        t = truth(st.query())
        fork = st.clone()
        fork.advance(1 - t)
        lq, lvalid, lex = explore(fork, lies + 1, rec_depth + 1)
        lie_branch = (lq + 1, lvalid, lex + 1 - per_lie_allowance)
        st_t = st.clone()
        st_t.advance(t)
        tq, tvalid, tex = explore(st_t, lies, rec_depth + 1)
        truth_branch = (tq + 1, tvalid, tex + 1)
        result = (max(truth_branch[0], lie_branch[0]),
                  truth_branch[1] and lie_branch[1],
                  max(truth_branch[2], lie_branch[2]))
        memo[key] = result
        return result

    root = make_state()
    q, valid, excess = explore(root, 0, 0)
    return ExplorationResult(q, valid, leaves[0], counter[0], max_excess=excess)
