"""Checkpointed resilient search (majority-vote verification).

Two pointers walk the bisection tree: the raw descent ``cur`` answers one
question per step and ignores lies; a trailing checkpoint (the last verified
node) advances only once ``cur`` is radius_r(d) levels past it, where d is
the depth being verified.  A checkpoint advance onto child v requires at
least k of the window answers below v to agree with v's direction;
otherwise the question at the checkpoint is re-asked 2k+1 times and the
majority decides, pulling ``cur`` back onto the checkpoint.  The run halts
when the checkpoint reaches an isolating leaf, whose label it outputs.

Internally nodes are heap ids; the current window of answers is the low
bits of ``cur``.
"""

from __future__ import annotations

from .errors import SearchNonTermination
from .numerics import radius_r
from .placement import Placement
from .runlog import RunReport

_MAIN = 0
_MAJORITY = 1

#: Safety fuel: no legal run at the sizes this package targets gets near it.
MAX_QUESTIONS_FUEL = 10_000_000


class CheckpointSearch:
    """Step-wise state machine; ``query()`` then ``advance(bit)`` per question."""

    __slots__ = (
        "pl", "k", "radius", "need_match", "cur", "depth", "cur_info",
        "lv_node", "lv_depth", "lv_info", "phase", "m_asked", "m_ones",
        "trigger", "questions", "majority_rounds", "max_depth", "done",
        "output_index", "fuel",
    )

    def __init__(self, placement: Placement, k: int, radius=None,
                 advance_matching: int | None = None, fuel: int | None = None):
        self.pl = placement
        self.k = k
        self.radius = radius if radius is not None else (lambda d: radius_r(d, k))
        # requiring k matching window answers defeats any k-lie source;
        # smaller values exist only for the negative-control mutation tests
        self.need_match = advance_matching if advance_matching is not None else k
        self.cur = 1
        self.depth = 0
        self.cur_info = placement.node_info(1)
        self.lv_node = 1
        self.lv_depth = 0
        self.lv_info = self.cur_info
        self.phase = _MAIN
        self.m_asked = 0
        self.m_ones = 0
        self.trigger = 1 + self.radius(1)
        self.questions = 0
        self.majority_rounds = 0
        self.max_depth = 0
        self.fuel = fuel if fuel is not None else MAX_QUESTIONS_FUEL
        if placement.n == 1:  # the root already isolates the single element
            self.done = True
            self.output_index = 1
        else:
            self.done = False
            self.output_index = None

    # -- runner protocol ----------------------------------------------------

    def phase_name(self) -> str:
        return "majority" if self.phase == _MAJORITY else "main"

    def query(self) -> int:
        """Boundary index of the pending comparison question."""
        if self.phase == _MAJORITY:
            return self.lv_info[0]
        return self.cur_info[0]

    def advance(self, bit: int):
        """Consume one answer bit; returns transcript event dicts or None."""
        self.questions += 1
        self.fuel -= 1
        if self.fuel <= 0:
            raise SearchNonTermination("checkpoint search exceeded its fuel")
        if self.phase == _MAJORITY:
            self.m_asked += 1
            self.m_ones += bit
            if self.m_asked < 2 * self.k + 1:
                return None
            mbit = 1 if self.m_ones >= self.k + 1 else 0
            parent_info = self.lv_info
            self.lv_node = (self.lv_node << 1) | mbit
            self.lv_depth += 1
            self.lv_info = self.pl.child_info(self.lv_node, mbit, parent_info)
            self.cur = self.lv_node
            self.depth = self.lv_depth
            self.cur_info = self.lv_info
            self.phase = _MAIN
            self.majority_rounds += 1
            self._after_checkpoint_advance(parent_info)
            return [{"event": "majority_reset", "depth": self.lv_depth}]
        self.cur = (self.cur << 1) | bit
        self.depth += 1
        if self.depth > self.max_depth:
            self.max_depth = self.depth
        self.cur_info = self.pl.child_info(self.cur, bit, self.cur_info)
        if self.depth != self.trigger:
            return None
        d = self.lv_depth + 1
        r = self.trigger - d
        window = self.cur & ((1 << r) - 1)
        cand_dir = (self.cur >> r) & 1
        matching = window.bit_count() if cand_dir else r - window.bit_count()
        if matching <= self.need_match - 1:
            self.phase = _MAJORITY
            self.m_asked = 0
            self.m_ones = 0
            return None
        parent_info = self.lv_info
        self.lv_node = (self.lv_node << 1) | cand_dir
        self.lv_depth = d
        self.lv_info = self.pl.child_info(self.lv_node, cand_dir, parent_info)
        self._after_checkpoint_advance(parent_info)
        return [{"event": "advance_lv", "depth": self.lv_depth}] if not self.done else None

    def _after_checkpoint_advance(self, parent_info) -> None:
        if (self.lv_info[2] - self.lv_info[1] == 1
                and parent_info[2] - parent_info[1] >= 2):
            self.done = True
            self.output_index = self.lv_info[1]
            return
        d = self.lv_depth + 1
        self.trigger = d + self.radius(d)

    def clone(self) -> "CheckpointSearch":
        dup = CheckpointSearch.__new__(CheckpointSearch)
        for name in CheckpointSearch.__slots__:
            setattr(dup, name, getattr(self, name))
        return dup

    def memo_key(self):
        return (self.cur, self.lv_depth, self.phase, self.m_asked, self.m_ones)

    def report(self, lies_told: int = 0, transcript=None) -> RunReport:
        label = (self.pl.mu.labels[self.output_index - 1]
                 if self.output_index is not None else None)
        return RunReport(
            output_label=label,
            output_index=self.output_index,
            questions=self.questions,
            lies_told=lies_told,
            majority_rounds=self.majority_rounds,
            jump_backs=self.majority_rounds,
            max_depth=self.max_depth,
            transcript=transcript,
        )


def run_checkpoint_search(placement: Placement, k: int, source, *,
                          record: bool = False, radius=None) -> RunReport:
    """Convenience loop: run the checkpointed search against a source."""
    from .runlog import run_with_source

    return run_with_source(CheckpointSearch(placement, k, radius=radius),
                           source, record=record)


def majority_vote(query_boundary: int, k: int, source) -> int:
    """Ask the same comparison 2k+1 times and return the majority bit."""
    votes = sum(source.answer(query_boundary) for _ in range(2 * k + 1))
    return 1 if votes >= k + 1 else 0


def count_problematic(placement: Placement, i: int, k: int, radius=None):
    """(F, F') over the root-to-leaf path of element i.

    A path node at depth d (a left/right child) is problematic when at most
    k of the next radius(d) path nodes share its direction; nodes without
    that many path descendants cannot qualify.  F counts them, F' sums
    their radii.  Used by the cost-accounting checks.
    """
    radius = radius if radius is not None else (lambda d: radius_r(d, k))
    leaf = placement.leaf_node(i)
    depth = leaf.bit_length() - 1
    bits = [(leaf >> (depth - 1 - j)) & 1 for j in range(depth)]
    f = 0
    f_prime = 0
    for d in range(1, depth + 1):
        r = radius(d)
        if d + r > depth:
            continue
        mine = bits[d - 1]
        matching = sum(1 for j in range(d + 1, d + r + 1) if bits[j - 1] == mine)
        if matching <= k:
            f += 1
            f_prime += r
    return f, f_prime
