"""Backtracking resilient search (suspicion jump-backs, equality gate).

A single pointer descends the finite bisection tree.  After every answer the
deepest path node whose direction opposes the latest step is the suspicious
candidate; once radius_rprime(j) consecutive opposing answers pile up below
a suspicious node of depth j, the pointer jumps back atop it (to its parent)
and the question is re-asked once.  A node given as an answer k+1 times is
verified and can no longer be suspicious, which rules out infinite loops.
Reaching an isolating leaf starts the equality gate: the pair of comparisons
"before e?" / "before successor(e)?" realizes one equality question, and the
leaf's label is accepted after k+1 equal readings, or rejected as soon as
unequal readings outnumber equal ones.

Lies are thus undone last-in-first-out, and acceptance of a wrong label
would take k+1 lies, one more than the adversary owns.
"""

from __future__ import annotations

import math

from .errors import SearchNonTermination
from .numerics import RPRIME_LINEAR_CONSTANT, olog, radius_rprime
from .placement import Placement, NodePath
from .runlog import RunReport

_MAIN = 0
_VERIFY = 1

MAX_QUESTIONS_FUEL = 10_000_000


def deepest_opposing(node: int) -> int:
    """Heap id of the deepest strict ancestor opposing the node's direction.

    Returns 0 when every ancestor below the root matches the node's own
    direction (then nothing on the path can be suspicious).
    """
    depth = node.bit_length() - 1
    if depth <= 1:
        return 0
    x = node >> 1
    if node & 1:
        iso = ~x & (x + 1)      # lowest zero bit of the ancestor bits
    else:
        iso = x & -x            # lowest set bit
    j = iso.bit_length() - 1
    if j > depth - 2:
        return 0
    return node >> (j + 1)


def suspicious_for(path: NodePath, counts: dict[NodePath, int], k: int):
    """Public form of the suspicious-node rule over path objects.

    ``counts`` maps nodes to how many times each was given as an answer; a
    node with count >= k+1 is verified and never suspicious.
    """
    cand = deepest_opposing(path.to_int())
    if cand == 0:
        return None
    cand_path = NodePath.from_int(cand)
    if counts.get(cand_path, 0) >= k + 1:
        return None
    return cand_path


class BacktrackSearch:
    """Step-wise state machine; ``query()`` then ``advance(bit)`` per question."""

    __slots__ = (
        "pl", "k", "rprime", "accept_eq", "cur", "depth", "cur_info", "counts",
        "susp", "susp_depth", "phase", "e_idx", "eq", "neq", "half", "first_bit",
        "questions", "verify_pairs", "jump_backs", "jump_counts", "jump_log",
        "max_depth", "done", "output_index", "fuel",
    )

    def __init__(self, placement: Placement, k: int, rprime=None,
                 accept_eq: int | None = None, fuel: int | None = None):
        self.pl = placement
        self.k = k
        self.rprime = rprime if rprime is not None else (lambda j: radius_rprime(j, k))
        # k+1 equal readings defeat any k-lie source; smaller thresholds
        # exist only for the negative-control mutation tests
        self.accept_eq = accept_eq if accept_eq is not None else k + 1
        self.cur = 1
        self.depth = 0
        self.cur_info = placement.node_info(1)
        self.counts: dict[int, int] = {}
        self.susp = 0
        self.susp_depth = 0
        self.phase = _MAIN
        self.e_idx = 0
        self.eq = 0
        self.neq = 0
        self.half = 0
        self.first_bit = 0
        self.questions = 0
        self.verify_pairs = 0
        self.jump_backs = 0
        self.jump_counts: dict[int, int] = {}
        self.jump_log: list[tuple] = []
        self.max_depth = 0
        self.done = False
        self.output_index = None
        self.fuel = fuel if fuel is not None else MAX_QUESTIONS_FUEL
        if placement.n == 1:  # the root already isolates the single element
            self._enter_verify(1)

    # -- runner protocol ----------------------------------------------------

    def phase_name(self) -> str:
        return "verify" if self.phase == _VERIFY else "main"

    def query(self) -> int:
        if self.phase == _VERIFY:
            return self.e_idx + self.half
        return self.cur_info[0]

    def advance(self, bit: int):
        self.questions += 1
        self.fuel -= 1
        if self.fuel <= 0:
            raise SearchNonTermination("backtrack search exceeded its fuel")
        if self.phase == _VERIFY:
            return self._advance_verify(bit)
        parent_width = self.cur_info[2] - self.cur_info[1]
        self.cur = (self.cur << 1) | bit
        self.depth += 1
        if self.depth > self.max_depth:
            self.max_depth = self.depth
        self.cur_info = self.pl.child_info(self.cur, bit, self.cur_info)
        c = self.counts.get(self.cur, 0)
        if c <= self.k:
            self.counts[self.cur] = c + 1
        cand = deepest_opposing(self.cur)
        if cand and self.counts.get(cand, 0) >= self.k + 1:
            cand = 0
        self.susp = cand
        self.susp_depth = cand.bit_length() - 1 if cand else 0
        if self.cur_info[2] - self.cur_info[1] == 1 and parent_width >= 2:
            # first isolating node on this path: a leaf of the finite tree
            self._enter_verify(self.cur_info[1])
            return None
        if cand and self.depth == self.susp_depth + self.rprime(self.susp_depth):
            return self._jump_back(cand, "radius")
        return None

    def _advance_verify(self, bit: int):
        if self.half == 0:
            self.first_bit = bit
            self.half = 1
            return None
        pair_equal = self.first_bit == 1 and bit == 0
        self.half = 0
        self.verify_pairs += 1
        if pair_equal:
            self.eq += 1
            if self.eq >= self.accept_eq:
                self.done = True
                self.output_index = self.e_idx
                return [{"event": "verify", "label": self.e_idx,
                         "result": True, "eq_questions": self.eq}]
        else:
            self.neq += 1
            if self.neq > self.eq:
                anchor = self.susp if self.susp else self.cur
                event = {"event": "verify", "label": self.e_idx,
                         "result": False, "eq_questions": self.eq}
                self.phase = _MAIN
                jump = self._jump_back(anchor, "verify_fail")
                return [event] + (jump or [])
        return None

    def _enter_verify(self, label: int) -> None:
        if self.accept_eq <= 0:  # negative control: trust the leaf blindly
            self.done = True
            self.output_index = label
            return
        self.phase = _VERIFY
        self.e_idx = label
        self.eq = 0
        self.neq = 0
        self.half = 0

    def _jump_back(self, anchor: int, reason: str):
        self.jump_backs += 1
        self.jump_counts[anchor] = self.jump_counts.get(anchor, 0) + 1
        self.jump_log.append((anchor, self.cur, reason, self.e_idx if reason == "verify_fail" else 0))
        target = anchor >> 1 if anchor > 1 else 1
        self.cur = target
        self.depth = target.bit_length() - 1
        self.cur_info = self.pl.node_info(target)
        self.susp = 0
        self.susp_depth = 0
        if self.pl.n == 1:  # only the single-element root can be a leaf here
            self._enter_verify(1)
        return [{"event": "jump_back", "atop_depth": anchor.bit_length() - 1,
                 "reason": reason}]

    def clone(self) -> "BacktrackSearch":
        dup = BacktrackSearch.__new__(BacktrackSearch)
        for name in BacktrackSearch.__slots__:
            setattr(dup, name, getattr(self, name))
        dup.counts = dict(self.counts)
        dup.jump_counts = dict(self.jump_counts)
        dup.jump_log = list(self.jump_log)
        return dup

    def memo_key(self):
        return None  # exhaustive exploration uses plain DFS for this runner

    def report(self, lies_told: int = 0, transcript=None) -> RunReport:
        label = (self.pl.mu.labels[self.output_index - 1]
                 if self.output_index is not None else None)
        return RunReport(
            output_label=label,
            output_index=self.output_index,
            questions=self.questions,
            lies_told=lies_told,
            verify_pairs=self.verify_pairs,
            jump_backs=self.jump_backs,
            max_depth=self.max_depth,
            transcript=transcript,
        )


def run_backtrack_search(placement: Placement, k: int, source, *,
                         record: bool = False, rprime=None) -> RunReport:
    """Convenience loop: run the backtracking search against a source."""
    from .runlog import run_with_source

    return run_with_source(BacktrackSearch(placement, k, rprime=rprime),
                           source, record=record)


def verify_object(label_index: int, k: int, source) -> tuple[bool, int]:
    """Stand-alone equality gate; returns (accepted, comparisons_used).

    Asks the pair "before label?" (expected answer no) and "before its
    successor?" (expected yes) until k+1 equal readings or until unequal
    readings outnumber equal ones; at most 2(2k+1) comparisons.
    """
    eq = 0
    neq = 0
    used = 0
    while True:
        first = source.answer(label_index)
        second = source.answer(label_index + 1)
        used += 2
        if first == 1 and second == 0:
            eq += 1
            if eq == k + 1:
                return True, used
        else:
            neq += 1
            if neq > eq:
                return False, used


def max_depth_bound(mu_i, k: int) -> float:
    """Ceiling on the pointer depth the backtracking search can ever reach.

    q_0 = log2(1/mu_i) + 3 and q_{j+1} = q_j + a*olog(q_j) + a with
    a = RPRIME_LINEAR_CONSTANT * olog(k); after the budget of max(k,1)
    jump-induced extensions the depth cannot exceed q_k.
    """
    steps = max(k, 1)
    a = RPRIME_LINEAR_CONSTANT * olog(max(k, 1))
    q = math.log2(1 / mu_i) + 3
    for _ in range(steps):
        q = q + a * olog(q) + a
    return q
