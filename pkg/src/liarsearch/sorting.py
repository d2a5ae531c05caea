"""Lie-resilient distributional insertion sort.

Items arrive as x_1..x_n; round l inserts x_l into the sorted prefix by
running the backtracking search over the l insertion slots, with the slot
prior supplied by a permutation model.  A slot comparison "slot < r?"
translates to the pairwise question "x_l before the prefix element of rank
r?"; boundaries 1 and l+1 are constant questions the comparator may still
lie about.  One answer source spans all rounds, so the lie budget is global.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction

from .backtrack import BacktrackSearch
from .errors import DomainError
from .numerics import ProbabilityVector, entropy
from .placement import Placement, ThetaStream


class UniformPrior:
    """All slot positions equally likely at every round."""

    def slot_distribution(self, width: int) -> ProbabilityVector:
        return ProbabilityVector.uniform(width, prefix="slot")

    def __repr__(self):
        return "UniformPrior()"


class MallowsPrior:
    """Insertion weights proportional to q^(width-1), ..., q^0, left to right.

    q < 1 favors late (rightmost) slots, so repeated insertion concentrates
    near the identity ordering; q = 1 degenerates to the uniform prior.
    """

    def __init__(self, q: Fraction):
        q = Fraction(q)
        if q <= 0:
            raise DomainError("Mallows dispersion must be > 0")
        self.q = q

    def slot_distribution(self, width: int) -> ProbabilityVector:
        weights = [self.q ** (width - s) for s in range(1, width + 1)]
        return ProbabilityVector.from_weights(weights, prefix="slot")

    def __repr__(self):
        return f"MallowsPrior(q={self.q})"


def uniform_prior(n: int) -> UniformPrior:
    return UniformPrior()


def mallows_prior(n: int, q: Fraction) -> MallowsPrior:
    return MallowsPrior(q)


def parse_prior(spec: str):
    if spec == "uniform":
        return UniformPrior()
    if spec.startswith("mallows:"):
        return MallowsPrior(Fraction(spec.split(":", 1)[1]))
    raise DomainError(f"unknown prior spec {spec!r}")


def permutation_entropy(prior, n: int) -> float:
    """H of the induced permutation via the chain rule over insertions."""
    return sum(entropy(prior.slot_distribution(width)) for width in range(2, n + 1))


def sample_ordering(prior, n: int, rng) -> list[int]:
    """Draw a true ordering by repeated insertion from the prior.

    Returns items 1..n listed smallest-first.
    """
    order: list[int] = []
    for item in range(1, n + 1):
        width = item
        if width == 1:
            order.append(item)
            continue
        dist = prior.slot_distribution(width)
        u = Fraction(rng.getrandbits(64), 1 << 64)
        acc = Fraction(0)
        slot = width
        for s, p in enumerate(dist.probs, start=1):
            acc += p
            if u < acc:
                slot = s
                break
        order.insert(slot - 1, item)
    return order


def round_seed(seed: int, round_no: int) -> int:
    digest = hashlib.sha256(
        b"sort-round" + seed.to_bytes(8, "big", signed=False)
        + round_no.to_bytes(4, "big")).digest()
    return int.from_bytes(digest[:8], "big")


def sort_truth(order: list[int]):
    """Truth function over sort queries given the true smallest-first order."""
    rank = {item: pos for pos, item in enumerate(order)}

    def truth(query) -> int:
        kind = query[0]
        if kind == "F":
            return 1  # constant-false comparison: never strictly before
        if kind == "T":
            return 0  # constant-true comparison
        _, a, b = query
        return 0 if rank[a] < rank[b] else 1

    return truth


class NoisySort:
    """Step-wise insertion sort driving one backtracking search per round."""

    def __init__(self, n: int, k: int, prior, seed: int, rprime=None):
        self.n = n
        self.k = k
        self.prior = prior
        self.seed = seed
        self.rprime = rprime
        self.prefix = [1] if n >= 1 else []
        self.round_no = 2
        self.inner: BacktrackSearch | None = None
        self.questions = 0
        self.done = n <= 1
        self._placements: dict[int, Placement] = {}
        if not self.done:
            self._start_round()

    @property
    def output_order(self) -> list[int]:
        return list(self.prefix)

    # kept for explorer compatibility
    @property
    def output_index(self):
        return tuple(self.prefix) if self.done else None

    def _start_round(self) -> None:
        width = self.round_no
        pl = self._placements.get(width)
        if pl is None:
            dist = self.prior.slot_distribution(width)
            pl = Placement(dist, ThetaStream(seed=round_seed(self.seed, width)))
            self._placements[width] = pl
        self.inner = BacktrackSearch(pl.clone(), self.k, rprime=self.rprime)

    def phase_name(self) -> str:
        return f"round{self.round_no}:{self.inner.phase_name()}"

    def query(self):
        r = self.inner.query()
        width = self.round_no
        if r == 1:
            return ("F",)
        if r == width + 1:
            return ("T",)
        return ("cmp", width, self.prefix[r - 2])

    def advance(self, bit: int):
        self.questions += 1
        self.inner.advance(bit)
        if not self.inner.done:
            return None
        slot = self.inner.output_index
        self.prefix.insert(slot - 1, self.round_no)
        self.round_no += 1
        if self.round_no > self.n:
            self.done = True
            self.inner = None
        else:
            self._start_round()
        return None

    def clone(self) -> "NoisySort":
        dup = NoisySort.__new__(NoisySort)
        dup.n = self.n
        dup.k = self.k
        dup.prior = self.prior
        dup.seed = self.seed
        dup.rprime = self.rprime
        dup.prefix = list(self.prefix)
        dup.round_no = self.round_no
        dup.inner = self.inner.clone() if self.inner is not None else None
        dup.questions = self.questions
        dup.done = self.done
        dup._placements = self._placements  # shared: caches are append-only
        return dup

    def memo_key(self):
        return None

    def lies_stats(self):
        return None


def noisy_insertion_sort(n: int, k: int, prior, seed: int, source,
                         rprime=None) -> tuple[list[int], int]:
    """Run a full sort against an answer source sharing one lie budget.

    The source's truth function is rebound to the sort's query vocabulary;
    returns (smallest-first ordering of items 1..n, comparisons used).
    """
    sorter = NoisySort(n, k, prior, seed, rprime=rprime)
    while not sorter.done:
        bit = source.answer(sorter.query())
        sorter.advance(bit)
    return sorter.output_order, sorter.questions
