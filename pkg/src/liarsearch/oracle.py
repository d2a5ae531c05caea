"""Brute-force ground truth at tiny scale.

Minimax over arbitrary subset queries on lie-count states: a state maps each
still-consistent element to the number of lies the adversary must already
have told about it; elements pass k and drop out.  The value of a state is
the number of questions an optimal questioner still needs against the worst
adversary.  Also the sphere-packing feasibility check the classical lower
bound rests on.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

from .errors import DomainError
from .numerics import binom_leq

#: State-space guard: queries are enumerated exhaustively.
MAX_N = 6
MAX_K = 2


def optimal_worst_case(n: int, k: int) -> int:
    """Fewest questions that always identify the element despite <= k lies."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_N or k > MAX_K:
        raise DomainError(f"guard: n <= {MAX_N} and k <= {MAX_K}")

    @lru_cache(maxsize=None)
    def value(state: tuple[int, ...]) -> int:
        # state: sorted multiset of lie counts of surviving elements
        if len(state) <= 1:
            return 0
        counts = list(state)
        best = None
        m = len(counts)
        # queries = how many elements of each count-class are inside;
        # enumerating per class covers all subsets up to symmetry
        classes: dict[int, int] = {}
        for c in counts:
            classes[c] = classes.get(c, 0) + 1
        keys = sorted(classes)
        for pick in product(*(range(classes[c] + 1) for c in keys)):
            if all(p == 0 for p in pick) or all(
                    p == classes[c] for p, c in zip(pick, keys)):
                continue  # trivial question, no information either way
            yes = []   # answer "x in Q": elements outside Q accrue a lie
            no = []    # answer "x not in Q": elements inside Q accrue a lie
            for p, c in zip(pick, keys):
                inside, outside = p, classes[c] - p
                yes.extend([c] * inside)
                no.extend([c] * outside)
                if c + 1 <= k:
                    yes.extend([c + 1] * outside)
                    no.extend([c + 1] * inside)
            s_yes = tuple(sorted(yes))
            s_no = tuple(sorted(no))
            if s_yes == state or s_no == state:
                continue  # the adversary can stall this question forever
            worst = 1 + max(value(s_yes), value(s_no))
            if best is None or worst < best:
                best = worst
        if best is None:
            raise DomainError("no informative question exists")
        return best

    return value(tuple([0] * n))


def packing_feasible(n: int, k: int, q: int) -> bool:
    """True iff 2^q >= n * binom_leq(q, k): the volume-count necessary condition."""
    return (1 << q) >= n * binom_leq(q, k)


def packing_threshold(n: int, k: int) -> int:
    """Smallest q for which packing_feasible holds."""
    q = 0
    while not packing_feasible(n, k, q):
        q += 1
    return q
