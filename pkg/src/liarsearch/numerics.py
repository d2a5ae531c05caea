"""Exact rationals, entropy-style functionals, and the radius formulas.

Everything the search games compare (points against interval midpoints) is
exact rational arithmetic; the bound formulas below are diagnostics and use
64-bit floats.  ``Rational`` is :class:`fractions.Fraction`, which already
guarantees reduced form, positive denominator, and a total order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DistributionError, DomainError

Rational = Fraction

#: Additive constant inside ``olog``: log2 log2 log2 16 = 1 > 0, and
#: olog(x) >= 4 for every x >= 0, which keeps h2/h3 total.
OLOG_SHIFT = 16

#: Subtracted before every ceiling applied to a float-valued radius formula,
#: so double rounding cannot push an exact integer up to the next one.
CEIL_GUARD = 2.0 ** -40

_LN2 = math.log(2.0)


def ceil_guarded(x: float) -> int:
    return math.ceil(x - CEIL_GUARD)


def olog(x: float) -> float:
    """log2(x + 16); total, strictly increasing, and >= 4 on x >= 0."""
    if x < 0:
        raise DomainError(f"olog requires x >= 0, got {x}")
    return math.log2(x + OLOG_SHIFT)


@dataclass(frozen=True)
class Dyadic:
    """mantissa / 2**exponent with a normalized (odd or zero) mantissa."""

    mantissa: int
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent < 0:
            raise DomainError("Dyadic exponent must be >= 0")

    @classmethod
    def of(cls, mantissa: int, exponent: int) -> "Dyadic":
        if exponent < 0:
            raise DomainError("Dyadic exponent must be >= 0")
        while mantissa != 0 and mantissa % 2 == 0 and exponent > 0:
            mantissa //= 2
            exponent -= 1
        if mantissa == 0:
            exponent = 0
        return cls(mantissa, exponent)

    def as_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.exponent)

    def __float__(self) -> float:
        return self.mantissa / (1 << self.exponent)


class ProbabilityVector:
    """Ordered labels with exact positive probabilities summing to one.

    The label order is the linear order of the search universe: label i
    precedes label j whenever i < j.  Element indices used by the game
    modules are 1-based.
    """

    __slots__ = ("labels", "probs")

    def __init__(self, labels: Sequence[str], probs: Sequence[Fraction]):
        labels = tuple(str(l) for l in labels)
        probs = tuple(Fraction(p) for p in probs)
        if len(labels) != len(probs):
            raise DistributionError("labels and probs must have equal length")
        if not labels:
            raise DistributionError("empty distribution")
        if len(set(labels)) != len(labels):
            raise DistributionError("labels must be distinct")
        if any(p <= 0 for p in probs):
            raise DistributionError("all probabilities must be > 0")
        if sum(probs) != 1:
            raise DistributionError(f"probabilities sum to {sum(probs)}, not 1")
        self.labels = labels
        self.probs = probs

    def __len__(self) -> int:
        return len(self.probs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ProbabilityVector)
            and self.labels == other.labels
            and self.probs == other.probs
        )

    def __repr__(self) -> str:
        pairs = ", ".join(f"{l}:{p}" for l, p in zip(self.labels, self.probs))
        return f"ProbabilityVector({pairs})"

    def prob(self, index: int) -> Fraction:
        """Probability of the 1-based element ``index``."""
        return self.probs[index - 1]

    @classmethod
    def uniform(cls, n: int, prefix: str = "x") -> "ProbabilityVector":
        return cls([f"{prefix}{i}" for i in range(1, n + 1)], [Fraction(1, n)] * n)

    @classmethod
    def from_weights(cls, weights: Sequence[Fraction], prefix: str = "x") -> "ProbabilityVector":
        weights = [Fraction(w) for w in weights]
        total = sum(weights)
        if total <= 0:
            raise DistributionError("weights must have positive sum")
        return cls([f"{prefix}{i}" for i in range(1, len(weights) + 1)],
                   [w / total for w in weights])


def load_distribution(source) -> ProbabilityVector:
    """Parse the distribution JSON format.

    ``{"labels": [...], "probs": [...]}`` where each prob is either
    ``{"num": "...", "den": "..."}`` (integer strings) or a decimal string
    converted exactly.  Zero/negative probabilities and non-unit sums are
    rejected with an exact check.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = source
    try:
        labels = data["labels"]
        raw = data["probs"]
    except (KeyError, TypeError) as exc:
        raise DistributionError(f"distribution JSON needs labels/probs: {exc}")
    probs = []
    for item in raw:
        if isinstance(item, dict):
            try:
                probs.append(Fraction(int(item["num"]), int(item["den"])))
            except (KeyError, ValueError, ZeroDivisionError) as exc:
                raise DistributionError(f"bad rational entry {item!r}: {exc}")
        elif isinstance(item, str):
            try:
                probs.append(Fraction(item))
            except ValueError as exc:
                raise DistributionError(f"bad probability string {item!r}: {exc}")
        else:
            raise DistributionError(f"probability entries must be objects or strings, got {item!r}")
    return ProbabilityVector(labels, probs)


def entropy(mu: ProbabilityVector) -> float:
    """Shannon entropy in bits."""
    return sum(float(p) * math.log2(1 / p) for p in mu.probs)


def h2(mu: ProbabilityVector) -> float:
    """sum_i mu_i * log2(olog(1/mu_i)); finite because olog >= 4."""
    return sum(float(p) * math.log2(olog(1 / p)) for p in mu.probs)


def h3(mu: ProbabilityVector) -> float:
    """sum_i mu_i * log2(log2(olog(1/mu_i)))."""
    return sum(float(p) * math.log2(math.log2(olog(1 / p))) for p in mu.probs)


def lower_bound(mu: ProbabilityVector, k: int, clamped: bool = False) -> float:
    """Information-theoretic floor on the expected number of questions.

    E[log2(1/mu)] + k*E[log2 log2(1/mu)] - (k log2 k + k + 1), with the
    convention 0*log 0 = 0.  In raw mode the inner log log is undefined for a
    point mass (mu_i = 1) and raises; terms for mu_i > 1/2 are negative and
    kept.  In clamped mode each log log term and the final value are floored
    at zero.
    """
    if k < 0:
        raise DomainError("k must be >= 0")
    total = 0.0
    for p in mu.probs:
        log_term = math.log2(1 / p)
        if log_term <= 0.0:
            if clamped:
                loglog = 0.0
            else:
                raise DomainError(
                    "log2 log2(1/mu) undefined for a point mass in raw mode")
        else:
            loglog = math.log2(log_term) if log_term != 1.0 else 0.0
            if clamped:
                loglog = max(loglog, 0.0)
        total += float(p) * (log_term + k * loglog)
    penalty = (k * math.log2(k) if k > 0 else 0.0) + k + 1
    value = total - penalty
    return max(value, 0.0) if clamped else value


def binom_leq(n: int, k: int) -> int:
    """sum_{l=0}^{min(k,n)} C(n, l), exact."""
    return sum(math.comb(n, l) for l in range(min(k, n) + 1))


def kraft_sum(depths: Iterable[int]) -> Fraction:
    """sum 2^-d over leaf depths, exact; <= 1 for any binary tree's leaves."""
    total = Fraction(0)
    for d in depths:
        if d < 0:
            raise DomainError("depths must be >= 0")
        total += Fraction(1, 1 << d)
    return total


def kl_divergence(mu: ProbabilityVector, eta: ProbabilityVector) -> float:
    """D(mu || eta) in bits; requires eta to cover mu's support."""
    eta_by_label = dict(zip(eta.labels, eta.probs))
    total = 0.0
    for label, p in zip(mu.labels, mu.probs):
        q = eta_by_label.get(label)
        if q is None:
            raise DomainError(f"eta assigns no mass to label {label!r}")
        total += float(p) * math.log2(p / q)
    return total


# --- radius formulas ------------------------------------------------------
#
# The raw confidence-window radius is
#   r(d) = ceil( L + 4(k+1) * ( log2(L) + 4*log2((k+1)/ln 2) ) )
# with A = (d+1) ln^2(d+1) and L = log2(A) when A >= 17, else log2(A + 16).
# The small-d branch replaces a log2 whose argument can fall below 2 by olog,
# keeping the function total; a running maximum then enforces monotonicity
# (the exact-log and olog branches cross near d = 4) and a floor of 2k+1 is
# applied.  k = 0 evaluates with k := 1.

_R_TABLE: dict[int, list[int]] = {}


def _radius_r_raw(d: int, k: int) -> int:
    a = (d + 1.0) * math.log(d + 1.0) ** 2
    big = math.log2(a) if a >= OLOG_SHIFT + 1 else math.log2(a + OLOG_SHIFT)
    tail = math.log2(big) + 4.0 * math.log2((k + 1) / _LN2)
    return ceil_guarded(big + 4.0 * (k + 1) * tail)


def radius_r(d: int, k: int) -> int:
    """Confidence-window radius for the checkpointed search, monotone in d."""
    if d < 1:
        raise DomainError("d must be >= 1")
    kk = max(k, 1)
    table = _R_TABLE.setdefault(kk, [])
    floor = 2 * kk + 1
    while len(table) < d:
        nd = len(table) + 1
        prev = table[-1] if table else 0
        table.append(max(_radius_r_raw(nd, kk), floor, prev))
    return table[d - 1]


def radius_rprime(j: int, k: int) -> int:
    """Suspicion-window radius for the backtracking search.

    ceil( log2(B) + e + 4e(1 + ln(log2(B + e))) ) with
    B = 2k(j+1) ln^2(j+1); naturally monotone nondecreasing in j.
    """
    if j < 1:
        raise DomainError("j must be >= 1")
    kk = max(k, 1)
    b = 2.0 * kk * (j + 1.0) * math.log(j + 1.0) ** 2
    val = math.log2(b) + math.e + 4.0 * math.e * (1.0 + math.log(math.log2(b + math.e)))
    return ceil_guarded(val)


#: Recorded constant for r(d) - log2(d+1) <= C * (k log2 olog(d) + k log2 olog(k) + 1),
#: validated on d <= 1e5, k in {1,2,3}.
RADIUS_GROWTH_CONSTANT = 16.0

#: Recorded constant for r'(j) <= log2(j) + C * (olog(k) + log2(olog(j))),
#: validated on j <= 1e5, k in {1,2,3}.
RPRIME_GROWTH_CONSTANT = 8.0

#: Recorded constant making r'(j) <= a*olog(j) + a with a = C*olog(k),
#: validated on j <= 1e6; used by the depth ceiling of the backtracking search.
RPRIME_LINEAR_CONSTANT = 2.0


def convergence_partial_sum(k: int, dmax: int) -> float:
    """Partial sum of binom_leq(r(d),k) * (r(d)+2k+1) * 2^-r(d) for d <= dmax."""
    if k < 1:
        raise DomainError("k must be >= 1")
    total = 0.0
    for d in range(1, dmax + 1):
        r = radius_r(d, k)
        total += binom_leq(r, k) * (r + 2 * k + 1) * math.ldexp(1.0, -r)
    return total


@dataclass(frozen=True)
class BoundsReport:
    """All bound formulas evaluated for one distribution and lie budget.

    The upper-bound formulas carry the headline terms plus the additive
    slack disclosed in the field docstrings; they are diagnostics, not
    asserted guarantees.
    """

    entropy: float
    h2: float
    h3: float
    lower_bound_raw: float | None
    lower_bound: float
    ub_algo1: float
    ub_algo2: float
    kl_divergence: float | None = None


#: Multiplier applied to the O(.) terms of both upper-bound formulas.
UB_SLACK = 1.0


def bounds_report(mu: ProbabilityVector, k: int,
                  eta: ProbabilityVector | None = None) -> BoundsReport:
    h = entropy(mu)
    v2 = h2(mu)
    v3 = h3(mu)
    try:
        raw = lower_bound(mu, k, clamped=False)
    except DomainError:
        raw = None
    clamped = lower_bound(mu, k, clamped=True)
    klogk = k * math.log2(k) if k > 0 else 0.0
    # +3 from the leaf-depth ceiling, +2(3k+1) verification comparisons,
    # +1 for the convergent problematic-node series.
    ub1 = h + 3 + (k + 1) * v2 + UB_SLACK * (k * k * v3 + k * klogk) + 1
    ub2 = h + 3 + k * v2 + UB_SLACK * (k * v3 + klogk) + 2 * (3 * k + 1) + 1
    kl = kl_divergence(mu, eta) if eta is not None else None
    return BoundsReport(h, v2, v3, raw, clamped, ub1, ub2, kl)
