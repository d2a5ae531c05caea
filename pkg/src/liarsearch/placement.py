"""Randomized interval placement and the bisection-tree geometry.

Element i is mapped to the point p_i = c_i + theta where
c_i = (1/2) * sum_{j<i} mu_j + (1/4) * mu_i and theta is a lazily generated
dyadic drawn from [0, 1/2).  Searching is bisection of [0, 1): tree nodes are
addressed heap-style by an integer id (root 1, child = 2*v + bit, bit 1 =
right half), so a node's path bits are its binary digits below the leading
one.  All point/midpoint comparisons are exact; theta bits are produced on
demand until a comparison is decided.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

from .errors import DomainError, ThetaBitsExhausted
from .numerics import Dyadic, ProbabilityVector

#: Hard cap on generated theta bits; exceeding it aborts the comparison.
THETA_BIT_CAP = 4096

_HALF = Fraction(1, 2)


class ThetaStream:
    """Append-only bit stream defining theta = sum_i bits[i] * 2^-(i+2).

    In seeded mode bit i is a pure function of (seed, i): bits come from
    SHA-256 in counter mode, so clones extend identically and replay is
    exact.  A fixed stream (exact dyadic theta) is available for tests and
    debugging; it carries no uniformity guarantees.
    """

    __slots__ = ("seed", "cap", "_bits", "_fixed")

    def __init__(self, seed: int | None = None, *, bits=None, cap: int = THETA_BIT_CAP):
        if (seed is None) == (bits is None):
            raise DomainError("provide exactly one of seed or bits")
        self.seed = seed
        self.cap = cap
        self._fixed = bits is not None
        self._bits: list[int] = list(bits) if bits is not None else []
        if self._fixed and any(b not in (0, 1) for b in self._bits):
            raise DomainError("bits must be 0/1")

    @classmethod
    def fixed(cls, value: Fraction, cap: int = THETA_BIT_CAP) -> "ThetaStream":
        """Exact dyadic theta in [0, 1/2); for tests and debug seeds."""
        value = Fraction(value)
        if not 0 <= value < _HALF:
            raise DomainError("theta must lie in [0, 1/2)")
        scaled = 2 * value
        bits = []
        while scaled:
            scaled *= 2
            bit, scaled = divmod(scaled, 1)
            bits.append(int(bit))
            if len(bits) > cap:
                raise DomainError("theta is not a dyadic of manageable precision")
        return cls(bits=bits, cap=cap)

    def bit(self, i: int) -> int:
        if i >= self.cap and not self._fixed:
            raise ThetaBitsExhausted(
                f"comparison undecided after {self.cap} theta bits")
        if self._fixed:
            return self._bits[i] if i < len(self._bits) else 0
        while len(self._bits) <= i:
            block = len(self._bits) // 256
            digest = hashlib.sha256(
                self.seed.to_bytes(8, "big", signed=False)
                + block.to_bytes(8, "big")).digest()
            self._bits.extend(
                (byte >> (7 - j)) & 1 for byte in digest for j in range(8))
        return self._bits[i]

    @property
    def generated(self) -> int:
        return len(self._bits)

    def value_if_exact(self) -> Fraction:
        """The exact theta of a fixed stream."""
        if not self._fixed:
            raise DomainError("theta value is only exact for fixed streams")
        return sum((Fraction(b, 1 << (i + 2)) for i, b in enumerate(self._bits)),
                   Fraction(0))

    def prefix(self, t: int) -> Dyadic:
        """Dyadic lower bound after t bits; theta lies within 2^-(t+1) above it."""
        m = 0
        for i in range(t):
            m = (m << 1) | self.bit(i)
        return Dyadic.of(m, t + 1)

    def clone(self) -> "ThetaStream":
        if self._fixed:
            return ThetaStream(bits=self._bits, cap=self.cap)
        dup = ThetaStream(seed=self.seed, cap=self.cap)
        dup._bits = list(self._bits)
        return dup


@dataclass(frozen=True)
class NodePath:
    """A node of the bisection tree, identified by its bit string from the root.

    Bit 1 selects the right half.  Depth d and bit value a identify the
    interval [a * 2^-d, (a+1) * 2^-d).
    """

    bits: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.bits)

    def child(self, bit: int) -> "NodePath":
        return NodePath(self.bits + (bit & 1,))

    def parent(self) -> "NodePath":
        if not self.bits:
            raise DomainError("root has no parent")
        return NodePath(self.bits[:-1])

    def to_int(self) -> int:
        return reduce(lambda v, b: (v << 1) | b, self.bits, 1)

    @classmethod
    def from_int(cls, v: int) -> "NodePath":
        if v < 1:
            raise DomainError("node ids are >= 1")
        d = v.bit_length() - 1
        return cls(tuple((v >> (d - 1 - i)) & 1 for i in range(d)))

    def interval(self) -> tuple[Fraction, Fraction]:
        d = self.depth
        a = self.to_int() - (1 << d)
        return Fraction(a, 1 << d), Fraction(a + 1, 1 << d)

    def midpoint(self) -> Dyadic:
        d = self.depth
        a = self.to_int() - (1 << d)
        return Dyadic.of(2 * a + 1, d + 1)


@dataclass(frozen=True)
class ComparisonQuery:
    """The question "is x strictly before element boundary_index?".

    boundary_index ranges over [1, n+1]; n+1 is the vacuous always-true
    question.  Answer bit 0 encodes "yes" (left half of the live interval),
    bit 1 encodes "no" (right half).
    """

    boundary_index: int


AT_OR_ABOVE = True
BELOW = False


class Placement:
    """The realized points p_i = c_i + theta with exact lazy comparisons.

    One simulation owns a Placement; concurrent trials use distinct
    instances.  Cloning snapshots the generated theta bits, and clones
    extend identically, which exhaustive exploration relies on.
    """

    def __init__(self, mu: ProbabilityVector, theta: ThetaStream):
        self.mu = mu
        self.theta = theta
        n = len(mu)
        bases = []
        acc = Fraction(0)
        for p in mu.probs:
            bases.append(acc / 2 + p / 4)
            acc += p
        self.bases = tuple(bases)  # c_i for i = 1..n at index i-1
        # node id -> (boundary, glo, ghi): boundary = first index with
        # p_i >= midpoint, [glo, ghi) = indices of points inside the interval.
        # Only nodes holding >= 2 points are cached; single-point nodes are
        # served from the per-element ray bits below, empty nodes are O(1).
        self._info: dict[int, tuple[int, int, int]] = {}
        self._info[1] = (self._first_ge_mid(1, 1, n + 1), 1, n + 1)
        # ray bits: _ray[i-1] = descent directions of p_i from the root,
        # extended lazily; _ray_node[i-1] = deepest node reached so far
        self._ray: list[list[int]] = [[] for _ in range(n)]
        self._ray_node: list[int] = [1] * n
        self._leaves: list[int] | None = None
        self._leaf_label: dict[int, int] | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_seed(cls, mu: ProbabilityVector, seed: int) -> "Placement":
        return cls(mu, ThetaStream(seed=seed & 0xFFFFFFFFFFFFFFFF))

    @classmethod
    def from_theta(cls, mu: ProbabilityVector, theta: Fraction) -> "Placement":
        return cls(mu, ThetaStream.fixed(theta))

    @property
    def n(self) -> int:
        return len(self.mu)

    def base(self, i: int) -> Fraction:
        return self.bases[i - 1]

    def point_value(self, i: int) -> Fraction:
        """Exact p_i; only available for fixed theta streams."""
        return self.base(i) + self.theta.value_if_exact()

    def clone(self) -> "Placement":
        dup = Placement.__new__(Placement)
        dup.mu = self.mu
        dup.theta = self.theta.clone()
        dup.bases = self.bases
        dup._info = dict(self._info)
        dup._ray = [list(r) for r in self._ray]
        dup._ray_node = list(self._ray_node)
        dup._leaves = self._leaves
        dup._leaf_label = self._leaf_label
        return dup

    # -- exact comparisons -------------------------------------------------

    def point_at_or_above(self, i: int, value: Fraction) -> bool:
        """Exact p_i >= value, extending theta bits until decided."""
        g = value - self.base(i)
        if g <= 0:
            return AT_OR_ABOVE
        num = g.numerator
        den = g.denominator
        if 2 * num >= den:
            return BELOW
        # after t bits theta lies in [m, m+1] / 2^(t+1); compare g against
        # that interval in integers: lhs = num * 2^(t+1), mden = m * den
        bit = self.theta.bit
        lhs = 2 * num
        mden = 0
        t = 0
        while True:
            if lhs <= mden:
                return AT_OR_ABOVE
            if lhs > mden + den:
                return BELOW
            mden = 2 * mden + (den if bit(t) else 0)
            lhs *= 2
            t += 1

    def first_at_or_above(self, value: Fraction, lo: int = 1, hi: int | None = None) -> int:
        """Smallest index i in [lo, hi] with p_i >= value; hi+1 if none.

        O(log n) point comparisons thanks to p_1 < ... < p_n.
        """
        if hi is None:
            hi = self.n + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.point_at_or_above(mid, value):
                hi = mid
            else:
                lo = mid + 1
        return lo

    # -- node bookkeeping ---------------------------------------------------

    def node_info(self, v: int) -> tuple[int, int, int]:
        """(boundary, glo, ghi) for node id v; cached for occupied nodes."""
        info = self._info.get(v)
        if info is not None:
            return info
        # find the nearest cached ancestor, then rebuild downward
        stack = []
        u = v
        while u not in self._info:
            stack.append(u & 1)
            u >>= 1
        info = self._info[u]
        while stack:
            bit = stack.pop()
            u = (u << 1) | bit
            info = self.child_info(u, bit, info)
        return info

    def child_info(self, child: int, bit: int, parent_info: tuple[int, int, int]):
        """Info for a child node given its parent's; caches multi-point nodes."""
        b, glo, ghi = parent_info
        if bit:
            cglo, cghi = b, ghi
        else:
            cglo, cghi = glo, b
        width = cghi - cglo
        if width == 0:
            return (cglo, cglo, cghi)  # empty interval: vacuous boundary
        if width == 1:
            # the interval is a prefix of p_cglo's descent; its midpoint
            # comparison is that point's ray bit at this depth
            rb = self.ray_bit(cglo, child.bit_length() - 1)
            return (cglo if rb else cglo + 1, cglo, cghi)
        cached = self._info.get(child)
        if cached is not None:
            return cached
        info = (self._first_ge_mid(child, cglo, cghi), cglo, cghi)
        self._info[child] = info
        return info

    def _first_ge_mid(self, v: int, glo: int, ghi: int) -> int:
        d = v.bit_length() - 1
        a = v - (1 << d)
        mid = Fraction(2 * a + 1, 1 << (d + 1))
        return self.first_at_or_above(mid, glo, ghi)

    def ray_bit(self, i: int, depth: int) -> int:
        """Descent direction of p_i from its depth-``depth`` ancestor."""
        ray = self._ray[i - 1]
        while len(ray) <= depth:
            v = self._ray_node[i - 1]
            d = v.bit_length() - 1
            a = v - (1 << d)
            mid = Fraction(2 * a + 1, 1 << (d + 1))
            bit = 1 if self.point_at_or_above(i, mid) else 0
            ray.append(bit)
            self._ray_node[i - 1] = (v << 1) | bit
        return ray[depth]

    # -- leaves of the finite tree ------------------------------------------

    def _build_leaves(self) -> None:
        if self._leaves is not None:
            return
        leaves = []
        labels = {}
        for i in range(1, self.n + 1):
            v = 1
            info = self.node_info(1)
            while info[2] - info[1] > 1:
                bit = 1 if i >= info[0] else 0
                v = (v << 1) | bit
                info = self.child_info(v, bit, info)
            leaves.append(v)
            labels[v] = i
        self._leaves = leaves
        self._leaf_label = labels

    def leaf_node(self, i: int) -> int:
        self._build_leaves()
        return self._leaves[i - 1]

    def leaf_labels(self) -> dict[int, int]:
        self._build_leaves()
        return self._leaf_label

    def max_leaf_depth(self) -> int:
        self._build_leaves()
        return max(v.bit_length() - 1 for v in self._leaves)

    def leaf_depths(self) -> list[int]:
        self._build_leaves()
        return [v.bit_length() - 1 for v in self._leaves]

    # -- public path-level API ------------------------------------------------

    def point_vs_midpoint(self, i: int, path: NodePath) -> bool:
        """True when p_i lies at or above the midpoint of path's interval."""
        if not 1 <= i <= self.n:
            raise DomainError(f"element index {i} out of range")
        return self.point_at_or_above(i, path.midpoint().as_fraction())

    def to_comparison(self, path: NodePath) -> ComparisonQuery:
        """Translate an interval midpoint into a comparison question."""
        return ComparisonQuery(self.node_info(path.to_int())[0])

    def truthful_bit(self, i: int, path: NodePath) -> int:
        """1 iff p_i >= midpoint(path); requires p_i inside path's interval."""
        b, glo, ghi = self.node_info(path.to_int())
        if not glo <= i < ghi:
            raise DomainError(
                f"element {i} does not lie inside the interval of {path}")
        return 1 if i >= b else 0

    def finite_leaf(self, i: int) -> tuple[NodePath, int]:
        """Shallowest path isolating p_i, and its depth."""
        if not 1 <= i <= self.n:
            raise DomainError(f"element index {i} out of range")
        v = self.leaf_node(i)
        return NodePath.from_int(v), v.bit_length() - 1

    def is_finite_leaf(self, path: NodePath) -> bool:
        """True exactly at isolation nodes of the finite search tree."""
        v = path.to_int()
        b, glo, ghi = self.node_info(v)
        if ghi - glo == 0:
            raise DomainError(f"no point inside the interval of {path}")
        if ghi - glo > 1:
            return False
        return v == self.leaf_node(glo)


def build_placement(mu: ProbabilityVector, seed: int) -> Placement:
    """Standard constructor: theta drawn from the seeded bit stream."""
    return Placement.from_seed(mu, seed)
