"""Fast truthful-completion kernel for the checkpointed search.

Exhaustive exploration spends almost all of its time running the
deterministic suffix after the lie budget is spent.  For small universes the
whole game fits in flat integer tables: boundaries and point ranges for
every shallow node, per-element descent rays below the leaves, and the
radius schedule.  The JIT kernel advances the state machine on those tables;
a pure-Python twin with identical semantics serves as reference and
fallback.  Differential tests pin the two against the step-wise runner.
"""

from __future__ import annotations

import numpy as np

from .checkpoint import CheckpointSearch
from .placement import Placement

try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]

_M64 = (1 << 64) - 1

#: Largest shallow-table this kernel will build (node ids below 2^22).
MAX_TABLE_DEPTH = 21

_FLAG_LV_OFF_PATH = 1
_FLAG_FUEL = 2

_MAIN = 0
_MAJORITY = 1


@njit(cache=True)
def _pc64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def _pc_low(w0, w1, w2, r):
    if r <= 0:
        return np.int64(0)
    if r < 64:
        return _pc64(w0 & ((np.uint64(1) << np.uint64(r)) - np.uint64(1)))
    total = _pc64(w0)
    if r == 64:
        return total
    if r < 128:
        return total + _pc64(w1 & ((np.uint64(1) << np.uint64(r - 64)) - np.uint64(1)))
    total += _pc64(w1)
    if r == 128:
        return total
    return total + _pc64(w2 & ((np.uint64(1) << np.uint64(r - 128)) - np.uint64(1)))


@njit(cache=True)
def _getbit(w0, w1, w2, j):
    if j < 64:
        return np.int64((w0 >> np.uint64(j)) & np.uint64(1))
    if j < 128:
        return np.int64((w1 >> np.uint64(j - 64)) & np.uint64(1))
    return np.int64((w2 >> np.uint64(j - 128)) & np.uint64(1))


@njit(cache=True)
def _complete_nb(btab, glotab, ghitab, ltab, ray, rtab, true_nodes,
                 x, k, phase, m_asked, m_ones,
                 depth, lv_node, lv_depth, glo, ghi, node,
                 w0, w1, w2, fuel):
    questions = np.int64(0)
    maxdep = depth
    flags = np.int64(0)
    table_size = btab.shape[0]
    true_len = true_nodes.shape[0]
    ray_depth = ray.shape[1]
    trig = lv_depth + 1 + rtab[lv_depth + 1]
    while True:
        fuel -= 1
        if fuel <= 0:
            flags |= _FLAG_FUEL
            return questions, np.int64(-1), maxdep, flags
        if phase == _MAJORITY:
            t = np.int64(1) if x >= btab[lv_node] else np.int64(0)
            remaining = 2 * k + 1 - m_asked
            questions += remaining
            m_ones += t * remaining
            mbit = np.int64(1) if m_ones >= k + 1 else np.int64(0)
            lv_node = (lv_node << 1) | mbit
            lv_depth += 1
            if lv_depth >= true_len or lv_node != true_nodes[lv_depth]:
                flags |= _FLAG_LV_OFF_PATH
                return questions, np.int64(-1), maxdep, flags
            if ltab[lv_node] != 0:
                return questions, ltab[lv_node], maxdep, flags
            node = lv_node
            depth = lv_depth
            glo = glotab[lv_node]
            ghi = ghitab[lv_node]
            w0 = np.uint64(0)
            w1 = np.uint64(0)
            w2 = np.uint64(0)
            phase = _MAIN
            trig = lv_depth + 1 + rtab[lv_depth + 1]
            continue
        # boundary of the current node
        if node >= 0:
            b = btab[node]
        elif ghi - glo == 1:
            if depth >= ray_depth:
                flags |= _FLAG_FUEL
                return questions, np.int64(-1), maxdep, flags
            b = glo if ray[glo - 1, depth] != 0 else glo + 1
        else:
            b = glo
        t = np.int64(1) if x >= b else np.int64(0)
        questions += 1
        if t:
            glo = b
        else:
            ghi = b
        depth += 1
        if depth > maxdep:
            maxdep = depth
        if node >= 0:
            nn = (node << 1) | t
            node = nn if nn < table_size else np.int64(-1)
        # shift the answer into the 192-bit window
        c0 = w0 >> np.uint64(63)
        c1 = w1 >> np.uint64(63)
        w0 = ((w0 << np.uint64(1)) | np.uint64(t)) & np.uint64(_M64)
        w1 = ((w1 << np.uint64(1)) | c0) & np.uint64(_M64)
        w2 = ((w2 << np.uint64(1)) | c1) & np.uint64(_M64)
        if depth == trig:
            d = lv_depth + 1
            r = trig - d
            ones = _pc_low(w0, w1, w2, r)
            cand = _getbit(w0, w1, w2, r)
            matching = ones if cand else r - ones
            if matching <= k - 1:
                phase = _MAJORITY
                m_asked = np.int64(0)
                m_ones = np.int64(0)
                continue
            lv_node = (lv_node << 1) | cand
            lv_depth = d
            if lv_depth >= true_len or lv_node != true_nodes[lv_depth]:
                flags |= _FLAG_LV_OFF_PATH
                return questions, np.int64(-1), maxdep, flags
            if ltab[lv_node] != 0:
                return questions, ltab[lv_node], maxdep, flags
            trig = lv_depth + 1 + rtab[lv_depth + 1]


def _complete_py(btab, glotab, ghitab, ltab, ray, rtab, true_nodes,
                 x, k, phase, m_asked, m_ones,
                 depth, lv_node, lv_depth, glo, ghi, node,
                 w0, w1, w2, fuel):
    """Pure-Python twin of the JIT kernel (identical table semantics)."""
    x, k, phase, m_asked, m_ones = int(x), int(k), int(phase), int(m_asked), int(m_ones)
    depth, lv_node, lv_depth = int(depth), int(lv_node), int(lv_depth)
    glo, ghi, node, fuel = int(glo), int(ghi), int(node), int(fuel)
    questions = 0
    maxdep = depth
    flags = 0
    table_size = len(btab)
    true_len = len(true_nodes)
    ray_depth = ray.shape[1]
    window = (int(w2) << 128) | (int(w1) << 64) | int(w0)
    trig = lv_depth + 1 + int(rtab[lv_depth + 1])
    while True:
        fuel -= 1
        if fuel <= 0:
            return questions, -1, maxdep, flags | _FLAG_FUEL
        if phase == _MAJORITY:
            t = 1 if x >= btab[lv_node] else 0
            remaining = 2 * k + 1 - m_asked
            questions += remaining
            m_ones += t * remaining
            mbit = 1 if m_ones >= k + 1 else 0
            lv_node = (lv_node << 1) | mbit
            lv_depth += 1
            if lv_depth >= true_len or lv_node != true_nodes[lv_depth]:
                return questions, -1, maxdep, flags | _FLAG_LV_OFF_PATH
            if ltab[lv_node] != 0:
                return questions, int(ltab[lv_node]), maxdep, flags
            node = lv_node
            depth = lv_depth
            glo = int(glotab[lv_node])
            ghi = int(ghitab[lv_node])
            window = 0
            phase = _MAIN
            trig = lv_depth + 1 + int(rtab[lv_depth + 1])
            continue
        if node >= 0:
            b = int(btab[node])
        elif ghi - glo == 1:
            if depth >= ray_depth:
                return questions, -1, maxdep, flags | _FLAG_FUEL
            b = glo if ray[glo - 1, depth] else glo + 1
        else:
            b = glo
        t = 1 if x >= b else 0
        questions += 1
        if t:
            glo = b
        else:
            ghi = b
        depth += 1
        if depth > maxdep:
            maxdep = depth
        if node >= 0:
            nn = (node << 1) | t
            node = nn if nn < table_size else -1
        window = (window << 1) | t
        if depth == trig:
            d = lv_depth + 1
            r = trig - d
            low = window & ((1 << r) - 1)
            ones = low.bit_count()
            cand = (window >> r) & 1
            matching = ones if cand else r - ones
            if matching <= k - 1:
                phase = _MAJORITY
                m_asked = 0
                m_ones = 0
                continue
            lv_node = (lv_node << 1) | cand
            lv_depth = d
            if lv_depth >= true_len or lv_node != true_nodes[lv_depth]:
                return questions, -1, maxdep, flags | _FLAG_LV_OFF_PATH
            if ltab[lv_node] != 0:
                return questions, int(ltab[lv_node]), maxdep, flags
            trig = lv_depth + 1 + int(rtab[lv_depth + 1])


class CheckpointTables:
    """Flat tables for one placement + lie budget, shared across elements."""

    def __init__(self, placement: Placement, k: int, radius=None):
        from .numerics import radius_r

        self.pl = placement
        self.k = k
        radius = radius if radius is not None else (lambda d: radius_r(d, k))
        dmax = placement.max_leaf_depth()
        if dmax > MAX_TABLE_DEPTH:
            raise ValueError("universe too deep for the completion tables")
        size = 1 << (dmax + 1)
        self.btab = np.zeros(size, dtype=np.int64)
        self.glotab = np.zeros(size, dtype=np.int64)
        self.ghitab = np.zeros(size, dtype=np.int64)
        self.ltab = np.zeros(size, dtype=np.int64)
        infos = {1: placement.node_info(1)}
        for v in range(1, size):
            if v == 1:
                info = infos[1]
            else:
                info = placement.child_info(v, v & 1, infos[v >> 1])
                infos[v] = info
            self.btab[v] = info[0]
            self.glotab[v] = info[1]
            self.ghitab[v] = info[2]
        for node, label in placement.leaf_labels().items():
            self.ltab[node] = label
        self.rtab = np.zeros(dmax + 3, dtype=np.int64)
        for d in range(1, dmax + 3):
            self.rtab[d] = radius(d)
        max_r = int(self.rtab.max())
        if max_r > 191:
            raise ValueError("radius exceeds the 192-bit answer window")
        self.ray_depth = dmax + max_r + 4
        n = placement.n
        self.ray = np.zeros((n, self.ray_depth), dtype=np.int64)
        for i in range(1, n + 1):
            for d in range(self.ray_depth):
                self.ray[i - 1, d] = placement.ray_bit(i, d)
        self.true_nodes = {}
        for i in range(1, n + 1):
            leaf = placement.leaf_node(i)
            depth = leaf.bit_length() - 1
            self.true_nodes[i] = np.array(
                [leaf >> (depth - d) for d in range(depth + 1)], dtype=np.int64)

    def complete(self, st: CheckpointSearch, x: int, *, use_jit: bool = True):
        """Run ``st`` to completion with truthful answers for element x.

        Returns (extra_questions, output_index, flags); flags != 0 marks a
        violated checkpoint-path invariant or an exhausted fuel guard.
        Mutates ``st`` only through this call's local copy of its scalars;
        the caller must not reuse ``st`` afterwards.
        """
        cur = st.cur
        window = cur & ((1 << 192) - 1)
        node = cur if cur < len(self.btab) else -1
        fn = _complete_nb if (use_jit and HAVE_NUMBA) else _complete_py
        dq, out, maxd, flags = fn(
            self.btab, self.glotab, self.ghitab, self.ltab, self.ray,
            self.rtab, self.true_nodes[x],
            np.int64(x), np.int64(self.k), np.int64(st.phase),
            np.int64(st.m_asked), np.int64(st.m_ones),
            np.int64(st.depth), np.int64(st.lv_node), np.int64(st.lv_depth),
            np.int64(st.cur_info[1]), np.int64(st.cur_info[2]),
            np.int64(node),
            np.uint64(window & _M64), np.uint64((window >> 64) & _M64),
            np.uint64((window >> 128) & _M64),
            np.int64(10_000_000))
        return int(dq), int(out), int(flags), int(maxd)
