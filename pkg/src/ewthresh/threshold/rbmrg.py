"""Running-bitmap merge: a heap sweep over the runs of all inputs.

Wherever every input sits in a run, the output for the whole stretch follows
from the number of inputs in 1-fills, the number in 0-fills and, only when
that is not decisive, a small threshold problem over the dirty words.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from ..bitmap import DIRTY, FILL0, FILL1, CompressedBitmap, Segment, _SegmentWriter
from .query import ThresholdError, ThresholdQuery, edge_case

SCANCOUNT_MIN_THRESHOLD = 128

_MASK64 = (1 << 64) - 1


@dataclass
class RbmrgStats:
    pieces: int = 0
    dirty_words_inspected: int = 0
    branches: Counter = field(default_factory=Counter)
    # per-word branch names, only collected when a list is supplied
    trace: Optional[list] = None

    def record(self, branch: str, count: int) -> None:
        self.branches[branch] += count
        if self.trace is not None:
            self.trace.extend([branch] * count)


def _choose_branch(d: int, t: int, beta: Optional[int]) -> str:
    if t == 1:
        return "or"
    if t == d:
        return "and"
    if t >= SCANCOUNT_MIN_THRESHOLD:
        return "scancount"
    return "looped" if 2 * beta >= d * t else "scancount"


def _scalar_scancount(words: Sequence[int], t: int) -> int:
    counters = [0] * 64
    for w in words:
        while w:
            low = w & -w
            counters[low.bit_length() - 1] += 1
            w ^= low
    out = 0
    for b, c in enumerate(counters):
        if c >= t:
            out |= 1 << b
    return out


def _scalar_looped(words: Sequence[int], t: int) -> int:
    C = [0] * (t + 1)
    C[1] = words[0]
    for i, w in enumerate(words[1:], start=2):
        for j in range(min(t, i), 1, -1):
            C[j] |= C[j - 1] & w
        C[1] |= w
    return C[t]


def rbmrg_dirty_block(words: Sequence[int], t: int, trace: Optional[list] = None) -> int:
    """Bit b of the result is set iff at least ``t`` of ``words`` have bit b set."""
    words = [int(w) & _MASK64 for w in words]
    d = len(words)
    if not 1 <= t <= d:
        raise ThresholdError(f"residual threshold {t} outside [1, {d}]")
    beta = None
    if 1 < t < d and t < SCANCOUNT_MIN_THRESHOLD:
        beta = sum(w.bit_count() for w in words)
    branch = _choose_branch(d, t, beta)
    if trace is not None:
        trace.append(branch)
    if branch == "or":
        return reduce(lambda a, b: a | b, words)
    if branch == "and":
        return reduce(lambda a, b: a & b, words)
    if branch == "looped":
        return _scalar_looped(words, t)
    return _scalar_scancount(words, t)


def _columns_looped(stack: np.ndarray, t: int) -> np.ndarray:
    C = [None] + [np.zeros(stack.shape[1], dtype=np.uint64) for _ in range(t)]
    C[1] = stack[0].copy()
    for i in range(1, stack.shape[0]):
        w = stack[i]
        for j in range(min(t, i + 1), 1, -1):
            C[j] |= C[j - 1] & w
        C[1] |= w
    return C[t]


def _columns_scancount(stack: np.ndarray, t: int) -> np.ndarray:
    d, m = stack.shape
    bits = np.unpackbits(np.ascontiguousarray(stack).view(np.uint8), bitorder="little")
    counts = bits.reshape(d, m * 64).sum(axis=0)
    packed = np.packbits(counts >= t, bitorder="little")
    return packed.view(np.uint64)


def dirty_threshold(chunks: list, t: int, stats: RbmrgStats) -> np.ndarray:
    """Column-wise :func:`rbmrg_dirty_block` over aligned dirty arrays."""
    d = len(chunks)
    m = len(chunks[0])
    stats.dirty_words_inspected += d * m
    if m == 1:
        local: list = []
        w = rbmrg_dirty_block([int(c[0]) for c in chunks], t, local)
        stats.record(local[0], 1)
        return np.array([w], dtype=np.uint64)
    if t == 1:
        stats.record("or", m)
        return reduce(np.bitwise_or, chunks)
    if t == d:
        stats.record("and", m)
        return reduce(np.bitwise_and, chunks)
    stack = np.vstack(chunks)
    if t >= SCANCOUNT_MIN_THRESHOLD:
        stats.record("scancount", m)
        return _columns_scancount(stack, t)
    beta = np.bitwise_count(stack).sum(axis=0, dtype=np.int64)
    use_looped = 2 * beta >= d * t
    if stats.trace is not None:
        stats.trace.extend("looped" if u else "scancount" for u in use_looped.tolist())
    nl = int(use_looped.sum())
    stats.branches["looped"] += nl
    stats.branches["scancount"] += m - nl
    if nl == m:
        return _columns_looped(stack, t)
    if nl == 0:
        return _columns_scancount(stack, t)
    out = np.empty(m, dtype=np.uint64)
    out[use_looped] = _columns_looped(stack[:, use_looped], t)
    out[~use_looped] = _columns_scancount(stack[:, ~use_looped], t)
    return out


def rbmrg(q: ThresholdQuery, *, stats: Optional[RbmrgStats] = None) -> CompressedBitmap:
    edge = edge_case(q)
    if edge is not None:
        return edge
    if stats is None:
        stats = RbmrgStats()
    T, N = q.T, q.N
    r = q.r
    nw = (r + 63) // 64
    segs = []
    for b in q.inputs:
        s = list(b.segments)
        if b.n_words < nw:
            s.append(Segment(b.n_words, nw - b.n_words, FILL0, None))
        segs.append(s)
    out = _SegmentWriter()
    if nw == 0:
        return out.finish(r)

    ptr = [0] * N
    cur = [s[0] for s in segs]
    ones = sum(1 for c in cur if c.kind == FILL1)
    dirty_ids = {i for i, c in enumerate(cur) if c.kind == DIRTY}
    heap = [(c.start + c.length, i) for i, c in enumerate(cur)]
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    a0 = 0
    while a0 < nw:
        a = heap[0][0]
        length = a - a0
        stats.pieces += 1
        t = T - ones
        d = len(dirty_ids)
        if t <= 0:
            out.add_fill(FILL1, length)
        elif t > d:
            out.add_fill(FILL0, length)
        else:
            chunks = []
            for i in sorted(dirty_ids):
                c = cur[i]
                chunks.append(c.dirty[a0 - c.start:a - c.start])
            out.add_dirty(dirty_threshold(chunks, t, stats))
        a0 = a
        while heap and heap[0][0] == a:
            _, i = pop(heap)
            old = cur[i]
            if old.kind == FILL1:
                ones -= 1
            elif old.kind == DIRTY:
                dirty_ids.discard(i)
            p = ptr[i] + 1
            if p == len(segs[i]):
                continue
            ptr[i] = p
            new = segs[i][p]
            cur[i] = new
            if new.kind == FILL1:
                ones += 1
            elif new.kind == DIRTY:
                dirty_ids.add(i)
            push(heap, (new.start + new.length, i))
    return out.finish(r)
