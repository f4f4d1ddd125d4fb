"""Heap-merge algorithms with pruning: MgOpt and DSk.

Both set the largest inputs aside and look candidates up in them with
forward-only cursors, which skip whole runs of the compressed bitmap.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from typing import Optional

import numpy as np

from ..bitmap import DIRTY, FILL1, WORD_BITS, CompressedBitmap
from .query import ThresholdError, ThresholdQuery, by_cardinality, edge_case

DEFAULT_MU = 0.04

_MASK64 = (1 << 64) - 1


class CursorOrderError(AssertionError):
    """A forward-only cursor was asked to move backward."""


class ForwardCursor:
    """Forward-only access to the set bits of a compressed bitmap."""

    __slots__ = ("_segs", "_ends", "_i", "last", "log")

    def __init__(self, bm: CompressedBitmap, log: Optional[list] = None):
        self._segs = bm.segments
        self._ends = [s.start + s.length for s in self._segs]
        self._i = 0
        self.last = -1
        self.log = log

    def _check(self, pos: int) -> None:
        if pos < self.last:
            raise CursorOrderError(f"cursor moved back from {self.last} to {pos}")
        self.last = pos
        if self.log is not None:
            self.log.append(pos)

    def contains(self, pos: int) -> bool:
        self._check(pos)
        word = pos >> 6
        i = bisect_right(self._ends, word, self._i)
        self._i = i
        if i == len(self._segs):
            return False
        s = self._segs[i]
        if s.kind == DIRTY:
            return bool((int(s.dirty[word - s.start]) >> (pos & 63)) & 1)
        return s.kind == FILL1

    def seek(self, target: int) -> Optional[int]:
        """Smallest set position >= target, or None when exhausted."""
        self._check(target)
        word = target >> 6
        segs = self._segs
        i = bisect_right(self._ends, word, self._i)
        n = len(segs)
        while i < n:
            s = segs[i]
            if s.kind == FILL1:
                self._i = i
                return max(target, s.start * WORD_BITS)
            if s.kind == DIRTY:
                k = word - s.start
                if k >= 0:
                    w = int(s.dirty[k]) & (_MASK64 << (target & 63)) & _MASK64
                    if w:
                        self._i = i
                        return (s.start + k) * WORD_BITS + ((w & -w).bit_length() - 1)
                    k += 1
                else:
                    k = 0
                if k < s.length:
                    # dirty words are never zero
                    w = int(s.dirty[k])
                    self._i = i
                    return (s.start + k) * WORD_BITS + ((w & -w).bit_length() - 1)
            i += 1
        self._i = n
        return None


def _probe_large(cursors: list, x: int, need: int) -> bool:
    remaining = len(cursors)
    for c in cursors:
        if c.contains(x):
            need -= 1
            if need <= 0:
                return True
        remaining -= 1
        if remaining < need:
            return False
    return need <= 0


def mg_opt(q: ThresholdQuery, *, probe_logs: Optional[list] = None) -> CompressedBitmap:
    """Merge the N-T+1 smallest inputs, probe the T-1 largest."""
    edge = edge_case(q)
    if edge is not None:
        return edge
    T, N = q.T, q.N
    order = by_cardinality(q.inputs)
    small = order[: N - T + 1]
    large = order[N - T + 1:][::-1]  # probe the biggest first
    cursors = []
    for i in large:
        log = None
        if probe_logs is not None:
            log = []
            probe_logs.append(log)
        cursors.append(ForwardCursor(q.inputs[i], log))

    lists = [q.inputs[i].positions().tolist() for i in small]
    ptr = [1] * len(lists)
    heap = [(lst[0], k) for k, lst in enumerate(lists) if lst]
    heapq.heapify(heap)
    out = []
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        x = heap[0][0]
        t = 0
        while heap and heap[0][0] == x:
            _, k = pop(heap)
            t += 1
            p = ptr[k]
            lst = lists[k]
            if p < len(lst):
                push(heap, (lst[p], k))
                ptr[k] = p + 1
        if t >= T or _probe_large(cursors, x, T - t):
            out.append(x)
    return CompressedBitmap.from_positions(out, q.r)


def set_aside_count(T: int, mu: float, M: int) -> int:
    """Number of large inputs DSk sets aside: round(T / (mu log2 M + 1))."""
    if mu <= 0:
        raise ThresholdError(f"mu must be positive, got {mu}")
    logm = math.log2(M) if M >= 1 else 0.0
    L = int(math.floor(T / (mu * logm + 1) + 0.5))
    return max(1, min(L, T - 1))


def mu_for_set_aside(T: int, L: int, M: int) -> float:
    """Inverse of :func:`set_aside_count` (before rounding)."""
    return (T / L - 1) / math.log2(M)


def d_sk(
    q: ThresholdQuery,
    mu: float = DEFAULT_MU,
    *,
    probe_logs: Optional[list] = None,
    stats: Optional[dict] = None,
) -> CompressedBitmap:
    """MergeSkip on the small inputs combined with MgOpt-style probing."""
    if mu <= 0:
        raise ThresholdError(f"mu must be positive, got {mu}")
    edge = edge_case(q)
    if edge is not None:
        return edge
    T, N = q.T, q.N
    order = by_cardinality(q.inputs)
    M = q.inputs[order[-1]].cardinality()
    if M == 0:
        return CompressedBitmap.empty(q.r)
    L = set_aside_count(T, mu, M)
    if stats is not None:
        stats["L"] = L
        stats.setdefault("skipped_jumps", 0)
    small = order[: N - L]
    large = order[N - L:][::-1]
    cursors = []
    for i in large:
        log = None
        if probe_logs is not None:
            log = []
            probe_logs.append(log)
        cursors.append(ForwardCursor(q.inputs[i], log))

    # threshold the small inputs must reach on their own
    ts = T - L
    heads = [ForwardCursor(q.inputs[i]) for i in small]
    heap = []
    for k, c in enumerate(heads):
        v = c.seek(0)
        if v is not None:
            heap.append((v, k))
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    out = []
    while heap:
        x = heap[0][0]
        popped = []
        while heap and heap[0][0] == x:
            popped.append(pop(heap)[1])
        n = len(popped)
        if n >= ts:
            if n >= T or _probe_large(cursors, x, T - n):
                out.append(x)
            nxt = x + 1
        else:
            # drop enough extra heads that nothing below the new top can reach ts
            for _ in range(ts - 1 - n):
                if not heap:
                    break
                popped.append(pop(heap)[1])
            if not heap:
                break
            nxt = heap[0][0]
            if stats is not None:
                stats["skipped_jumps"] += 1
        for k in popped:
            v = heads[k].seek(nxt)
            if v is not None:
                push(heap, (v, k))
    return CompressedBitmap.from_positions(out, q.r)
