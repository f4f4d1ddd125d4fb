"""Counter-array algorithms: ScanCount and its symmetric-function form."""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

from ..bitmap import DIRTY, FILL1, WORD_BITS, CompressedBitmap
from .query import ThresholdQuery, edge_case


def counter_dtype(N: int) -> type:
    """Narrowest counter that holds N without overflow."""
    if N < 128:
        return np.uint8
    if N < 1 << 15:
        return np.uint16
    return np.uint32


# Counters are filled one cache-sized block at a time so the pass stays in L2.
BLOCK_WORDS = 1 << 12


def _segment_bounds(bm: CompressedBitmap) -> tuple:
    segs = [s for s in bm.segments if s.kind in (FILL1, DIRTY)]
    starts = np.array([s.start for s in segs], dtype=np.int64)
    ends = np.array([s.start + s.length for s in segs], dtype=np.int64)
    return segs, starts, ends


def count_occurrences(
    inputs: Sequence[CompressedBitmap], r: int, out: np.ndarray | None = None
) -> np.ndarray:
    """Fill ``r`` counters, one count per input containing each position.

    ``out``, when given, must be a zeroed array of length ``r`` with a wide
    enough dtype; it is filled and returned.
    """
    counters = np.zeros(r, dtype=counter_dtype(len(inputs))) if out is None else out
    prepared = [_segment_bounds(bm) for bm in inputs]
    n_words = -(-r // WORD_BITS)
    for w_lo in range(0, n_words, BLOCK_WORDS):
        w_hi = min(w_lo + BLOCK_WORDS, n_words)
        for segs, starts, ends in prepared:
            i0 = int(np.searchsorted(ends, w_lo, side="right"))
            i1 = int(np.searchsorted(starts, w_hi, side="left"))
            for s in segs[i0:i1]:
                a, b = max(s.start, w_lo), min(s.start + s.length, w_hi)
                if s.kind == FILL1:
                    counters[a * WORD_BITS:b * WORD_BITS] += 1
                else:
                    words = s.dirty[a - s.start:b - s.start]
                    idx = np.flatnonzero(np.unpackbits(words.view(np.uint8), bitorder="little"))
                    idx += a * WORD_BITS
                    counters[idx] += 1
    return counters


def _from_mask(mask: np.ndarray) -> CompressedBitmap:
    r = len(mask)
    packed = np.packbits(mask, bitorder="little")
    pad = (-len(packed)) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    return CompressedBitmap.from_uncompressed(packed.view(np.uint64), r)


_scratch = threading.local()


def _scratch_arrays(r: int, dtype: type) -> tuple:
    """Zeroed counters and a mask buffer, reused across calls on this thread.

    Reuse keeps large per-call allocations (and their page faults) out of
    the counting pass.
    """
    key = np.dtype(dtype).name
    bufs = getattr(_scratch, "bufs", None)
    if bufs is None:
        bufs = _scratch.bufs = {}
    counters = bufs.get(key)
    if counters is None or len(counters) < r:
        counters = bufs[key] = np.zeros(r, dtype=dtype)
    mask = bufs.get("mask")
    if mask is None or len(mask) < r:
        mask = bufs["mask"] = np.zeros(r, dtype=bool)
    counters = counters[:r]
    counters.fill(0)
    return counters, mask[:r]


def scan_count(q: ThresholdQuery) -> CompressedBitmap:
    edge = edge_case(q)
    if edge is not None:
        return edge
    counters, mask = _scratch_arrays(q.r, counter_dtype(q.N))
    count_occurrences(q.inputs, q.r, out=counters)
    return _from_mask(np.greater_equal(counters, q.T, out=mask))


def scan_count_symmetric(
    inputs: Sequence[CompressedBitmap], predicate: Callable[[int], bool]
) -> CompressedBitmap:
    """Set position p iff ``predicate(count at p)``; predicate covers 0..N."""
    N = len(inputs)
    r = max(b.size_in_bits for b in inputs)
    table = np.array([bool(predicate(c)) for c in range(N + 1)])
    counters = count_occurrences(inputs, r)
    return _from_mask(table[counters])


def opt_threshold_scancount(inputs: Sequence[CompressedBitmap]) -> tuple:
    r = max(b.size_in_bits for b in inputs)
    counters = count_occurrences(inputs, r)
    top = int(counters.max()) if r else 0
    return top, _from_mask(counters == top)
