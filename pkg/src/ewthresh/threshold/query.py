"""Threshold query value type, the brute-force oracle and shared helpers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..bitmap import CompressedBitmap, wide_and, wide_or


class ThresholdError(ValueError):
    """Invalid query parameters."""


class ResourceLimitError(RuntimeError):
    """An algorithm exceeded its configured working-memory budget."""


@dataclass(frozen=True)
class ThresholdQuery:
    """N input bitmaps and a threshold ``T`` with ``1 <= T <= N``.

    All inputs are read over the common universe ``r`` = the largest
    ``size_in_bits``; shorter inputs are zero-extended.
    """

    inputs: tuple
    T: int

    def __init__(self, inputs: Sequence[CompressedBitmap], T: int):
        inputs = tuple(inputs)
        if not inputs:
            raise ThresholdError("a threshold query needs at least one input")
        if not 1 <= T <= len(inputs):
            raise ThresholdError(f"T={T} outside [1, {len(inputs)}]")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "T", int(T))

    @property
    def N(self) -> int:
        return len(self.inputs)

    @property
    def r(self) -> int:
        return max(b.size_in_bits for b in self.inputs)

    @property
    def B(self) -> int:
        return sum(b.cardinality() for b in self.inputs)

    @property
    def ewah_size(self) -> int:
        return sum(b.ewah_size() for b in self.inputs)


def edge_case(q: ThresholdQuery) -> Optional[CompressedBitmap]:
    """Wide OR for T=1 and wide AND for T=N, otherwise None."""
    if q.T == 1:
        return wide_or(q.inputs, q.r)
    if q.T == q.N:
        return wide_and(q.inputs, q.r)
    return None


def occurrence_counts(inputs: Sequence[CompressedBitmap], r: Optional[int] = None) -> np.ndarray:
    """Per-position count of 1s across ``inputs`` from fully decompressed bits."""
    if r is None:
        r = max(b.size_in_bits for b in inputs)
    counts = np.zeros(r, dtype=np.int64)
    for b in inputs:
        bits = b.to_bools()
        counts[: len(bits)] += bits
    return counts


def threshold_oracle(q: ThresholdQuery) -> CompressedBitmap:
    """Reference answer: decompress, count per position, keep counts >= T."""
    counts = occurrence_counts(q.inputs, q.r)
    return CompressedBitmap.from_bools(counts >= q.T)


def symmetric_oracle(inputs: Sequence[CompressedBitmap], predicate: Callable[[int], bool]) -> CompressedBitmap:
    counts = occurrence_counts(inputs)
    table = np.array([bool(predicate(c)) for c in range(len(inputs) + 1)])
    return CompressedBitmap.from_bools(table[counts])


def by_cardinality(inputs: Sequence[CompressedBitmap]) -> list:
    """Input indices sorted by increasing cardinality, ties by index."""
    return sorted(range(len(inputs)), key=lambda i: (inputs[i].cardinality(), i))
