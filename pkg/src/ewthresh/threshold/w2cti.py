"""Pairwise merging of counted sets, smallest input first, with pruning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..bitmap import CompressedBitmap
from .query import ResourceLimitError, ThresholdQuery, by_cardinality, edge_case

DEFAULT_MEMORY_BUDGET = 1 << 26  # counted-set entries


@dataclass
class CountedSet:
    """Sorted positions with a parallel array of occurrence counts."""

    positions: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if len(self.positions) != len(self.counts):
            raise ValueError("positions and counts differ in length")

    def __len__(self) -> int:
        return len(self.positions)

    @classmethod
    def of(cls, positions) -> "CountedSet":
        p = np.asarray(positions, dtype=np.int64)
        return cls(p, np.ones(len(p), dtype=np.int32))

    def merge(self, other: "CountedSet") -> "CountedSet":
        """Union of the two sets; counts of shared positions add up."""
        allp = np.concatenate([self.positions, other.positions])
        allc = np.concatenate([self.counts, other.counts])
        order = np.argsort(allp, kind="stable")
        allp = allp[order]
        allc = allc[order]
        if len(allp) == 0:
            return CountedSet(allp, allc)
        starts = np.flatnonzero(np.r_[True, allp[1:] != allp[:-1]])
        return CountedSet(allp[starts], np.add.reduceat(allc, starts).astype(np.int32))

    def prune(self, min_count: int) -> "CountedSet":
        if min_count <= 1:
            return self
        keep = self.counts >= min_count
        return CountedSet(self.positions[keep], self.counts[keep])


def w2cti(
    q: ThresholdQuery,
    *,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    on_step: Optional[Callable[[int, CountedSet], None]] = None,
) -> CompressedBitmap:
    """Merge inputs two at a time; ``on_step(k, acc)`` sees the set after k inputs."""
    edge = edge_case(q)
    if edge is not None:
        return edge
    return merge_counted(q, memory_budget=memory_budget, on_step=on_step)


def merge_counted(
    q: ThresholdQuery,
    *,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    on_step: Optional[Callable[[int, CountedSet], None]] = None,
) -> CompressedBitmap:
    """The merge loop of :func:`w2cti`, valid for every T including 1 and N."""
    T, N = q.T, q.N
    order = by_cardinality(q.inputs)
    acc = CountedSet.of(q.inputs[order[0]].positions()).prune(T - (N - 1))
    if on_step is not None:
        on_step(1, acc)
    for k, idx in enumerate(order[1:], start=2):
        acc = acc.merge(CountedSet.of(q.inputs[idx].positions()))
        if len(acc) > memory_budget:
            raise ResourceLimitError(
                f"w2cti working set {len(acc)} exceeds budget {memory_budget}"
            )
        acc = acc.prune(T - (N - k))
        if on_step is not None:
            on_step(k, acc)
    hits = acc.positions[acc.counts >= T]
    return CompressedBitmap.from_positions(hits, q.r)
