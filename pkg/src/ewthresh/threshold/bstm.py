"""Bit-sliced accumulation of the inputs followed by a > T-1 comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..bitmap import CompressedBitmap, binary_op
from .query import ThresholdQuery, edge_case


@dataclass
class BitSliceAccumulator:
    """Slices A_1..A_k of per-position Hamming weights (A_1 least significant).

    ``j_max`` is the highest slice any carry has reached.
    """

    slices: list
    j_max: int
    ops: int = 0

    def weights(self) -> list:
        """Per-position weights, decoded from the slices (small instances only)."""
        r = max(s.size_in_bits for s in self.slices)
        total = [0] * r
        for j, s in enumerate(self.slices):
            for p in s.iter_set_bits():
                total[p] += 1 << j
        return total


def accumulate(inputs: Sequence[CompressedBitmap], r: Optional[int] = None) -> BitSliceAccumulator:
    """Add the inputs one at a time into a bit-sliced accumulator."""
    if r is None:
        r = max(b.size_in_bits for b in inputs)
    nslices = (2 * len(inputs)).bit_length() - 1
    A = [CompressedBitmap.empty(r) for _ in range(nslices)]
    A[0] = binary_op("OR", inputs[0], A[0])
    j_max = 1
    ops = 0
    for b in inputs[1:]:
        carry = binary_op("AND", b, A[0])
        A[0] = binary_op("XOR", b, A[0])
        ops += 2
        j = 1
        while not carry.is_empty():
            carry, A[j] = binary_op("AND", carry, A[j]), binary_op("XOR", carry, A[j])
            ops += 2
            j += 1
        # j is now the 1-based index of the last slice written
        j_max = max(j, j_max)
    return BitSliceAccumulator(A, j_max, ops)


def greater_than(acc: BitSliceAccumulator, bound: int, r: int) -> CompressedBitmap:
    """Positions whose accumulated weight exceeds ``bound``."""
    if (1 << acc.j_max) - 1 <= bound:
        # no weight representable in j_max slices can exceed the bound
        return CompressedBitmap.empty(r)
    b_eq = CompressedBitmap.full(r)
    b_gt = CompressedBitmap.empty(r)
    for j in range(acc.j_max, 0, -1):
        a = acc.slices[j - 1]
        if (bound >> (j - 1)) & 1:
            b_eq = binary_op("AND", b_eq, a)
            acc.ops += 1
        else:
            b_gt = binary_op("OR", b_gt, binary_op("AND", b_eq, a))
            b_eq = binary_op("ANDNOT", b_eq, a)
            acc.ops += 3
    return b_gt


def bstm(q: ThresholdQuery, *, trace: Optional[dict] = None) -> CompressedBitmap:
    edge = edge_case(q)
    if edge is not None:
        return edge
    acc = accumulate(q.inputs, q.r)
    out = greater_than(acc, q.T - 1, q.r)
    if trace is not None:
        trace["accumulator"] = acc
    return out
