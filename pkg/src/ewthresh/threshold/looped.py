"""Dynamic-programming threshold over bitmaps: C_j holds the count >= j answer."""

from __future__ import annotations

from typing import Optional, Sequence

from ..bitmap import CompressedBitmap, binary_op
from .query import ThresholdQuery, edge_case


def looped_tables(
    inputs: Sequence[CompressedBitmap], T: int, stats: Optional[dict] = None
) -> list:
    """Return ``[C_1, ..., C_T]`` where C_j = positions with count >= j.

    ``stats["ops"]`` receives the number of binary bitmap operations.
    """
    r = max(b.size_in_bits for b in inputs)
    empty = CompressedBitmap.empty(r)
    C = [empty] * (T + 1)  # C[0] unused
    C[1] = binary_op("OR", inputs[0], empty)
    ops = 0
    for i, b in enumerate(inputs[1:], start=2):
        for j in range(min(T, i), 1, -1):
            C[j] = binary_op("OR", C[j], binary_op("AND", C[j - 1], b))
            ops += 2
        C[1] = binary_op("OR", C[1], b)
        ops += 1
    if stats is not None:
        stats["ops"] = stats.get("ops", 0) + ops
    return C[1:]


def expected_op_count(N: int, T: int) -> int:
    return 2 * N * T - N - T * T + T - 1


def looped(q: ThresholdQuery, *, stats: Optional[dict] = None) -> CompressedBitmap:
    edge = edge_case(q)
    if edge is not None:
        return edge
    return looped_tables(q.inputs, q.T, stats)[-1]


def opt_threshold_looped(inputs: Sequence[CompressedBitmap]) -> tuple:
    C = looped_tables(inputs, len(inputs))
    for i in range(len(C), 0, -1):
        if not C[i - 1].is_empty():
            return i, C[i - 1]
    return 0, C[0]
