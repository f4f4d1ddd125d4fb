"""Threshold (T-overlap) algorithms over compressed bitmaps.

Every algorithm takes a :class:`ThresholdQuery` and returns the bitmap of
positions set in at least ``T`` inputs, spanning the query's universe.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

from ..bitmap import CompressedBitmap, bitwise_not
from .bstm import BitSliceAccumulator, accumulate, bstm
from .hybrid import (
    DEFAULT_COEFFS,
    ModelCoefficients,
    choose_algorithm,
    estimate_costs,
    hybrid_ds,
    hybrid_h,
)
from .looped import expected_op_count, looped, looped_tables, opt_threshold_looped
from .merge import DEFAULT_MU, ForwardCursor, d_sk, mg_opt, set_aside_count
from .query import (
    ResourceLimitError,
    ThresholdError,
    ThresholdQuery,
    occurrence_counts,
    symmetric_oracle,
    threshold_oracle,
)
from .rbmrg import RbmrgStats, rbmrg, rbmrg_dirty_block
from .scancount import count_occurrences, opt_threshold_scancount, scan_count, scan_count_symmetric
from .w2cti import DEFAULT_MEMORY_BUDGET, CountedSet, w2cti

# the seven algorithms checked against the oracle
CORE_ALGORITHMS = ("scancount", "mgopt", "dsk", "w2cti", "bstm", "looped", "rbmrg")

ALGORITHM_IDS = CORE_ALGORITHMS + ("hybrid", "hybrid-ds", "oracle")

_REGISTRY = {
    "scancount": scan_count,
    "mgopt": mg_opt,
    "dsk": d_sk,
    "w2cti": w2cti,
    "bstm": bstm,
    "looped": looped,
    "rbmrg": rbmrg,
    "oracle": threshold_oracle,
    "hybrid": lambda q, **kw: hybrid_h(q, **kw)[1],
    "hybrid-ds": hybrid_ds,
}


def get_algorithm(algo_id: str) -> Callable:
    try:
        return _REGISTRY[algo_id]
    except KeyError:
        raise ThresholdError(
            f"unknown algorithm {algo_id!r}; expected one of {', '.join(ALGORITHM_IDS)}"
        ) from None


def run(algo_id: str, q: ThresholdQuery, **options) -> CompressedBitmap:
    return get_algorithm(algo_id)(q, **options)


class EmptyInputError(ThresholdError):
    """Opt-threshold on inputs without a single set bit."""


def opt_threshold(inputs: Sequence[CompressedBitmap], strategy: str = "scancount", algo: str = "rbmrg") -> tuple:
    """Largest T with a non-empty answer, and that answer.

    ``successive`` tries T = N, N-1, ... with ``algo`` until a hit.
    """
    inputs = list(inputs)
    if not inputs or all(b.is_empty() for b in inputs):
        raise EmptyInputError("all inputs are empty")
    if strategy == "scancount":
        return opt_threshold_scancount(inputs)
    if strategy == "looped":
        return opt_threshold_looped(inputs)
    if strategy == "successive":
        fn = get_algorithm(algo)
        for T in range(len(inputs), 0, -1):
            res = fn(ThresholdQuery(inputs, T))
            if not res.is_empty():
                return T, res
    raise ThresholdError(f"unknown opt-threshold strategy {strategy!r}")


def at_most(
    inputs: Sequence[CompressedBitmap],
    T: int,
    algo: str = "rbmrg",
    r: Optional[int] = None,
) -> CompressedBitmap:
    """Positions set in at most ``T`` inputs, over ``[0, r)``."""
    inputs = list(inputs)
    N = len(inputs)
    if not 0 <= T <= N:
        raise ThresholdError(f"T={T} outside [0, {N}]")
    if r is None:
        r = max(b.size_in_bits for b in inputs)
    if T == N:
        return CompressedBitmap.full(r)
    pad = CompressedBitmap.empty(r)
    negated = [bitwise_not(b | pad) for b in inputs]
    return run(algo, ThresholdQuery(negated, N - T))


__all__ = [
    "ALGORITHM_IDS",
    "BitSliceAccumulator",
    "CORE_ALGORITHMS",
    "CountedSet",
    "DEFAULT_MEMORY_BUDGET",
    "DEFAULT_MU",
    "EmptyInputError",
    "ForwardCursor",
    "ModelCoefficients",
    "DEFAULT_COEFFS",
    "RbmrgStats",
    "ResourceLimitError",
    "ThresholdError",
    "ThresholdQuery",
    "accumulate",
    "at_most",
    "bstm",
    "choose_algorithm",
    "count_occurrences",
    "d_sk",
    "estimate_costs",
    "expected_op_count",
    "get_algorithm",
    "hybrid_ds",
    "hybrid_h",
    "looped",
    "looped_tables",
    "mg_opt",
    "occurrence_counts",
    "opt_threshold",
    "rbmrg",
    "rbmrg_dirty_block",
    "run",
    "scan_count",
    "scan_count_symmetric",
    "set_aside_count",
    "symmetric_oracle",
    "threshold_oracle",
    "w2cti",
]
