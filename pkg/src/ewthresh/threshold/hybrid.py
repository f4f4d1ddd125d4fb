"""Cost-model and per-dataset algorithm selection."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Union

from ..bitmap import CompressedBitmap
from .bstm import bstm
from .looped import looped
from .query import ThresholdQuery
from .rbmrg import rbmrg
from .scancount import scan_count

# order used to break ties between equal estimates
TIE_ORDER = ("rbmrg", "scancount", "looped", "bstm")


@dataclass(frozen=True)
class ModelCoefficients:
    """Seconds (or any fixed unit) per unit of each cost term."""

    c_sc1: float = 2.072e-5
    c_sc2: float = 2.683e-6
    c_looped: float = 1.306e-6
    c_bstm: float = 3.133e-5
    c_rbmrg: float = 1.592e-6

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModelCoefficients":
        return cls(**json.loads(Path(path).read_text()))


DEFAULT_COEFFS = ModelCoefficients()


def estimate_costs(
    N: int, T: int, r: int, B: int, ewah_size: int, coeffs: ModelCoefficients = DEFAULT_COEFFS
) -> dict:
    lnN = math.log(N)
    return {
        "scancount": coeffs.c_sc1 * r + coeffs.c_sc2 * B,
        "looped": coeffs.c_looped * T * ewah_size,
        "bstm": coeffs.c_bstm * ewah_size * lnN,
        "rbmrg": coeffs.c_rbmrg * ewah_size * lnN,
    }


def choose_algorithm(costs: Mapping[str, float]) -> str:
    return min(TIE_ORDER, key=lambda name: (costs[name], TIE_ORDER.index(name)))


_RUNNERS = {"scancount": scan_count, "looped": looped, "bstm": bstm, "rbmrg": rbmrg}


def hybrid_h(q: ThresholdQuery, coeffs: ModelCoefficients = DEFAULT_COEFFS) -> tuple:
    """Run whichever algorithm the cost model predicts to be fastest."""
    costs = estimate_costs(q.N, q.T, q.r, q.B, q.ewah_size, coeffs)
    chosen = choose_algorithm(costs)
    return chosen, _RUNNERS[chosen](q)


def hybrid_ds(
    q: ThresholdQuery,
    dataset_tag: str,
    table: Mapping[str, Union[str, Callable]],
) -> CompressedBitmap:
    """Dispatch on the dataset; ``table["default"]`` covers unknown tags."""
    from . import get_algorithm

    choice = table.get(dataset_tag, table["default"])
    fn = get_algorithm(choice) if isinstance(choice, str) else choice
    return fn(q)
