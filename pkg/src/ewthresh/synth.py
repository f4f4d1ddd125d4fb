"""Random bitmaps and tables for tests, benchmarks and stand-in datasets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bitmap import CompressedBitmap
from .index import Table


def uniform_positions(rng: np.random.Generator, size: int, density: float) -> np.ndarray:
    if size == 0:
        return np.empty(0, dtype=np.int64)
    k = int(rng.binomial(size, min(max(density, 0.0), 1.0)))
    return np.sort(rng.choice(size, size=k, replace=False))


def clustered_positions(
    rng: np.random.Generator, size: int, density: float, mean_run: float = 256.0
) -> np.ndarray:
    """Alternating runs of ones and zeros with geometric lengths."""
    if size == 0 or density <= 0:
        return np.empty(0, dtype=np.int64)
    if density >= 1:
        return np.arange(size)
    on_mean = max(1.0, mean_run * density)
    off_mean = max(1.0, mean_run * (1 - density))
    mask = np.zeros(size, dtype=bool)
    pos = int(rng.integers(0, int(off_mean) + 1))
    while pos < size:
        on = int(rng.geometric(1 / on_mean))
        mask[pos:pos + on] = True
        pos += on + int(rng.geometric(1 / off_mean))
    return np.flatnonzero(mask)


def random_bitmap(
    rng: np.random.Generator,
    size: int,
    density: float,
    clustered: bool = False,
    mean_run: float = 256.0,
) -> CompressedBitmap:
    if clustered:
        pos = clustered_positions(rng, size, density, mean_run)
    else:
        pos = uniform_positions(rng, size, density)
    return CompressedBitmap.from_positions(pos, size)


@dataclass(frozen=True)
class InstanceConfig:
    """Ranges for :func:`random_instance`; sizes and densities are log-uniform."""

    n_min: int = 3
    n_max: int = 64
    r_min: int = 64
    r_max: int = 65536
    density_min: float = 1e-3
    density_max: float = 0.6
    clustered_fraction: float = 0.5
    # per-input universe drawn from [ragged_fraction * r, r]
    ragged_fraction: float = 0.5


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_instance(
    rng: np.random.Generator, cfg: InstanceConfig = InstanceConfig(), T: Optional[int] = None
) -> tuple:
    """Return ``(inputs, T)``; ``T`` uniform on [1, N] unless given."""
    N = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    r = int(round(_log_uniform(rng, cfg.r_min, cfg.r_max)))
    inputs = []
    for i in range(N):
        size = r if i == 0 else int(rng.integers(int(cfg.ragged_fraction * r), r + 1))
        density = _log_uniform(rng, cfg.density_min, cfg.density_max)
        clustered = bool(rng.random() < cfg.clustered_fraction)
        inputs.append(random_bitmap(rng, size, density, clustered))
    if T is None:
        T = int(rng.integers(1, N + 1))
    return inputs, T


def random_table(
    rng: np.random.Generator,
    rows: int,
    attributes: int,
    max_cardinality: int = 20,
    skew: float = 1.2,
) -> Table:
    """Columns with Zipf-like value frequencies; values are short strings."""
    names = [f"a{j}" for j in range(attributes)]
    cols = []
    for j in range(attributes):
        card = int(rng.integers(1, max_cardinality + 1))
        weights = 1.0 / np.arange(1, card + 1) ** skew
        weights /= weights.sum()
        cols.append(rng.choice(card, size=rows, p=weights))
    data = [[f"v{int(cols[j][i])}" for j in range(attributes)] for i in range(rows)]
    return Table(names, data)


def text_like_table(rng: np.random.Generator, rows: int, vocab: int = 500, slots: int = 8) -> Table:
    """Stand-in for text-derived data: each row is a bag of Zipf-distributed terms.

    Slot ``k`` holds the row's k-th term, so every term occurrence becomes a
    value bitmap and similarity queries see many overlapping sparse bitmaps.
    """
    weights = 1.0 / np.arange(1, vocab + 1)
    weights /= weights.sum()
    terms = rng.choice(vocab, size=(rows, slots), p=weights)
    names = [f"t{k}" for k in range(slots)]
    data = [[f"w{int(x)}" for x in row] for row in terms]
    return Table(names, data)
