"""Time RBMrg and ScanCount on single-run inputs as the universe grows.

RBMrg works on runs, so its time should stay flat; ScanCount touches every
position, so its time should grow linearly with r.
"""

from __future__ import annotations

import argparse
import math
import time
from dataclasses import dataclass

import numpy as np

from ewthresh.bitmap import CompressedBitmap
from ewthresh.threshold import ThresholdQuery, rbmrg, scan_count


@dataclass(frozen=True)
class ScaleConfig:
    n: int = 32
    T: int = 16
    log2_sizes: tuple = (18, 19, 20, 21, 22, 23)
    reps: int = 30
    seed: int = 9


def best_time(fn, reps: int) -> float:
    best = math.inf
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def run(cfg: ScaleConfig) -> list[tuple]:
    full = np.random.default_rng(cfg.seed).random(cfg.n) < 0.5
    rows = []
    for k in cfg.log2_sizes:
        r = 1 << k
        q = ThresholdQuery([CompressedBitmap.full(r) if f else CompressedBitmap.empty(r) for f in full], cfg.T)
        rows.append((r, best_time(lambda: rbmrg(q), cfg.reps), best_time(lambda: scan_count(q), cfg.reps)))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=ScaleConfig.reps)
    a = ap.parse_args()
    rows = run(ScaleConfig(reps=a.reps))
    print(f"{'r':>10} {'rbmrg_ms':>10} {'scancount_ms':>13} {'sc_ratio':>9}")
    prev = None
    for r, rb, sc in rows:
        ratio = f"{sc / prev:.2f}" if prev else "-"
        print(f"{r:>10} {rb * 1e3:>10.4f} {sc * 1e3:>13.4f} {ratio:>9}")
        prev = sc


if __name__ == "__main__":
    main()
