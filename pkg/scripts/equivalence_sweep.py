"""Check every threshold algorithm against the oracle on random instances."""

from __future__ import annotations

import argparse
import time
from collections import Counter

import numpy as np

from ewthresh.synth import InstanceConfig, random_instance
from ewthresh.threshold import CORE_ALGORITHMS, ThresholdQuery, run, threshold_oracle


def sweep(count: int, seed: int, cfg: InstanceConfig = InstanceConfig()) -> tuple[Counter, Counter]:
    rng = np.random.default_rng(seed)
    failures, seconds = Counter(), Counter()
    for _ in range(count):
        inputs, T = random_instance(rng, cfg)
        q = ThresholdQuery(inputs, T)
        expect = threshold_oracle(q)
        for algo in CORE_ALGORITHMS:
            t = time.perf_counter()
            got = run(algo, q)
            seconds[algo] += time.perf_counter() - t
            failures[algo] += got != expect
    return failures, seconds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", "--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=5)
    a = ap.parse_args()
    failures, seconds = sweep(a.count, a.seed)
    for algo in CORE_ALGORITHMS:
        print(f"{algo:10s} mismatches={failures[algo]:4d} total_s={seconds[algo]:.2f}")
    raise SystemExit(1 if any(failures.values()) else 0)


if __name__ == "__main__":
    main()
