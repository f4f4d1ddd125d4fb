"""Timing harness: run every algorithm on each workload query, oracle-gated."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .threshold import (
    CORE_ALGORITHMS,
    DEFAULT_MEMORY_BUDGET,
    DEFAULT_MU,
    DEFAULT_COEFFS,
    ModelCoefficients,
    ResourceLimitError,
    ThresholdQuery,
    d_sk,
    hybrid_h,
    run,
    threshold_oracle,
    w2cti,
)
from .workload import (
    Dataset,
    TimingRecord,
    WorkloadQuery,
    aggregate_throughput,
    assign_slowest,
)


class VerificationError(RuntimeError):
    """An algorithm disagreed with the oracle."""


@dataclass(frozen=True)
class BenchConfig:
    reps: int = 3
    algorithms: tuple = CORE_ALGORITHMS + ("hybrid",)
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    coeffs: ModelCoefficients = DEFAULT_COEFFS
    # dataset tag -> mu for DSk; missing tags use DEFAULT_MU
    mu: Mapping[str, float] = field(default_factory=dict)
    verify: bool = True


def make_runner(algo: str, cfg: BenchConfig, dataset_tag: str) -> Callable[[ThresholdQuery], object]:
    if algo == "dsk":
        mu = cfg.mu.get(dataset_tag, DEFAULT_MU)
        return lambda q: d_sk(q, mu)
    if algo == "w2cti":
        return lambda q: w2cti(q, memory_budget=cfg.memory_budget)
    if algo == "hybrid":
        return lambda q: hybrid_h(q, cfg.coeffs)[1]
    return lambda q: run(algo, q)


def time_call(fn: Callable, arg, reps: int) -> tuple:
    """Run ``fn(arg)`` ``reps`` times; return (last result, per-rep seconds)."""
    times = []
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = fn(arg)
        times.append(time.perf_counter() - t0)
    return result, times


@dataclass
class QueryOutcome:
    records: list
    # (algo, rep index, seconds) for every repetition
    repetitions: list


def bench_query(wq: WorkloadQuery, ds: Dataset, cfg: BenchConfig) -> QueryOutcome:
    q = wq.threshold_query(ds.index)
    expected = threshold_oracle(q) if cfg.verify else None
    size, B = q.ewah_size, q.B
    records, reps = [], []
    for algo in cfg.algorithms:
        fn = make_runner(algo, cfg, ds.tag)
        try:
            result, times = time_call(fn, q, cfg.reps)
        except ResourceLimitError:
            records.append(TimingRecord(wq.query_id, algo, math.nan, size, q.N, q.T, q.r, B,
                                        completed=False))
            continue
        if expected is not None and result != expected:
            raise VerificationError(f"{algo} disagrees with the oracle on query {wq.query_id}")
        reps.extend((algo, i, t) for i, t in enumerate(times))
        # perf_counter can tie on tiny inputs; keep elapsed strictly positive
        best = max(min(times), 1e-9)
        records.append(TimingRecord(wq.query_id, algo, best, size, q.N, q.T, q.r, B))
    return QueryOutcome(assign_slowest(records), reps)


def bench_workload(
    queries: Sequence[WorkloadQuery],
    datasets: Mapping[str, Dataset],
    cfg: BenchConfig = BenchConfig(),
    progress: Optional[Callable[[int, int], None]] = None,
) -> tuple:
    """Return (timing records, repetition rows)."""
    records, reps = [], []
    for k, wq in enumerate(queries):
        out = bench_query(wq, datasets[wq.dataset_tag], cfg)
        records.extend(out.records)
        reps.extend((wq.query_id, a, i, t) for a, i, t in out.repetitions)
        if progress is not None:
            progress(k + 1, len(queries))
    return records, reps


def summarize(records: Sequence[TimingRecord], queries: Sequence[WorkloadQuery]) -> list:
    """Rows of (algo, dataset, harmonic-mean MB/s, s/MB, query count)."""
    groups = {q.query_id: q.dataset_tag for q in queries}
    hm = aggregate_throughput(records, groups)
    counts: dict = {}
    for rec in records:
        key = (rec.algo, groups[rec.query_id])
        counts[key] = counts.get(key, 0) + 1
    return [(algo, ds, mbps, 1.0 / mbps, counts[(algo, ds)])
            for (algo, ds), mbps in sorted(hm.items())]


def write_summary(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algo", "dataset", "mb_per_s", "s_per_mb", "queries"])
        for algo, ds, mbps, spmb, n in rows:
            w.writerow([algo, ds, f"{mbps:.6g}", f"{spmb:.6g}", n])


def write_repetitions(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query_id", "algo", "rep", "elapsed_s"])
        for qid, algo, i, t in rows:
            w.writerow([qid, algo, i, repr(t)])


def dataset_from_path(path) -> Dataset:
    from .index import BitmapIndex

    p = Path(path)
    return Dataset(p.stem, BitmapIndex.load(p))
