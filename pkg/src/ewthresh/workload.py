"""Query generation, threshold repair, mu tuning and cost-model fitting.

Randomness: every generated query draws from its own Philox stream keyed by
``(seed, stream_id, query_index, attempt)``, so a query list is reproducible
across platforms and one query's draws never shift another's.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .index import BitmapIndex
from .threshold import ModelCoefficients, ThresholdQuery, d_sk, scan_count
from .threshold.merge import mu_for_set_aside

log = logging.getLogger(__name__)

MANY_CRITERIA = "many_criteria"
SIMILARITY = "similarity"
SIMILARITY_SIZES = (1, 5, 10, 15, 20)
N_RANGE = (3, 1000)

# stream ids keep workloads of different kinds independent under one seed
_STREAM_IDS = {MANY_CRITERIA: 1, SIMILARITY: 2}
_ID_PREFIX = {MANY_CRITERIA: "mc", SIMILARITY: "sim"}


class GenerationError(RuntimeError):
    """Query generation gave up; ``diagnostics`` says why."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DatasetTooSmallError(GenerationError):
    pass


class FittingError(ValueError):
    pass


def query_rng(seed: int, stream: int, index: int, attempt: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, index, attempt])))


@dataclass(frozen=True)
class Dataset:
    tag: str
    index: BitmapIndex
    relational: bool = True


@dataclass(frozen=True)
class WorkloadQuery:
    query_id: str
    kind: str
    dataset_tag: str
    bitmap_refs: tuple  # of (attribute, value)
    T: int
    seed_trace: dict = field(default_factory=dict)
    n: Optional[int] = None  # number of prototype rows, similarity only

    @property
    def N(self) -> int:
        return len(self.bitmap_refs)

    def to_json(self) -> str:
        d = asdict(self)
        d["bitmap_refs"] = [list(ref) for ref in self.bitmap_refs]
        return json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "WorkloadQuery":
        d = json.loads(line)
        d["bitmap_refs"] = tuple(tuple(ref) for ref in d["bitmap_refs"])
        return cls(**d)

    def bitmaps(self, index: BitmapIndex) -> list:
        return [index[ref] for ref in self.bitmap_refs]

    def threshold_query(self, index: BitmapIndex) -> ThresholdQuery:
        return ThresholdQuery(self.bitmaps(index), self.T)


def write_workload(queries: Iterable[WorkloadQuery], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in queries:
            fh.write(q.to_json() + "\n")


def read_workload(path: Union[str, Path]) -> list:
    with open(path, encoding="utf-8") as fh:
        return [WorkloadQuery.from_json(line) for line in fh if line.strip()]


def draw_log_uniform_n(rng: np.random.Generator, lo: int = N_RANGE[0], hi: int = N_RANGE[1]) -> int:
    """log N ~ U[log lo, log hi], rounded to the nearest integer, at least ``lo``."""
    x = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return max(lo, int(math.floor(x + 0.5)))


def draw_similarity_size(rng: np.random.Generator) -> int:
    return SIMILARITY_SIZES[int(rng.integers(len(SIMILARITY_SIZES)))]


def resample_threshold(
    query: WorkloadQuery, rng: np.random.Generator, empty: bool = True
) -> Optional[WorkloadQuery]:
    """New T uniform on [2, old T) for an empty query; None means discard it."""
    if not empty:
        return query
    if query.T <= 2:
        return None
    return replace(query, T=int(rng.integers(2, query.T)))


def _repair(
    q: WorkloadQuery, index: BitmapIndex, rng: np.random.Generator
) -> Optional[WorkloadQuery]:
    bitmaps = q.bitmaps(index)
    while q is not None:
        if not scan_count(ThresholdQuery(bitmaps, q.T)).is_empty():
            return q
        q = resample_threshold(q, rng)
    return None


def _generate(
    kind: str,
    datasets: Sequence[Dataset],
    count: int,
    seed: int,
    draw: Callable,
    max_attempts: int,
) -> list:
    if count < 1:
        raise GenerationError("count must be at least 1", {"count": count})
    if not datasets:
        raise GenerationError(f"no dataset available for {kind} queries")
    stream = _STREAM_IDS[kind]
    out = []
    for qi in range(count):
        reasons: dict = {}
        for attempt in range(max_attempts):
            rng = query_rng(seed, stream, qi, attempt)
            ds = datasets[int(rng.integers(len(datasets)))]
            trace = {"seed": seed, "stream": stream, "index": qi, "attempt": attempt}
            q, why = draw(rng, ds, f"{_ID_PREFIX[kind]}{qi:05d}", trace)
            if q is not None:
                q = _repair(q, ds.index, rng)
                why = why or "empty at T=2"
            if q is not None:
                out.append(q)
                break
            reasons[why] = reasons.get(why, 0) + 1
        else:
            raise GenerationError(
                f"query {qi}: no usable {kind} query in {max_attempts} attempts",
                {"query_index": qi, "seed": seed, "discards": reasons},
            )
    return out


def gen_many_criteria(
    datasets: Sequence[Dataset], count: int, seed: int, max_attempts: int = 1000
) -> list:
    """Relaxed conjunctive queries: at least T of N attribute=value criteria."""
    relational = [d for d in datasets if d.relational]

    def draw(rng, ds, qid, trace):
        attrs = ds.index.attributes
        N = min(draw_log_uniform_n(rng), len(attrs))
        chosen = rng.integers(len(attrs), size=N)  # with replacement
        refs = []
        for a in chosen:
            attr = attrs[int(a)]
            values = list(ds.index.columns[attr])
            refs.append((attr, values[int(rng.integers(len(values)))]))
        n_attr = len({a for a, _ in refs})
        if n_attr < 3:
            return None, "fewer than 3 distinct attributes"
        T = int(rng.integers(2, n_attr))  # [2, N'-1]
        return WorkloadQuery(qid, MANY_CRITERIA, ds.tag, tuple(refs), T, trace), None

    return _generate(MANY_CRITERIA, relational, count, seed, draw, max_attempts)


def gen_similarity(
    datasets: Sequence[Dataset], count: int, seed: int, max_attempts: int = 1000
) -> list:
    """Threshold queries over every bitmap that matches one of n prototype rows."""
    from .index import similarity_keys

    def draw(rng, ds, qid, trace):
        n = draw_similarity_size(rng)
        if n > ds.index.r:
            raise DatasetTooSmallError(
                f"dataset {ds.tag!r} has {ds.index.r} rows, cannot pick {n} prototypes",
                {"dataset": ds.tag, "r": ds.index.r, "n": n},
            )
        rows = sorted(int(x) for x in rng.choice(ds.index.r, size=n, replace=False))
        refs = tuple(similarity_keys(ds.index, rows))
        if len(refs) < 3:
            return None, "fewer than 3 bitmaps"
        T = int(rng.integers(2, len(refs)))  # [2, N-1]
        trace = dict(trace, prototype_rows=rows)
        return WorkloadQuery(qid, SIMILARITY, ds.tag, refs, T, trace, n=n), None

    return _generate(SIMILARITY, datasets, count, seed, draw, max_attempts)


# ---- mu tuning -------------------------------------------------------------


@dataclass(frozen=True)
class MuEstimate:
    dataset_tag: str
    mu: float
    sample_count: int


def candidate_set_asides(T: int) -> list:
    """Set-aside counts L worth trying for threshold T, ascending."""
    if T <= 20:
        return list(range(1, T))
    c = set(range(T - 5, T))
    for i in range(1, 16):
        c.add(-(-(T - 6) * i // 15))  # ceil((T-6) i / 15)
    return sorted(c)


def time_dsk(q: ThresholdQuery, mu: float, reps: int = 1) -> float:
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        d_sk(q, mu)
        best = min(best, time.perf_counter() - t0)
    return best


def fit_mu(
    dataset_tag: str,
    sample_queries: Sequence[ThresholdQuery],
    candidate_rule: Callable[[int], list] = candidate_set_asides,
    runner: Callable[[ThresholdQuery, float], float] = time_dsk,
) -> MuEstimate:
    """Mean over queries of the mu whose DSk run was fastest.

    ``runner(query, mu)`` returns a cost (seconds by default).  Queries whose
    largest input has at most one element carry no information about mu and
    are skipped.
    """
    if not sample_queries:
        raise FittingError("fit_mu needs at least one sample query")
    picks = []
    for q in sample_queries:
        M = max(b.cardinality() for b in q.inputs)
        if M <= 1 or q.T < 2:
            continue
        best = None
        for L in candidate_rule(q.T):
            mu = mu_for_set_aside(q.T, L, M)
            if mu <= 0:
                continue
            cost = runner(q, mu)
            if best is None or cost < best[0]:
                best = (cost, mu)
        if best is not None:
            picks.append(best[1])
    if not picks:
        raise FittingError(f"no sample query for {dataset_tag!r} admits a positive mu")
    return MuEstimate(dataset_tag, float(np.mean(picks)), len(picks))


def save_mu(estimates: Iterable[MuEstimate], path: Union[str, Path]) -> None:
    data = {e.dataset_tag: {"mu": e.mu, "sample_count": e.sample_count} for e in estimates}
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_mu(path: Union[str, Path]) -> dict:
    """dataset tag -> mu."""
    data = json.loads(Path(path).read_text())
    return {tag: float(v["mu"] if isinstance(v, dict) else v) for tag, v in data.items()}


# ---- timing records --------------------------------------------------------

TIMING_COLUMNS = ("query_id", "algo", "elapsed_s", "input_bytes", "N", "T", "r", "B", "completed")


@dataclass(frozen=True)
class TimingRecord:
    query_id: str
    algo: str
    elapsed_s: float
    input_bytes: int
    N: int
    T: int
    r: int
    B: int
    completed: bool = True
    imputed: bool = False

    def __post_init__(self):
        if self.input_bytes <= 0:
            raise ValueError(f"{self.query_id}/{self.algo}: input_bytes must be positive")
        if self.completed and not self.elapsed_s > 0:
            raise ValueError(f"{self.query_id}/{self.algo}: completed run with elapsed {self.elapsed_s}")

    @property
    def throughput(self) -> float:
        """MB/s, with 1 MB = 1e6 bytes."""
        return self.input_bytes / 1e6 / self.elapsed_s

    def row(self) -> list:
        status = "imputed" if self.imputed else ("true" if self.completed else "false")
        return [self.query_id, self.algo, repr(float(self.elapsed_s)), self.input_bytes,
                self.N, self.T, self.r, self.B, status]


def write_timings(records: Iterable[TimingRecord], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for rec in records:
            w.writerow(rec.row())


def read_timings(path: Union[str, Path]) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(TIMING_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise FittingError(f"timing table lacks columns {sorted(missing)}")
        for row in reader:
            status = row["completed"].strip().lower()
            out.append(TimingRecord(
                row["query_id"], row["algo"], float(row["elapsed_s"]), int(row["input_bytes"]),
                int(row["N"]), int(row["T"]), int(row["r"]), int(row["B"]),
                completed=status in ("true", "imputed"), imputed=status == "imputed",
            ))
    return out


def assign_slowest(records: Sequence[TimingRecord]) -> list:
    """Give unfinished runs of one query the slowest finished time."""
    done = [r.elapsed_s for r in records if r.completed]
    if not done:
        ids = sorted({r.query_id for r in records})
        log.warning("excluding query %s: no algorithm completed", ",".join(ids))
        return []
    slowest = max(done)
    return [r if r.completed else replace(r, elapsed_s=slowest, completed=True, imputed=True)
            for r in records]


def aggregate_throughput(
    records: Iterable[TimingRecord],
    groups: Optional[Mapping[str, str]] = None,
    reciprocal: bool = False,
) -> dict:
    """Harmonic-mean MB/s per (algo, group).

    ``groups`` maps query ids to a group label (all records share one group
    ``""`` when omitted). With ``reciprocal`` the result is seconds per MB.
    """
    acc: dict = {}
    for rec in records:
        if not rec.completed:
            raise ValueError(f"{rec.query_id}/{rec.algo} did not complete; run assign_slowest first")
        if not rec.elapsed_s > 0:
            raise ValueError(f"{rec.query_id}/{rec.algo}: zero elapsed time")
        g = groups[rec.query_id] if groups is not None else ""
        inv = acc.setdefault((rec.algo, g), [0, 0.0])
        inv[0] += 1
        inv[1] += 1.0 / rec.throughput
    if reciprocal:
        return {k: s / n for k, (n, s) in acc.items()}
    return {k: n / s for k, (n, s) in acc.items()}


# ---- cost-model fitting ----------------------------------------------------

FITTED_ALGORITHMS = ("scancount", "looped", "bstm", "rbmrg")


def cost_terms(algo: str, rec: TimingRecord) -> list:
    if algo == "scancount":
        return [rec.r, rec.B]
    if algo == "looped":
        return [rec.T * rec.input_bytes]
    return [rec.input_bytes * math.log(rec.N)]


def fit_coefficients(records: Iterable[TimingRecord]) -> ModelCoefficients:
    """Least squares through the origin of time against each cost term.

    Imputed records are ignored since their times were never measured.
    """
    by_algo: dict = {a: [] for a in FITTED_ALGORITHMS}
    for rec in records:
        if rec.algo in by_algo and rec.completed and not rec.imputed:
            by_algo[rec.algo].append(rec)
    fitted = {}
    for algo, recs in by_algo.items():
        if not recs:
            raise FittingError(f"no completed timing records for {algo}")
        X = np.array([cost_terms(algo, r) for r in recs], dtype=float)
        y = np.array([r.elapsed_s for r in recs], dtype=float)
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise FittingError(f"{algo}: cost terms are degenerate over {len(recs)} records")
        coef = np.linalg.lstsq(X, y, rcond=None)[0]
        if not np.all(coef > 0):
            raise FittingError(f"{algo}: fitted coefficients {coef.tolist()} are not all positive")
        fitted[algo] = coef
    return ModelCoefficients(
        c_sc1=float(fitted["scancount"][0]),
        c_sc2=float(fitted["scancount"][1]),
        c_looped=float(fitted["looped"][0]),
        c_bstm=float(fitted["bstm"][0]),
        c_rbmrg=float(fitted["rbmrg"][0]),
    )


def synthetic_records(
    coeffs: ModelCoefficients, rng: np.random.Generator, count: int = 50
) -> list:
    """Noise-free records whose times follow ``coeffs`` exactly."""
    from .threshold import estimate_costs

    out = []
    for i in range(count):
        N = int(rng.integers(3, 200))
        T = int(rng.integers(2, N))
        r = int(rng.integers(1000, 10**7))
        B = int(rng.integers(N, N * r // 10))
        size = int(rng.integers(8 * N, 10**7))
        costs = estimate_costs(N, T, r, B, size, coeffs)
        for algo in FITTED_ALGORITHMS:
            out.append(TimingRecord(f"s{i:04d}", algo, costs[algo], size, N, T, r, B))
    return out
