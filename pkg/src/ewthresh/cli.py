"""``ewthresh`` command line: index, query, bench, fit, fit-mu.

Exit codes: 0 success, 2 usage, 3 data, 4 resource.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .bitmap import BitmapFormatError
from .index import (
    BitmapIndex,
    Criterion,
    IndexFormatError,
    IngestionError,
    QueryError,
    build_index,
    criteria_to_bitmaps,
    read_csv,
    similarity_bitmaps,
)
from .threshold import (
    ALGORITHM_IDS,
    DEFAULT_MEMORY_BUDGET,
    DEFAULT_MU,
    DEFAULT_COEFFS,
    ModelCoefficients,
    ResourceLimitError,
    ThresholdError,
    ThresholdQuery,
    d_sk,
    get_algorithm,
    hybrid_ds,
    hybrid_h,
    threshold_oracle,
    w2cti,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out: Optional[Path] = None
    algo: str = "rbmrg"
    threshold: Optional[int] = None
    seed: int = 0
    reps: int = 3
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    coeffs: Optional[Path] = None
    mu: Optional[Path] = None
    verify: bool = False

    def __post_init__(self):
        if self.algo not in ALGORITHM_IDS:
            raise UsageError(f"unknown algorithm {self.algo!r}")
        if self.reps < 1:
            raise UsageError("--reps must be at least 1")
        if self.memory_budget < 1:
            raise UsageError("--memory-budget must be positive")
        for p in list(self.inputs) + [self.coeffs, self.mu]:
            if p is not None and not Path(p).is_file():
                raise DataError(f"no such file: {p}")

    def coefficients(self) -> ModelCoefficients:
        return ModelCoefficients.load(self.coeffs) if self.coeffs else DEFAULT_COEFFS

    def mu_table(self) -> dict:
        from .workload import load_mu

        return load_mu(self.mu) if self.mu else {}


def _out(rc: RunConfig) -> Path:
    if rc.out is None:
        raise UsageError(f"{rc.command} needs --out")
    return Path(rc.out)


def cmd_index(rc: RunConfig, args) -> int:
    table = read_csv(rc.inputs[0])
    index = build_index(table)
    out = _out(rc)
    index.save(out)
    print(f"rows: {index.r}")
    print(f"attributes: {len(index.attributes)}")
    print(f"bitmaps: {len(index)}")
    print(f"ewah_bytes: {index.total_ewah_size()}")
    return EXIT_OK


def _parse_list(items: Optional[Sequence[str]]) -> list:
    out = []
    for item in items or ():
        out.extend(x for x in item.split(",") if x)
    return out


def _query_runner(rc: RunConfig, dataset_tag: str, args):
    if rc.algo == "dsk":
        mu = rc.mu_table().get(dataset_tag, DEFAULT_MU)
        return lambda q: d_sk(q, mu)
    if rc.algo == "w2cti":
        return lambda q: w2cti(q, memory_budget=rc.memory_budget)
    if rc.algo == "hybrid":
        coeffs = rc.coefficients()
        return lambda q: hybrid_h(q, coeffs)[1]
    if rc.algo == "hybrid-ds":
        if not args.ds_table:
            raise UsageError("--algo hybrid-ds needs --ds-table")
        table = json.loads(Path(args.ds_table).read_text())
        if "default" not in table:
            raise DataError("--ds-table needs a 'default' entry")
        for choice in table.values():
            get_algorithm(choice)
        return lambda q: hybrid_ds(q, dataset_tag, table)
    return get_algorithm(rc.algo)


def cmd_query(rc: RunConfig, args) -> int:
    path = Path(rc.inputs[0])
    index = BitmapIndex.load(path)
    criteria = _parse_list(args.criteria)
    prototypes = _parse_list(args.prototypes)
    if bool(criteria) == bool(prototypes):
        raise UsageError("give exactly one of --criteria or --prototypes")
    if criteria:
        sel = criteria_to_bitmaps(index, [Criterion.parse(c) for c in criteria])
        for c in sel.missing:
            print(f"note: no rows have {c.attribute}={c.value}; using an empty bitmap", file=sys.stderr)
        bitmaps = sel.bitmaps
    else:
        try:
            rows = [int(p) for p in prototypes]
        except ValueError:
            raise UsageError("--prototypes takes integer row ids") from None
        bitmaps = similarity_bitmaps(index, rows)
    if rc.threshold is None:
        raise UsageError("query needs --threshold")
    if not 1 <= rc.threshold <= len(bitmaps):
        raise UsageError(f"--threshold {rc.threshold} outside [1, {len(bitmaps)}]")
    q = ThresholdQuery(bitmaps, rc.threshold)
    result = _query_runner(rc, path.stem, args)(q)
    if rc.verify and result != threshold_oracle(q):
        print(f"error: {rc.algo} result differs from the oracle", file=sys.stderr)
        return EXIT_DATA
    if args.count:
        print(result.cardinality())
    else:
        print(" ".join(str(int(p)) for p in result.positions()))
    return EXIT_OK


def cmd_bench(rc: RunConfig, args) -> int:
    from .bench import (
        BenchConfig,
        bench_workload,
        dataset_from_path,
        summarize,
        write_repetitions,
        write_summary,
    )
    from .workload import gen_many_criteria, gen_similarity, write_timings, write_workload

    out = _out(rc)
    out.mkdir(parents=True, exist_ok=True)
    datasets = [dataset_from_path(p) for p in rc.inputs]
    by_tag = {d.tag: d for d in datasets}
    if len(by_tag) != len(datasets):
        raise UsageError("index files must have distinct stems (they name the datasets)")
    if args.kind == "many_criteria":
        queries = gen_many_criteria(datasets, args.queries, rc.seed)
    else:
        queries = gen_similarity(datasets, args.queries, rc.seed)
    write_workload(queries, out / "workload.jsonl")
    cfg = BenchConfig(
        reps=rc.reps,
        memory_budget=rc.memory_budget,
        coeffs=rc.coefficients(),
        mu=rc.mu_table(),
        verify=True,
    )
    if args.timing:
        records, reps = bench_workload(queries, by_tag, cfg)
        write_timings(records, out / "timings.csv")
        write_repetitions(reps, out / "repetitions.csv")
        rows = summarize(records, queries)
        write_summary(rows, out / "summary.csv")
        for algo, ds, mbps, _, n in rows:
            print(f"{ds:>16} {algo:>10} {mbps:12.3f} MB/s  ({n} queries)")
    print(f"wrote {len(queries)} queries to {out / 'workload.jsonl'}")
    return EXIT_OK


def cmd_fit(rc: RunConfig, args) -> int:
    from .workload import fit_coefficients, read_timings

    coeffs = fit_coefficients(read_timings(rc.inputs[0]))
    coeffs.save(_out(rc))
    for name, value in vars(coeffs).items():
        print(f"{name} = {value:.6g}")
    return EXIT_OK


def cmd_fit_mu(rc: RunConfig, args) -> int:
    from .bench import dataset_from_path
    from .workload import fit_mu, gen_many_criteria, gen_similarity, save_mu

    estimates = []
    for p in rc.inputs:
        ds = dataset_from_path(p)
        gen = gen_similarity if args.kind == "similarity" else gen_many_criteria
        queries = gen([ds], args.queries, rc.seed)
        est = fit_mu(ds.tag, [wq.threshold_query(ds.index) for wq in queries])
        estimates.append(est)
        print(f"{ds.tag}: mu = {est.mu:.6g} over {est.sample_count} queries")
    save_mu(estimates, _out(rc))
    return EXIT_OK


COMMANDS = {
    "index": cmd_index,
    "query": cmd_query,
    "bench": cmd_bench,
    "fit": cmd_fit,
    "fit-mu": cmd_fit_mu,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--reps", type=int, default=3)
    common.add_argument("--algo", choices=ALGORITHM_IDS, default="rbmrg")
    common.add_argument("--threshold", "-T", type=int)
    common.add_argument("--verify", action="store_true", help="check the result against the oracle")
    common.add_argument("--out", "-o", type=Path)
    common.add_argument("--coeffs", type=Path, help="cost-model coefficient file for --algo hybrid")
    common.add_argument("--mu", type=Path, help="mu file for --algo dsk")
    common.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET,
                        help="w2cti entry budget")

    p = argparse.ArgumentParser(prog="ewthresh", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("index", parents=[common], help="build a bitmap index from a CSV file")
    s.add_argument("csv", type=Path)

    s = sub.add_parser("query", parents=[common], help="run a threshold query on an index")
    s.add_argument("index", type=Path)
    s.add_argument("--criteria", "-c", action="append", help="attr=value[,attr=value...]")
    s.add_argument("--prototypes", "-p", action="append", help="row ids for a similarity query")
    s.add_argument("--count", action="store_true", help="print only the number of matches")
    s.add_argument("--ds-table", type=Path, help="JSON dataset -> algorithm table for hybrid-ds")

    s = sub.add_parser("bench", parents=[common], help="generate a workload and time all algorithms")
    s.add_argument("indexes", type=Path, nargs="+")
    s.add_argument("--kind", choices=("many_criteria", "similarity"), default="many_criteria")
    s.add_argument("--queries", "-n", type=int, default=100)
    s.add_argument("--no-timing", dest="timing", action="store_false",
                   help="only write the workload file")

    s = sub.add_parser("fit", parents=[common], help="fit cost-model coefficients to a timing table")
    s.add_argument("timings", type=Path)

    s = sub.add_parser("fit-mu", parents=[common], help="tune the DSk mu parameter per dataset")
    s.add_argument("indexes", type=Path, nargs="+")
    s.add_argument("--kind", choices=("many_criteria", "similarity"), default="many_criteria")
    s.add_argument("--queries", "-n", type=int, default=20)
    return p


def _config(args) -> RunConfig:
    inputs = {
        "index": [args.csv] if args.command == "index" else None,
        "query": [getattr(args, "index", None)],
        "bench": getattr(args, "indexes", None),
        "fit": [getattr(args, "timings", None)],
        "fit-mu": getattr(args, "indexes", None),
    }[args.command]
    return RunConfig(
        command=args.command,
        inputs=list(inputs),
        out=args.out,
        algo=args.algo,
        threshold=args.threshold,
        seed=args.seed,
        reps=args.reps,
        memory_budget=args.memory_budget,
        coeffs=args.coeffs,
        mu=args.mu,
        verify=args.verify,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = _config(args)
        return COMMANDS[args.command](rc, args)
    except (UsageError, ThresholdError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DataError, IngestionError, IndexFormatError, BitmapFormatError, QueryError,
            ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
