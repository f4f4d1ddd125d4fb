"""Generate tables, index them, benchmark both workloads and refit the cost model."""

from __future__ import annotations

import argparse
from pathlib import Path

from ewthresh.cli import main as cli
from make_synthetic_csv import TableConfig, write_tables


def pipeline(out: Path, rows: int, queries: int, reps: int, seed: int) -> int:
    csvs = write_tables(TableConfig(rows=rows, seed=seed), out / "tables")
    indexes = []
    for c in csvs:
        ix = out / f"{c.stem}.ewix"
        if code := cli(["index", str(c), "-o", str(ix)]):
            return code
        indexes.append(str(ix))
    for kind in ("many_criteria", "similarity"):
        code = cli(["bench", *indexes, "--kind", kind, "-n", str(queries), "--reps", str(reps),
                    "--seed", str(seed), "-o", str(out / kind)])
        if code:
            return code
        # a fit may legitimately fail on small, noisy runs; report and continue
        cli(["fit", str(out / kind / "timings.csv"), "-o", str(out / kind / "coeffs.json")])
    return 0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("-n", "--queries", type=int, default=20)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    raise SystemExit(pipeline(a.out, a.rows, a.queries, a.reps, a.seed))


if __name__ == "__main__":
    main()
