"""Write synthetic relational and text-like CSV tables for benchmarking."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ewthresh.index import write_csv
from ewthresh.synth import random_table, text_like_table


@dataclass(frozen=True)
class TableConfig:
    rows: int = 50_000
    attributes: int = 12
    max_cardinality: int = 40
    skew: float = 1.2
    vocab: int = 800
    slots: int = 8
    seed: int = 0


def write_tables(cfg: TableConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    rel = random_table(rng, cfg.rows, cfg.attributes, max_cardinality=cfg.max_cardinality, skew=cfg.skew)
    txt = text_like_table(rng, cfg.rows, vocab=cfg.vocab, slots=cfg.slots)
    paths = [out / "relational.csv", out / "textlike.csv"]
    write_csv(rel, paths[0])
    write_csv(txt, paths[1])
    return paths


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--rows", type=int, default=TableConfig.rows)
    ap.add_argument("--attributes", type=int, default=TableConfig.attributes)
    ap.add_argument("--seed", type=int, default=TableConfig.seed)
    a = ap.parse_args()
    for p in write_tables(TableConfig(rows=a.rows, attributes=a.attributes, seed=a.seed), a.out):
        print(p)


if __name__ == "__main__":
    main()
