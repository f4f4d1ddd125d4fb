import csv
import json
import math

import numpy as np
import pytest

from conftest import PEOPLE_CSV
from ewthresh.bench import BenchConfig, VerificationError, bench_query, bench_workload, summarize
from ewthresh.cli import EXIT_DATA, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, RunConfig, UsageError, main
from ewthresh.index import BitmapIndex, build_index, write_csv
from ewthresh.synth import random_table
from ewthresh.threshold import CORE_ALGORITHMS, ModelCoefficients
from ewthresh.workload import Dataset, gen_many_criteria, read_timings, synthetic_records, write_timings


@pytest.fixture
def people_csv(tmp_path):
    p = tmp_path / "people.csv"
    p.write_text(PEOPLE_CSV)
    return p


@pytest.fixture
def people_index(tmp_path, people_csv):
    out = tmp_path / "people.ewix"
    assert main(["index", str(people_csv), "--out", str(out)]) == EXIT_OK
    return out


@pytest.fixture
def synth_indexes(tmp_path):
    paths = []
    for i, (rows, attrs) in enumerate([(1500, 9), (900, 6)]):
        t = random_table(np.random.default_rng(i), rows, attrs, max_cardinality=6)
        p = tmp_path / f"ds{i}.ewix"
        build_index(t).save(p)
        paths.append(p)
    return paths


# ---- index ------------------------------------------------------------------

def test_cli_index_reports(people_csv, tmp_path, capsys):
    out = tmp_path / "x.ewix"
    assert main(["index", str(people_csv), "-o", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "rows: 7" in text and "attributes: 2" in text and "bitmaps: 9" in text
    ix = BitmapIndex.load(out)
    assert f"ewah_bytes: {ix.total_ewah_size()}" in text


def test_cli_index_empty_body(tmp_path, capsys):
    p = tmp_path / "e.csv"
    p.write_text("a,b\n")
    assert main(["index", str(p), "-o", str(tmp_path / "e.ewix")]) == EXIT_DATA
    assert "no data rows" in capsys.readouterr().err


def test_cli_index_ragged_line(tmp_path, capsys):
    p = tmp_path / "r.csv"
    p.write_text("a,b\n1,2\n3,4,5\n")
    assert main(["index", str(p), "-o", str(tmp_path / "r.ewix")]) == EXIT_DATA
    assert "line 3" in capsys.readouterr().err


def test_cli_index_missing_file(tmp_path):
    assert main(["index", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "o")]) == EXIT_DATA


def test_cli_index_round_trip_large(tmp_path):
    t = random_table(np.random.default_rng(3), 100_000, 4, max_cardinality=50)
    csv_path = tmp_path / "big.csv"
    write_csv(t, csv_path)
    out = tmp_path / "big.ewix"
    assert main(["index", str(csv_path), "-o", str(out)]) == EXIT_OK
    data = out.read_bytes()
    assert BitmapIndex.from_bytes(data).to_bytes() == data
    assert BitmapIndex.load(out) == build_index(t)


# ---- query --------------------------------------------------------------------

def test_cli_query_people(people_index, capsys):
    code = main(["query", str(people_index), "-c", "City=Montreal,City=Toronto", "-T", "1",
                 "--algo", "rbmrg"])
    assert code == EXIT_OK
    assert capsys.readouterr().out.split() == ["0", "1", "2", "3", "4", "6"]


@pytest.mark.parametrize("algo", CORE_ALGORITHMS + ("hybrid", "oracle"))
def test_cli_query_every_algo(synth_indexes, capsys, algo):
    args = ["query", str(synth_indexes[0]), "-c", "a0=v0,a1=v0,a2=v0,a3=v1,a4=v0", "-T", "3"]
    assert main(args + ["--algo", "oracle"]) == EXIT_OK
    expect = capsys.readouterr().out
    assert main(args + ["--algo", algo, "--verify"]) == EXIT_OK
    assert capsys.readouterr().out == expect


def test_cli_query_hybrid_ds(synth_indexes, tmp_path, capsys):
    table = tmp_path / "ds.json"
    table.write_text(json.dumps({"ds0": "looped", "default": "rbmrg"}))
    args = ["query", str(synth_indexes[0]), "-c", "a0=v0,a1=v0,a2=v0", "-T", "2"]
    assert main(args + ["--algo", "hybrid-ds", "--ds-table", str(table), "--verify"]) == EXIT_OK
    assert main(args + ["--algo", "hybrid-ds"]) == EXIT_USAGE


def test_cli_query_count(people_index, capsys):
    assert main(["query", str(people_index), "-c", "City=Toronto", "-T", "1", "--count"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "4"


def test_cli_query_empty_result_ok(people_index, capsys):
    code = main(["query", str(people_index), "-c", "City=Montreal,City=Toronto", "-T", "2"])
    assert code == EXIT_OK and capsys.readouterr().out.strip() == ""


def test_cli_query_prototypes(people_index, capsys):
    assert main(["query", str(people_index), "-p", "0", "-T", "1"]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["0", "1"]


def test_cli_query_missing_value_is_noted(people_index, capsys):
    assert main(["query", str(people_index), "-c", "City=Vancouver", "-T", "1"]) == EXIT_OK
    assert "Vancouver" in capsys.readouterr().err


def test_cli_query_usage_errors(people_index, capsys):
    base = ["query", str(people_index)]
    assert main(base + ["-c", "City=Paris", "-T", "2"]) == EXIT_USAGE
    assert main(base + ["-c", "City=Paris"]) == EXIT_USAGE
    assert main(base + ["-T", "1"]) == EXIT_USAGE
    assert main(base + ["-c", "Paris", "-T", "1"]) == EXIT_DATA
    with pytest.raises(SystemExit) as err:
        main(base + ["-c", "City=Paris", "-T", "1", "--algo", "nope"])
    assert err.value.code == EXIT_USAGE


def test_cli_query_unknown_attribute(people_index):
    assert main(["query", str(people_index), "-c", "Age=3", "-T", "1"]) == EXIT_DATA


def test_cli_resource_error(synth_indexes):
    args = ["query", str(synth_indexes[0]), "-c", "a0=v0,a1=v0,a2=v0", "-T", "2",
            "--algo", "w2cti", "--memory-budget", "3"]
    assert main(args) == EXIT_RESOURCE


def test_run_config_validation(tmp_path):
    with pytest.raises(UsageError):
        RunConfig("query", algo="nope")
    with pytest.raises(UsageError):
        RunConfig("bench", reps=0)


# ---- bench ---------------------------------------------------------------------

def test_cli_bench_deterministic_workload(synth_indexes, tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"b{k}"
        args = ["bench", *map(str, synth_indexes), "-n", "6", "--seed", "4", "--reps", "1", "-o", str(out)]
        assert main(args) == EXIT_OK
        outs.append(out)
    assert (outs[0] / "workload.jsonl").read_bytes() == (outs[1] / "workload.jsonl").read_bytes()
    recs = read_timings(outs[0] / "timings.csv")
    algos = set(CORE_ALGORITHMS) | {"hybrid"}
    assert {r.algo for r in recs} == algos
    with open(outs[0] / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    datasets = {json.loads(line)["dataset_tag"] for line in (outs[0] / "workload.jsonl").read_text().splitlines()}
    assert {(r["algo"], r["dataset"]) for r in rows} == {(a, d) for a in algos for d in datasets}
    reps = (outs[0] / "repetitions.csv").read_text().splitlines()
    assert reps[0] == "query_id,algo,rep,elapsed_s" and len(reps) > 1


def test_bench_imputes_resource_failures(synth_indexes):
    ds = Dataset("ds0", BitmapIndex.load(synth_indexes[0]))
    queries = gen_many_criteria([ds], 2, seed=1)
    cfg = BenchConfig(reps=1, memory_budget=2)
    recs, _ = bench_workload(queries, {"ds0": ds}, cfg)
    w = [r for r in recs if r.algo == "w2cti"]
    assert w and all(r.imputed for r in w)
    for q in queries:
        mine = [r for r in recs if r.query_id == q.query_id]
        assert max(r.elapsed_s for r in mine if not r.imputed) == next(r.elapsed_s for r in mine if r.algo == "w2cti")
    assert len(summarize(recs, queries)) == 8


def test_bench_oracle_gate(synth_indexes, monkeypatch):
    import ewthresh.bench as bench

    ds = Dataset("ds0", BitmapIndex.load(synth_indexes[0]))
    wq = gen_many_criteria([ds], 1, seed=2)[0]
    real = bench.make_runner

    def broken(algo, cfg, tag):
        if algo == "looped":
            from ewthresh.bitmap import CompressedBitmap

            return lambda q: CompressedBitmap.empty(q.r)
        return real(algo, cfg, tag)

    monkeypatch.setattr(bench, "make_runner", broken)
    with pytest.raises(VerificationError):
        bench_query(wq, ds, BenchConfig(reps=1))


# ---- fit, fit-mu ----------------------------------------------------------------

def test_cli_fit_recovers(tmp_path, capsys):
    planted = ModelCoefficients(2.0e-5, 3.0e-6, 1.5e-6, 3.0e-5, 1.6e-6)
    write_timings(synthetic_records(planted, np.random.default_rng(9)), tmp_path / "t.csv")
    assert main(["fit", str(tmp_path / "t.csv"), "-o", str(tmp_path / "c.json")]) == EXIT_OK
    fitted = ModelCoefficients.load(tmp_path / "c.json")
    for name, v in vars(planted).items():
        assert math.isclose(getattr(fitted, name), v, rel_tol=1e-9)
        assert getattr(fitted, name) > 0


def test_cli_fit_insufficient(tmp_path):
    recs = [r for r in synthetic_records(ModelCoefficients(), np.random.default_rng(1), 3) if r.algo != "bstm"]
    write_timings(recs, tmp_path / "t.csv")
    assert main(["fit", str(tmp_path / "t.csv"), "-o", str(tmp_path / "c.json")]) == EXIT_DATA


def test_cli_coeffs_drive_hybrid(synth_indexes, tmp_path, capsys):
    ModelCoefficients().save(tmp_path / "c.json")
    args = ["query", str(synth_indexes[0]), "-c", "a0=v0,a1=v0,a2=v0", "-T", "2",
            "--algo", "hybrid", "--coeffs", str(tmp_path / "c.json"), "--verify"]
    assert main(args) == EXIT_OK


def test_cli_fit_mu_round_trip(synth_indexes, tmp_path, capsys):
    mu_path = tmp_path / "mu.json"
    assert main(["fit-mu", str(synth_indexes[0]), "-n", "2", "-o", str(mu_path)]) == EXIT_OK
    data = json.loads(mu_path.read_text())
    assert data["ds0"]["mu"] > 0
    args = ["query", str(synth_indexes[0]), "-c", "a0=v0,a1=v0,a2=v0,a3=v0", "-T", "2",
            "--algo", "dsk", "--mu", str(mu_path), "--verify"]
    assert main(args) == EXIT_OK


def test_module_entry_point(people_index):
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "ewthresh", "query", str(people_index),
                          "-c", "City=Paris", "-T", "1"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.split() == ["5"]
