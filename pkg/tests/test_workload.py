import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ewthresh.bitmap import CompressedBitmap
from ewthresh.index import Table, build_index
from ewthresh.synth import random_table, text_like_table
from ewthresh.threshold import DEFAULT_COEFFS, ModelCoefficients, ThresholdQuery, scan_count
from ewthresh.threshold.merge import set_aside_count
from ewthresh.workload import (
    SIMILARITY_SIZES,
    Dataset,
    DatasetTooSmallError,
    FittingError,
    GenerationError,
    MuEstimate,
    TimingRecord,
    WorkloadQuery,
    aggregate_throughput,
    assign_slowest,
    candidate_set_asides,
    draw_log_uniform_n,
    draw_similarity_size,
    fit_coefficients,
    fit_mu,
    gen_many_criteria,
    gen_similarity,
    query_rng,
    read_timings,
    read_workload,
    resample_threshold,
    synthetic_records,
    write_timings,
    write_workload,
)


@pytest.fixture(scope="module")
def datasets():
    rng = np.random.default_rng(7)
    return [
        Dataset("census", build_index(random_table(rng, 2000, 12, max_cardinality=8))),
        Dataset("narrow", build_index(random_table(rng, 800, 5, max_cardinality=3))),
        Dataset("text", build_index(text_like_table(rng, 600)), relational=False),
    ]


def rec(qid, algo, elapsed, size=10**6, completed=True, **kw):
    base = dict(N=10, T=3, r=1000, B=500)
    base.update(kw)
    return TimingRecord(qid, algo, elapsed, size, completed=completed, **base)


# ---- generation -----------------------------------------------------------

def test_many_criteria_deterministic(datasets):
    a = gen_many_criteria(datasets, 15, seed=11)
    b = gen_many_criteria(datasets, 15, seed=11)
    assert [q.to_json() for q in a] == [q.to_json() for q in b]
    assert [q.to_json() for q in gen_many_criteria(datasets, 15, seed=12)] != [q.to_json() for q in a]


def test_many_criteria_shape(datasets):
    by_tag = {d.tag: d for d in datasets}
    for q in gen_many_criteria(datasets, 30, seed=3):
        assert q.dataset_tag in ("census", "narrow")  # text is not relational
        ix = by_tag[q.dataset_tag].index
        assert q.N <= len(ix.attributes)
        n_attr = len({a for a, _ in q.bitmap_refs})
        assert 2 <= q.T <= n_attr - 1
        assert not scan_count(q.threshold_query(ix)).is_empty()


def test_log_uniform_median_below_mean():
    rng = query_rng(1, 0, 0)
    draws = np.array([draw_log_uniform_n(rng) for _ in range(100_000)])
    assert draws.min() >= 3 and draws.max() <= 1000
    assert np.median(draws) < draws.mean()
    assert abs(np.median(draws) - math.sqrt(3000)) < 3


def test_similarity_sizes_uniform():
    rng = query_rng(2, 0, 0)
    n = 10_000
    draws = [draw_similarity_size(rng) for _ in range(n)]
    sigma = math.sqrt(n * 0.2 * 0.8)
    for size in SIMILARITY_SIZES:
        assert abs(draws.count(size) - n * 0.2) < 3 * sigma


def test_similarity_queries(datasets):
    by_tag = {d.tag: d for d in datasets}
    qs = gen_similarity(datasets, 25, seed=5)
    assert {q.dataset_tag for q in qs} <= set(by_tag)
    for q in qs:
        ix = by_tag[q.dataset_tag].index
        rows = q.seed_trace["prototype_rows"]
        assert len(rows) == q.n and len(set(rows)) == q.n
        for ref in q.bitmap_refs:
            assert any(ix[ref].contains(p) for p in rows)
        assert 2 <= q.T <= q.N - 1
        assert not scan_count(q.threshold_query(ix)).is_empty()


def test_similarity_dataset_too_small():
    ix = build_index(Table(["a", "b", "c"], [["x", "y", "z"]]))
    with pytest.raises(DatasetTooSmallError):
        # n > 1 cannot be drawn from one row; some attempt draws n >= 5
        gen_similarity([Dataset("tiny", ix)], 5, seed=0)


def test_generation_gives_up_with_diagnostics():
    # two attributes can never give three distinct criteria attributes
    ix = build_index(Table(["a", "b"], [["x", "y"], ["x", "z"]]))
    with pytest.raises(GenerationError) as err:
        gen_many_criteria([Dataset("two", ix)], 1, seed=0, max_attempts=5)
    assert err.value.diagnostics["discards"]


def test_generation_needs_dataset():
    with pytest.raises(GenerationError):
        gen_many_criteria([], 3, seed=0)


def test_workload_file_round_trip(datasets, tmp_path):
    qs = gen_similarity(datasets, 5, seed=9) + gen_many_criteria(datasets, 5, seed=9)
    write_workload(qs, tmp_path / "w.jsonl")
    assert read_workload(tmp_path / "w.jsonl") == qs


# ---- resampling ---------------------------------------------------------------

def _wq(T):
    return WorkloadQuery("q", "many_criteria", "d", (("a", "1"),) * 12, T)


def test_resample_range():
    rng = query_rng(0, 0, 0)
    seen = {resample_threshold(_wq(10), rng).T for _ in range(2000)}
    assert seen == set(range(2, 10))


def test_resample_discard_at_two():
    assert resample_threshold(_wq(2), query_rng(0, 0, 0)) is None


def test_resample_non_empty_unchanged():
    q = _wq(7)
    assert resample_threshold(q, query_rng(0, 0, 0), empty=False) is q


# ---- mu ---------------------------------------------------------------------------

def test_candidates_t30():
    assert candidate_set_asides(30) == sorted(
        {25, 26, 27, 28, 29} | {2, 4, 5, 7, 8, 10, 12, 13, 15, 16, 18, 20, 21, 23, 24})


def test_candidates_small():
    assert candidate_set_asides(5) == [1, 2, 3, 4]
    assert candidate_set_asides(20) == list(range(1, 20))
    assert candidate_set_asides(21) == list(range(1, 21))


def _full_query(T, n, M=1024):
    big = CompressedBitmap.from_positions(range(M), M)
    return ThresholdQuery([big] * n, T)


def test_fit_mu_picks_fastest_per_query():
    # M = 1024, log2 M = 10. T=5: L=4 -> mu 0.025. T=9: L=3 -> mu 0.2
    winners = {5: 4, 9: 3}
    tried = []

    def runner(query, mu):
        L = set_aside_count(query.T, mu, 1024)
        tried.append((query.T, L))
        return 0.0 if L == winners[query.T] else 1.0

    est = fit_mu("d", [_full_query(5, 6), _full_query(9, 10)], runner=runner)
    assert est == MuEstimate("d", pytest.approx((0.025 + 0.2) / 2), 2)
    assert tried == [(5, L) for L in range(1, 5)] + [(9, L) for L in range(1, 9)]


def test_fit_mu_arithmetic_mean():
    # T=13, L=10 gives mu 0.03; T=3, L=2 gives mu 0.05
    rule = {13: [10], 3: [2]}.get
    qs = [_full_query(13, 13), _full_query(3, 4)]
    est = fit_mu("d", qs, candidate_rule=rule, runner=lambda q, mu: 1.0)
    assert est.mu == pytest.approx(0.04) and est.sample_count == 2


def test_fit_mu_needs_queries():
    with pytest.raises(FittingError):
        fit_mu("d", [])


def test_fit_mu_real_runner(datasets):
    ds = datasets[0]
    qs = [q.threshold_query(ds.index) for q in gen_many_criteria([ds], 3, seed=1)]
    est = fit_mu(ds.tag, qs)
    assert est.mu > 0 and est.sample_count >= 1


# ---- timing records, throughput, imputation ----------------------------------------

def test_record_validation():
    with pytest.raises(ValueError):
        rec("q", "rbmrg", 0.0)
    with pytest.raises(ValueError):
        rec("q", "rbmrg", 1.0, size=0)
    assert not rec("q", "w2cti", math.nan, completed=False).completed


def test_harmonic_mean_examples():
    # throughput = input_bytes / 1e6 / elapsed
    two = [rec("a", "x", 0.5), rec("b", "x", 0.5)]
    assert aggregate_throughput(two)[("x", "")] == pytest.approx(2.0)
    mixed = [rec("a", "x", 1.0), rec("b", "x", 1 / 3)]
    assert aggregate_throughput(mixed)[("x", "")] == pytest.approx(1.5)
    assert aggregate_throughput(mixed, reciprocal=True)[("x", "")] == pytest.approx(1 / 1.5)


@given(st.lists(st.floats(1e-4, 10.0), min_size=1, max_size=20))
def test_harmonic_mean_formula(elapsed):
    recs = [rec(f"q{i}", "x", e) for i, e in enumerate(elapsed)]
    xs = [1.0 / e for e in elapsed]
    hm = aggregate_throughput(recs)[("x", "")]
    assert hm == pytest.approx(len(xs) / sum(1 / x for x in xs))
    assert hm <= np.mean(xs) * (1 + 1e-9)


def test_harmonic_mean_groups():
    recs = [rec("a", "x", 1.0), rec("b", "x", 0.5), rec("a", "y", 2.0)]
    out = aggregate_throughput(recs, {"a": "d1", "b": "d2"})
    assert set(out) == {("x", "d1"), ("x", "d2"), ("y", "d1")}


def test_throughput_rejects_incomplete():
    with pytest.raises(ValueError):
        aggregate_throughput([rec("a", "w2cti", math.nan, completed=False)])


def test_assign_slowest():
    recs = [rec("q", "rbmrg", 0.003), rec("q", "looped", 0.007),
            rec("q", "w2cti", math.nan, completed=False)]
    out = assign_slowest(recs)
    assert out[2].elapsed_s == 0.007 and out[2].imputed and out[2].completed
    assert out[:2] == recs[:2]


def test_assign_slowest_unchanged_and_pairs():
    done = [rec("q", "a", 0.1), rec("q", "b", 0.2)]
    assert assign_slowest(done) == done
    two = done + [rec("q", "c", math.nan, completed=False), rec("q", "d", math.nan, completed=False)]
    out = assign_slowest(two)
    assert out[2].elapsed_s == out[3].elapsed_s == 0.2


def test_assign_slowest_excludes(caplog):
    assert assign_slowest([rec("q", "a", math.nan, completed=False)]) == []
    assert "no algorithm completed" in caplog.text


def test_timing_table_round_trip(tmp_path):
    recs = assign_slowest([rec("q1", "rbmrg", 0.25), rec("q1", "w2cti", math.nan, completed=False)])
    write_timings(recs, tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "query_id,algo,elapsed_s,input_bytes,N,T,r,B,completed"
    assert read_timings(tmp_path / "t.csv") == recs


# ---- coefficient fitting -------------------------------------------------------------

def test_fit_recovers_planted():
    planted = ModelCoefficients(3.1e-5, 4.7e-6, 2.2e-6, 9.9e-5, 1.1e-6)
    fitted = fit_coefficients(synthetic_records(planted, np.random.default_rng(0)))
    for name, v in vars(planted).items():
        assert abs(getattr(fitted, name) - v) / v < 1e-9


def test_fit_single_looped_point():
    recs = synthetic_records(DEFAULT_COEFFS, np.random.default_rng(1), count=3)
    recs = [r for r in recs if r.algo != "looped"]
    recs.append(TimingRecord("one", "looped", 0.5, 1000, 10, 4, 100, 50))
    assert fit_coefficients(recs).c_looped == pytest.approx(0.5 / (4 * 1000), rel=1e-12)


def test_fit_ignores_imputed():
    recs = synthetic_records(DEFAULT_COEFFS, np.random.default_rng(2), count=10)
    bogus = TimingRecord("x", "rbmrg", 1e6, 1000, 10, 4, 100, 50, imputed=True)
    fitted = fit_coefficients(recs + [bogus])
    assert fitted.c_rbmrg == pytest.approx(DEFAULT_COEFFS.c_rbmrg, rel=1e-9)


def test_fit_missing_algorithm():
    recs = [r for r in synthetic_records(DEFAULT_COEFFS, np.random.default_rng(3), 5) if r.algo != "bstm"]
    with pytest.raises(FittingError):
        fit_coefficients(recs)


def test_fit_degenerate_scancount():
    base = [r for r in synthetic_records(DEFAULT_COEFFS, np.random.default_rng(4), 5) if r.algo != "scancount"]
    # identical (r, B) rows make the two ScanCount terms inseparable
    sc = [TimingRecord(f"s{i}", "scancount", 1.0, 100, 5, 2, 1000, 10) for i in range(4)]
    with pytest.raises(FittingError):
        fit_coefficients(base + sc)
