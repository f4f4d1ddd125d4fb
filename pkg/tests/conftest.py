import io

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ewthresh.bitmap import CompressedBitmap
from ewthresh.index import read_csv

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PEOPLE_CSV = (
    "Name,City\n"
    "John,Montreal\nPeter,Montreal\nJack,Toronto\nJack,Toronto\n"
    "Jill,Toronto\nLucy,Paris\nMary,Toronto\n"
)


def three_bitmap_inputs():
    # one string per bitmap, character i = position i
    return [CompressedBitmap.from_string(s) for s in ("00110010", "10110000", "11100010")]


@pytest.fixture
def three_bitmaps():
    return three_bitmap_inputs()


@pytest.fixture
def people_table():
    return read_csv(io.StringIO(PEOPLE_CSV))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@st.composite
def bool_vectors(draw, max_size=600):
    """Bit vectors with long runs as well as noise, so fills and dirty words both occur."""
    size = draw(st.integers(0, max_size))
    chunks = draw(st.lists(
        st.tuples(st.sampled_from(["zeros", "ones", "noise"]), st.integers(1, 200)),
        max_size=8,
    ))
    seed = draw(st.integers(0, 2**32 - 1))
    r = np.random.default_rng(seed)
    parts = []
    for kind, n in chunks:
        if kind == "zeros":
            parts.append(np.zeros(n, bool))
        elif kind == "ones":
            parts.append(np.ones(n, bool))
        else:
            parts.append(r.random(n) < 0.3)
    v = np.concatenate(parts) if parts else np.zeros(0, bool)
    v = np.resize(v, size) if len(v) else np.zeros(size, bool)
    return v


@st.composite
def bitmap_lists(draw, min_n=1, max_n=8, max_size=400):
    n = draw(st.integers(min_n, max_n))
    vecs = [draw(bool_vectors(max_size)) for _ in range(n)]
    return [CompressedBitmap.from_bools(v) for v in vecs]


# (label, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label, passed, detail in sorted(ACCEPTANCE, key=lambda row: _criterion_key(row[0])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")


def _criterion_key(label):
    num = label.split()[1]
    digits = "".join(ch for ch in num if ch.isdigit())
    return int(digits), num
