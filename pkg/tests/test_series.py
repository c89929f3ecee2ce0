import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilimit.series import (CapError, DomainMismatchError, IndexDomain, PrefixSumTable, QuadrantTables,
                            RangeOrderError, TermSource, abs_partial_sum, block_sum, build_table, col_partial,
                            from_array, partial_sum, row_partial, symmetric_partial_sum)
from bilimit.zoo import fixture


def src(fid):
    return fixture(fid).source


def brute(source, m, n):
    return sum(source(j, k) for j in range(m + 1) for k in range(n + 1))


small_arrays = st.integers(1, 7).flatmap(lambda r: st.integers(1, 7).flatmap(
    lambda c: st.lists(st.integers(-9, 9), min_size=r * c, max_size=r * c).map(
        lambda xs: np.array(xs, dtype=float).reshape(r, c))))


def test_partial_sum_examples():
    assert partial_sum(build_table(src("ex1"), 8), 3, 3) == 0
    assert partial_sum(build_table(src("ex3"), 8), 2, 2) == 0.5
    t = build_table(src("geometric"), 8)
    assert partial_sum(t, -1, 5) == 0
    assert partial_sum(t, 5, -1) == 0


def test_block_sum_examples():
    assert block_sum(build_table(src("ex4"), 8), 1, 1, 6, 6) == 0
    t = build_table(src("fig6"), 8)
    assert block_sum(t, 2, 3, 2, 3) == src("fig6")(2, 3)
    t5 = build_table(src("ex5"), 8)
    # a[5,6] = -1/6 cancels a[5,5] inside (0,0,5,6); the 1/6 residue belongs to (0,0,5,5)
    assert block_sum(t5, 0, 0, 5, 6) == pytest.approx(0, abs=1e-15)
    assert block_sum(t5, 0, 0, 5, 5) == pytest.approx(1 / 6, abs=1e-15)


def test_errors():
    t = build_table(src("ex1"), 8)
    with pytest.raises(CapError, match="8"):
        partial_sum(t, 9, 0)
    with pytest.raises(RangeOrderError):
        block_sum(t, 3, 0, 2, 4)
    with pytest.raises(DomainMismatchError):
        src("ex1")(-1, 0)
    with pytest.raises(DomainMismatchError):
        symmetric_partial_sum(src("ex1"), 2, 2)


def test_row_col_partials():
    assert row_partial(src("ex2"), 0, 1) == 0
    for j in range(6):
        assert row_partial(src("fig6"), j, 0) == src("fig6")(j, 0)
        assert col_partial(src("fig6"), j, 0) == src("fig6")(0, j)
    for q in range(10):
        assert row_partial(src("fig6"), 0, 2 * q + 1) == pytest.approx(0, abs=1e-15)


def test_abs_partial_sum():
    assert abs_partial_sum(build_table(src("ex5"), 8), 1, 2) == pytest.approx(3)
    assert abs_partial_sum(build_table(src("zero"), 8), 5, 5) == 0
    # brute force over the 6x6 corner: rows 0 and 1 give 2*(1+1+2+2+3+3), columns 0 and 1 of rows 2..5 give 20
    ex1 = build_table(src("ex1"), 8)
    assert abs_partial_sum(ex1, 5, 5) == 44
    assert abs_partial_sum(ex1, 5, 5) == sum(abs(src("ex1")(j, k)) for j in range(6) for k in range(6))


def test_symmetric_sums():
    delta = TermSource(lambda j, k: 1.0 if (j, k) == (0, 0) else 0.0, IndexDomain.INT, "delta")
    odd = TermSource(lambda j, k: float(np.sign(j)), IndexDomain.INT, "odd")
    box = TermSource(lambda j, k: 1.0 if abs(j) <= 1 and abs(k) <= 1 else 0.0, IndexDomain.INT, "box")
    assert symmetric_partial_sum(delta, 3, 3) == 1
    assert symmetric_partial_sum(odd, 5, 5) == 0
    assert symmetric_partial_sum(box, 1, 1) == 9
    for s in (delta, odd, box):
        q = QuadrantTables(s, 6, 6)
        for m in range(6):
            for n in range(6):
                assert q.symmetric_partial_sum(m, n) == symmetric_partial_sum(s, m, n)
    q = QuadrantTables(box, 6, 6)
    assert q.symmetric_block_sum(1, 1, 1, 1) == 4
    assert q.symmetric_block_sum(0, 0, 6, 6) == 9


@pytest.mark.parametrize("fid", ["ex1", "ex2", "ex3", "ex4", "ex5", "fig6"])
def test_table_matches_direct_summation(fid):
    t = build_table(src(fid), 12)
    for m in range(13):
        for n in range(13):
            assert t.partial_sum(m, n) == pytest.approx(brute(src(fid), m, n), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(small_arrays)
def test_recurrence_and_boundary(a):
    t = PrefixSumTable.from_terms(a)
    s = t.padded
    assert np.all(s[0, :] == 0) and np.all(s[:, 0] == 0)
    r, c = a.shape
    for m in range(r):
        for n in range(c):
            assert s[m + 1, n + 1] == s[m, n + 1] + s[m + 1, n] - s[m, n] + a[m, n]


@settings(max_examples=60, deadline=None)
@given(small_arrays, st.data())
def test_block_additivity(a, data):
    t = PrefixSumTable.from_terms(a)
    r, c = a.shape
    m = data.draw(st.integers(0, r - 1))
    M = data.draw(st.integers(m, r - 1))
    n = data.draw(st.integers(0, c - 1))
    N = data.draw(st.integers(n, c - 1))
    assert t.block_sum(m, n, M, N) == a[m:M + 1, n:N + 1].sum()
    split = data.draw(st.integers(m, M))
    left = t.block_sum(m, n, split, N)
    right = t.block_sum(split + 1, n, M, N) if split < M else 0
    assert left + right == pytest.approx(t.block_sum(m, n, M, N))


@settings(max_examples=40, deadline=None)
@given(small_arrays)
def test_abs_sums_monotone(a):
    t = PrefixSumTable.from_terms(a)
    r, c = a.shape
    vals = np.array([[abs_partial_sum(t, m, n) for n in range(c)] for m in range(r)])
    assert np.all(np.diff(vals, axis=0) >= 0) and np.all(np.diff(vals, axis=1) >= 0)
    assert np.all(np.abs(t.sums) <= vals + 1e-12)


def test_deterministic_and_readonly():
    a = build_table(src("fig6"), 16)
    b = build_table(src("fig6"), 16)
    assert np.array_equal(a.padded, b.padded)
    with pytest.raises(ValueError):
        a.padded[1, 1] = 5


def test_from_array_zero_outside():
    s = from_array([[1, 2], [3, 4]])
    assert s(5, 5) == 0 and s(1, 0) == 3
    assert build_table(s, 4).partial_sum(4, 4) == 10
