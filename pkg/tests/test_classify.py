import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilimit.classify import (ClassifierConfig, ConfigError, classify_absolute, classify_pringsheim,
                              classify_regular, classify_sequence, row_col_verdicts, sequence_iterated_limits,
                              sequence_to_terms, successive_sum_check)
from bilimit.series import PrefixSumTable, build_table
from bilimit.verdict import PreconditionError, Status, Verdict
from bilimit.zoo import fixture

C, D = Status.CONVERGES, Status.DIVERGES


def table(fid, cap):
    return build_table(fixture(fid).source, cap)


def cfg(eps, cap, **kw):
    return ClassifierConfig(eps=eps, cap_m=cap, cap_n=cap, **kw)


def test_pringsheim_examples():
    v = classify_pringsheim(table("ex1", 64), cfg(1e-9, 64))
    assert v.status is C and v.limit == 0
    v = classify_pringsheim(table("ex2", 64), cfg(0.5, 64))
    assert v.status is D
    p0, p1 = v.witness
    t = table("ex2", 64)
    assert min(p0) >= 8 and abs(t.partial_sum(*p0) - t.partial_sum(*p1)) >= 0.5
    assert classify_pringsheim(table("ex4", 64), cfg(0.5, 64)).status is D


def test_regular_examples():
    assert classify_regular(table("ex5", 128), cfg(1e-2, 128)).status is C
    v = classify_regular(table("ex1", 64), cfg(0.5, 64))
    assert v.status is D
    m, n, M, N = v.witness
    assert m == M and n == N  # a single unbounded term
    assert abs(v.witness_value) > 1
    assert classify_regular(table("ex3", 64), cfg(0.5, 64)).status is D


def test_absolute_examples():
    assert classify_absolute(table("ex5", 128), cfg(1e-2, 128)).status is D
    v = classify_absolute(table("zero", 64), cfg(1e-9, 64))
    assert v.status is C and v.limit == 0
    v = classify_absolute(table("geometric", 64), cfg(1e-9, 64))
    assert v.status is C and abs(v.limit - 4) < 1e-9


def test_row_col_examples():
    rc = row_col_verdicts(fixture("ex2").source, cfg(0.1, 64))
    assert rc.all_rows_converge and rc.all_cols_converge
    # judged rows j <= 32 oscillate with amplitude 1/(1 + j//2) >= 1/17
    rc = row_col_verdicts(fixture("ex3").source, cfg(0.05, 64))
    assert all(v.status is D for v in rc.rows) and all(v.status is D for v in rc.cols)
    rc = row_col_verdicts(fixture("ex1").source, cfg(0.5, 64))
    assert rc.rows[0].status is D
    assert rc.summary()["rows"]["Diverges"] >= 1


@pytest.mark.parametrize("fid", ["ex5", "fig6", "zero"])
def test_successive_sums(fid):
    rep = successive_sum_check(table(fid, 256), cfg(0.05, 256))
    assert max(rep.residuals) < 1e-6
    # truncation at the cap leaves at most 1/(cap+1) (the uncancelled a[256, 256] of Ex5)
    assert abs(rep.by_rows) <= 1 / 257 + 1e-12 and abs(rep.by_cols) <= 1 / 257 + 1e-12
    assert rep.passed


def test_successive_sums_refuse_without_regularity():
    with pytest.raises(PreconditionError) as e:
        successive_sum_check(table("ex1", 64), cfg(0.5, 64))
    assert e.value.verdict.status is D


def test_sequence_iterated_limits():
    m = np.arange(41)
    prod = np.outer(1 - 2.0 ** -m, 1 - 2.0 ** -m)
    rep = sequence_iterated_limits(prod, cfg(1e-6, 40))
    for v in (rep.rows_then_cols, rep.cols_then_rows, rep.double):
        assert abs(v - 1) < 1e-6
    rep = sequence_iterated_limits(np.full((41, 41), 2.5), cfg(1e-9, 40))
    assert rep.rows_then_cols == rep.cols_then_rows == rep.double == 2.5
    s5 = table("ex5", 128).sums
    rep = sequence_iterated_limits(s5, cfg(1e-2, 128))
    assert abs(rep.rows_then_cols) < 1e-2 and abs(rep.cols_then_rows) < 1e-2 and abs(rep.double) < 1e-2


def test_sequence_terms_roundtrip():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(9, 7))
    assert np.allclose(sequence_to_terms(PrefixSumTable.from_terms(a).sums), a)


def test_classify_sequence():
    v = classify_sequence(1 / (np.arange(200) + 1.0), ClassifierConfig(eps=0.05))
    assert v.status is C
    v = classify_sequence((-1.0) ** np.arange(200), ClassifierConfig(eps=0.5))
    assert v.status is D


def test_config_validation():
    with pytest.raises(ConfigError):
        ClassifierConfig(eps=0)
    with pytest.raises(ConfigError):
        ClassifierConfig(probe_floor=64, cap_m=64, cap_n=64)
    with pytest.raises(ConfigError):
        ClassifierConfig(sample_budget=0)
    with pytest.raises(ConfigError):
        classify_pringsheim(table("ex1", 16), cfg(0.1, 32))


def test_verdict_invariants():
    with pytest.raises(ValueError):
        Verdict(C, None, 0.0, 0, eps=0.1)
    with pytest.raises(ValueError):
        Verdict(D, None, 1.0, 0, eps=0.1)
    with pytest.raises(ValueError):
        Verdict(C, 0j, 0.2, 0, eps=0.1)


def test_deterministic_under_seed():
    t = table("ex3", 64)
    assert classify_regular(t, cfg(0.5, 64, seed=7)) == classify_regular(t, cfg(0.5, 64, seed=7))


def _rank(v):
    return {C: 2, Status.INCONCLUSIVE: 1, D: 0}[v.status]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["decay", "heavy", "sparse", "harmonic"]))
def test_nonnegative_equivalence(seed, family):
    rng = np.random.default_rng(seed)
    j, k = np.meshgrid(np.arange(65), np.arange(65), indexing="ij")
    if family == "decay":
        a = rng.uniform(0, 1, j.shape) * 0.5 ** (j + k)
    elif family == "heavy":
        a = rng.uniform(0.5, 1, j.shape)
    elif family == "harmonic":
        a = rng.uniform(0.5, 1, j.shape) / ((j + 1.0) * (k + 1.0))
    else:
        a = (rng.uniform(size=j.shape) < 0.02) * rng.uniform(0, 1, j.shape) / (1.0 + j + k) ** 3
    t = PrefixSumTable.from_terms(a)
    c = cfg(1e-3, 64)
    p, r, ab = classify_pringsheim(t, c), classify_regular(t, c), classify_absolute(t, c)
    assert p.status is ab.status
    assert _rank(ab) <= _rank(r) <= _rank(p) or not ab.converges
    if ab.converges:
        assert r.converges and p.converges
    if r.converges:
        assert p.converges


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.3, 3.0))
def test_signed_lattice(seed, p):
    rng = np.random.default_rng(seed)
    j, k = np.meshgrid(np.arange(49), np.arange(49), indexing="ij")
    a = rng.choice([-1.0, 1.0], j.shape) * rng.uniform(0, 1, j.shape) / ((j + 1.0) * (k + 1.0)) ** p
    t, c = PrefixSumTable.from_terms(a), cfg(1e-3, 48)
    pv, rv, av = classify_pringsheim(t, c), classify_regular(t, c), classify_absolute(t, c)
    assert not av.converges or rv.converges
    assert not rv.converges or pv.converges
