import numpy as np
import pytest

from bilimit.fubini import (HypothesisRejected, IntegralClassifierConfig, classify_integral_pringsheim,
                            classify_integral_regular, finite_fubini, fubini_check, iterated_limit_I1,
                            iterated_limit_I2, random_rects, strip_uniformity, theorem2_characterize)
from bilimit.integrals import CallableIntegrand, DyadicBlocks, cell_embed
from bilimit.series import from_array
from bilimit.verdict import Status
from bilimit.zoo import fixture, integrand_fixtures

C, D = Status.CONVERGES, Status.DIVERGES
EX7 = DyadicBlocks()


def icfg(eps, cap, **kw):
    return IntegralClassifierConfig(eps=eps, x_cap=float(cap), y_cap=float(cap), **kw)


def emb(fid, cap):
    return fixture(fid).embedded(cap)


def test_pringsheim_examples():
    v = classify_integral_pringsheim(EX7, icfg(0.1, 1024))
    assert v.status is C and v.limit == 0
    v = classify_integral_pringsheim(emb("ex1", 64), icfg(0.1, 64))
    assert v.status is C and v.limit == 0
    assert classify_integral_pringsheim(emb("ex4", 64), icfg(0.1, 64)).status is D


def test_regular_examples():
    assert classify_integral_regular(emb("ex6", 128), icfg(0.1, 128)).status is C
    v = classify_integral_regular(EX7, icfg(0.1, 1024))
    assert v.status is D
    x, x1, y, y1 = v.witness
    assert (x1 - x) * (y1 - y) == pytest.approx(1 / 8, abs=1e-12)
    assert abs(v.witness_value) == pytest.approx(1 / 8, abs=1e-12)
    assert max(x, y) > 512
    assert classify_integral_regular(emb("ex1", 64), icfg(0.1, 64)).status is D


def test_strip_uniformity_examples():
    s = strip_uniformity(emb("ex6", 512), 4.0, icfg(1e-2, 512))
    assert s.uniform and s.rho is not None
    z = strip_uniformity(emb("zero", 64), 1.0, icfg(1e-2, 64))
    assert z.rho == 0 and all(d == 0 for _, d in z.deviations)
    for axis in ("horizontal", "vertical"):
        e = strip_uniformity(EX7, 1.0, icfg(0.1, 1024), axis)
        assert e.rho is None and e.persistent >= 1 / 8 - 1e-12
        assert e.pointwise_gap < 0.1
    with pytest.raises(ValueError):
        strip_uniformity(EX7, 0.0, icfg(0.1, 64))


def test_characterization():
    r = theorem2_characterize(emb("ex6", 128), icfg(0.1, 128))
    assert r.pringsheim.status is C and r.uniform and r.regular_by_characterization
    r = theorem2_characterize(EX7, icfg(0.1, 1024))
    assert r.pringsheim.status is C and not r.uniform and not r.regular_by_characterization
    assert r.example7_type
    r = theorem2_characterize(emb("zero", 64), icfg(0.1, 64))
    assert r.regular_by_characterization and r.deviations_zero()


def test_iterated_curves():
    f = emb("ex6", 64)
    cfg = icfg(1e-6, 64)
    grid = np.arange(1, 65, dtype=float)
    c1 = iterated_limit_I1(f, grid, cfg)
    assert all(v == 0 for _, v in c1.points) and c1.uniformity == 0
    c0 = iterated_limit_I2(emb("zero", 16), [1.0, 2.5, 16.0], icfg(1e-6, 16))
    assert all(v == 0 for _, v in c0.points)
    ind = CallableIntegrand(lambda u, v: ((u < 1) & (v < 1)).astype(float),
                            breaks=lambda lo, hi, reach=None: np.array([1.0]) if lo < 1 < hi else np.array([]))
    c = iterated_limit_I1(ind, [0.25, 0.5, 1.0, 2.0, 7.0], icfg(1e-9, 8))
    assert [v for _, v in c.points] == [0.25, 0.5, 1.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        iterated_limit_I1(f, [], cfg)
    with pytest.raises(ValueError):
        iterated_limit_I1(f, [65.0], cfg)


def test_unstable_horizons_are_inconclusive():
    # a row of ones: the inner integral grows with the horizon
    f = cell_embed(from_array(np.ones((1, 65))), 64)
    c = iterated_limit_I1(f, [0.5, 1.0], icfg(1e-3, 64))
    assert all(v is None for _, v in c.points)


def test_fubini_check_fig6_and_geometric():
    rep = fubini_check(emb("ex6", 64), icfg(1e-4, 64, hypothesis_eps=0.1))
    assert rep.I1_limit == rep.I2_limit == rep.pringsheim_I == 0
    assert max(rep.residuals) < 1e-6 and rep.passed
    assert rep.finite_discrepancy <= 1e-9 and len(rep.finite_checks) == 10
    rep = fubini_check(emb("geometric", 64), icfg(1e-6, 64))
    for v in (rep.I1_limit, rep.I2_limit, rep.pringsheim_I):
        assert abs(v - 4) < 1e-6
    assert max(rep.residuals) < 1e-6


def test_fubini_check_rejects_dyadic_blocks():
    with pytest.raises(HypothesisRejected) as e:
        fubini_check(EX7, icfg(1e-2, 64, hypothesis_eps=0.1))
    v = e.value.verdict
    assert v.status is D and abs(v.witness_value) == pytest.approx(1 / 8, abs=1e-12)


def test_finite_fubini_all_fixtures():
    cfg = icfg(1e-2, 48)
    for fid, f in integrand_fixtures(48).items():
        for chk in finite_fubini(f, random_rects(cfg, 20, seed=5, anchored=False)):
            assert chk.discrepancy <= 1e-9, (fid, chk)


def test_threads_do_not_change_results(monkeypatch):
    g = CallableIntegrand(lambda u, v: np.exp(-u - 2 * v))
    cfg = icfg(1e-3, 16)
    monkeypatch.setenv("BILIMIT_THREADS", "1")
    serial = iterated_limit_I1(g, [0.5, 1.0, 2.0], cfg)
    monkeypatch.setenv("BILIMIT_THREADS", "4")
    parallel = iterated_limit_I1(g, [0.5, 1.0, 2.0], cfg)
    assert serial == parallel
    assert serial.points[-1][1] == pytest.approx((1 - np.exp(-2)) * (1 - np.exp(-32)) / 2, rel=1e-8)


@pytest.mark.parametrize("fid", ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7", "geometric", "zero"])
def test_regular_implies_pringsheim(fid):
    f = integrand_fixtures(64)[fid]
    cfg = icfg(0.1, 64)
    if classify_integral_regular(f, cfg).converges:
        assert classify_integral_pringsheim(f, cfg).converges


@pytest.mark.parametrize("f", [emb("geometric", 64), emb("zero", 64), EX7.absolute(), emb("ex3", 64).absolute()],
                         ids=["geometric", "zero", "|ex7|", "|ex3|"])
def test_nonnegative_pringsheim_equals_regular(f):
    cfg = icfg(0.1, 64)
    assert classify_integral_pringsheim(f, cfg).status is classify_integral_regular(f, cfg).status


def test_reports_are_deterministic():
    cfg = icfg(0.1, 256, seed=3)
    a = classify_integral_regular(EX7, cfg)
    b = classify_integral_regular(EX7, cfg)
    assert a == b


def test_config_validation():
    for kw in ({"eps": 0}, {"x_cap": 1.0}, {"grid": 1.0}, {"sample_budget": 0}):
        with pytest.raises(ValueError):
            IntegralClassifierConfig(**kw)
