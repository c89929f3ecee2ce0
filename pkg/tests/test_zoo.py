from fractions import Fraction

import pytest

from bilimit.series import build_table
from bilimit.zoo import (FIGURE_1, FIGURE_2, FIGURE_3, FIGURE_4, FIGURE_5, FIGURE_6, FIXTURES, fixture,
                         oracle_partial_sum, series_fixtures)

FIGURES = {"ex1": FIGURE_1, "ex2": FIGURE_2, "ex3": FIGURE_3, "ex4": FIGURE_4, "ex5": FIGURE_5, "fig6": FIGURE_6}


@pytest.mark.parametrize("fid", sorted(FIGURES))
def test_formula_matches_every_printed_entry(fid):
    fx = fixture(fid)
    assert fx.printed == FIGURES[fid]
    for j, row in enumerate(fx.printed):
        for k, printed in enumerate(row):
            got = fx.source(j, k)
            assert got.imag == 0
            assert Fraction(got.real).limit_denominator(1000) == printed, (j, k)


def test_term_examples():
    assert fixture("ex3").source(2, 2) == 0.5
    assert fixture("ex5").source(0, 1) == -1
    assert fixture("fig6").source(4, 4) == pytest.approx(1 / 5)


def test_oracle_examples():
    assert oracle_partial_sum("ex3", 4, 6) == pytest.approx(1 / 3)
    assert oracle_partial_sum("ex2", 3, 3) == 0
    assert oracle_partial_sum("ex1", 1, 1) == 0
    assert oracle_partial_sum("ex2", 3, 4) is None
    assert oracle_partial_sum("ex5", 3, 3) is None


@pytest.mark.parametrize("fid", ["ex1", "ex2", "ex3"])
def test_oracles_agree_with_tables(fid):
    t = build_table(fixture(fid).source, 40)
    for m in range(41):
        for n in range(41):
            o = oracle_partial_sum(fid, m, n)
            if o is not None:
                assert abs(t.partial_sum(m, n) - o) <= 1e-12


def test_lookup():
    assert fixture("Ex7Integrand").id == "ex7"
    assert fixture("EX3").id == "ex3"
    with pytest.raises(KeyError, match="unknown fixture"):
        fixture("ex9")


def test_catalog_shape():
    assert {"ex1", "ex2", "ex3", "ex4", "ex5", "fig6", "ex6", "ex7"} <= set(FIXTURES)
    for fx in FIXTURES.values():
        assert fx.notes and fx.description
        assert (fx.source is None) != (fx.integrand is None)
    assert "ex6" not in {f.id for f in series_fixtures()}
    assert fixture("ex6").embedded(8).kind == "CellGrid"
