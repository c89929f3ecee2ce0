"""The seven counterexamples (plus fig6) as ready-made fixtures.

Each fixture carries its term formula, the closed-form partial sums where
one is known, and the verdicts a correct classifier should reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .integrals import CellGrid, DyadicBlocks, Integrand, cell_embed
from .series import IndexDomain, TermSource


def _sgn(j, k):
    return 1 - 2 * ((j + k) % 2)


def _ex1(j, k):
    return _sgn(j, k) * (np.maximum(j, k) // 2 + 1) * (np.minimum(j, k) <= 1)


def _ex2(j, k):
    return _sgn(j, k) * (j // 2 == k // 2)


def _ex3(j, k):
    return _sgn(j, k) / (1.0 + np.minimum(j // 2, k // 2))


def _ex4(j, k):
    return np.where(k == 0, _sgn(j, 0), 0) + np.where((j == 0) & (k > 0), _sgn(0, k), 0)


def _ex5(j, k):
    return np.where(k == j, 1.0 / (j + 1), 0.0) - np.where(k == j + 1, 1.0 / (j + 1), 0.0)


def _fig6(j, k):
    return _sgn(j, k) / (j // 2 + k // 2 + 1.0)


def _geometric(j, k):
    return np.ldexp(1.0, -(np.asarray(j) + np.asarray(k)))


def _zero(j, k):
    return np.zeros(np.broadcast(j, k).shape)


def _scalar(batch):
    return lambda j, k: complex(np.asarray(batch(np.int64(j), np.int64(k))).item())


# closed forms stated for the examples; None where nothing is stated


def _oracle_ex1(m, n):
    return 0j if min(m, n) >= 1 else None


def _oracle_ex2(m, n):
    if m != n:
        return None
    return 1 + 0j if m % 2 == 0 else 0j


def _oracle_ex3(m, n):
    if m % 2 == 0 and n % 2 == 0:
        return complex(2 / (2 + min(m, n)))
    return 0j


ORACLES: dict[str, Callable[[int, int], Optional[complex]]] = {
    "ex1": _oracle_ex1,
    "ex2": _oracle_ex2,
    "ex3": _oracle_ex3,
}


def oracle_partial_sum(fixture_id: str, m: int, n: int) -> Optional[complex]:
    fn = ORACLES.get(_norm(fixture_id))
    return None if fn is None or m < 0 or n < 0 else fn(m, n)


def _source(name: str, batch) -> TermSource:
    return TermSource(_scalar(batch), IndexDomain.NAT, name, oracle=ORACLES.get(name), batch=batch)


@dataclass(frozen=True)
class Expected:
    pringsheim: Optional[str] = None
    regular: Optional[str] = None
    absolute: Optional[str] = None
    limit: Optional[complex] = None
    rows: Optional[str] = None
    cols: Optional[str] = None


@dataclass(frozen=True)
class Fixture:
    id: str
    description: str
    expected: Expected
    notes: tuple[str, ...]
    source: Optional[TermSource] = None
    integrand: Optional[Integrand] = None
    # printed corner of the figure, rows j = 0..5 bottom-up, as exact fractions
    printed: Optional[tuple[tuple[Fraction, ...], ...]] = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return "series" if self.source is not None else "integrand"

    def embedded(self, cap: int) -> Integrand:
        if self.integrand is not None:
            return self.integrand
        return cell_embed(self.source, cap)


def _fr(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


# Figures transcribed as printed, bottom row first (row j = 0).
FIGURE_1 = _fr([
    [1, -1, 2, -2, 3, -3],
    [-1, 1, -2, 2, -3, 3],
    [2, -2, 0, 0, 0, 0],
    [-2, 2, 0, 0, 0, 0],
    [3, -3, 0, 0, 0, 0],
    [-3, 3, 0, 0, 0, 0],
])
FIGURE_2 = _fr([
    [1, -1, 0, 0, 0, 0],
    [-1, 1, 0, 0, 0, 0],
    [0, 0, 1, -1, 0, 0],
    [0, 0, -1, 1, 0, 0],
    [0, 0, 0, 0, 1, -1],
    [0, 0, 0, 0, -1, 1],
])
FIGURE_3 = _fr([
    [1, -1, 1, -1, 1, -1],
    [-1, 1, -1, 1, -1, 1],
    [1, -1, "1/2", "-1/2", "1/2", "-1/2"],
    [-1, 1, "-1/2", "1/2", "-1/2", "1/2"],
    [1, -1, "1/2", "-1/2", "1/3", "-1/3"],
    [-1, 1, "-1/2", "1/2", "-1/3", "1/3"],
])
FIGURE_4 = _fr([
    [1, -1, 1, -1, 1, -1],
    [-1, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0],
    [-1, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0],
    [-1, 0, 0, 0, 0, 0],
])
FIGURE_5 = _fr([
    [1, -1, 0, 0, 0, 0],
    [0, "1/2", "-1/2", 0, 0, 0],
    [0, 0, "1/3", "-1/3", 0, 0],
    [0, 0, 0, "1/4", "-1/4", 0],
    [0, 0, 0, 0, "1/5", "-1/5"],
    [0, 0, 0, 0, 0, "1/6"],
])
FIGURE_6 = _fr([
    [1, -1, "1/2", "-1/2", "1/3", "-1/3"],
    [-1, 1, "-1/2", "1/2", "-1/3", "1/3"],
    ["1/2", "-1/2", "1/3", "-1/3", "1/4", "-1/4"],
    ["-1/2", "1/2", "-1/3", "1/3", "-1/4", "1/4"],
    ["1/3", "-1/3", "1/4", "-1/4", "1/5", "-1/5"],
    ["-1/3", "1/3", "-1/4", "1/4", "-1/5", "1/5"],
])

C, D, I = "Converges", "Diverges", "Inconclusive"


def _build() -> dict[str, Fixture]:
    out = {}

    def add(fx: Fixture) -> None:
        out[fx.id] = fx

    add(Fixture(
        "ex1", "Pringsheim-convergent to 0 with unbounded terms",
        Expected(pringsheim=C, regular=D, absolute=D, limit=0j),
        ("terms (-1)^(j+k) (floor(max(j,k)/2)+1) on rows/cols 0 and 1, else 0",
         "s[m,n] = 0 whenever min(m,n) >= 1",
         "infinite completion: only the two bottom rows and two left columns are nonzero"),
        source=_source("ex1", _ex1), printed=FIGURE_1))
    add(Fixture(
        "ex2", "every row and column has two nonzero terms, no Pringsheim limit",
        Expected(pringsheim=D, regular=D, absolute=D, rows=C, cols=C),
        ("terms (-1)^(j+k) on the 2x2 diagonal blocks", "s[m,m] = 1 for even m, 0 for odd m"),
        source=_source("ex2", _ex2), printed=FIGURE_2))
    add(Fixture(
        "ex3", "Pringsheim-convergent to 0 while every row and column diverges",
        Expected(pringsheim=C, regular=D, absolute=D, limit=0j, rows=D, cols=D),
        ("terms (-1)^(j+k) / (1 + min(floor(j/2), floor(k/2)))",
         "s[m,n] = 2/(2+min(m,n)) when m and n are even, else 0"),
        source=_source("ex3", _ex3), printed=FIGURE_3))
    add(Fixture(
        "ex4", "inner blocks vanish identically but no Pringsheim limit",
        Expected(pringsheim=D, regular=D, absolute=D),
        ("alternating +-1 along row 0 and column 0, zero elsewhere",
         "every block with min(m,n) >= 1 sums to 0"),
        source=_source("ex4", _ex4), printed=FIGURE_4))
    add(Fixture(
        "ex5", "regularly but not absolutely convergent",
        Expected(pringsheim=C, regular=C, absolute=D, limit=0j, rows=C, cols=C),
        ("a[j,j] = 1/(j+1), a[j,j+1] = -1/(j+1), else 0", "|a| sums grow like twice the harmonic series"),
        source=_source("ex5", _ex5), printed=FIGURE_5))
    add(Fixture(
        "fig6", "telescoping rows and columns; embedded, a regularly convergent integral outside L^1",
        Expected(pringsheim=C, regular=C, absolute=D, limit=0j, rows=C, cols=C),
        ("a[j,k] = (-1)^(j+k) / (floor(j/2) + floor(k/2) + 1)",),
        source=_source("fig6", _fig6), printed=FIGURE_6))
    add(Fixture(
        "ex6", "cell embedding of the fig6 terms",
        Expected(pringsheim=C, regular=C, limit=0j),
        ("f(u,v) = a[j,k] on [j,j+1) x [k,k+1) with a from fig6",
         "integral converges regularly although f is not in L^1"),
        source=_source("fig6", _fig6)))
    add(Fixture(
        "ex7", "dyadic +-1 blocks: Pringsheim limit 0, strips converge but not locally uniformly",
        Expected(pringsheim=C, regular=D, limit=0j),
        ("+-1 on [2^k, 2^(k+1)) x (2^(-k-1), 2^(-k)] split at 3*2^(k-1) and 3*2^(-k-2), reflected across u = v",
         "each signed sub-block has area 1/8"),
        integrand=DyadicBlocks()))
    add(Fixture(
        "geometric", "a[j,k] = 2^(-j-k): absolutely convergent, sum 4",
        Expected(pringsheim=C, regular=C, absolute=C, limit=4 + 0j, rows=C, cols=C),
        ("nonnegative control fixture",),
        source=_source("geometric", _geometric)))
    add(Fixture(
        "zero", "all terms zero",
        Expected(pringsheim=C, regular=C, absolute=C, limit=0j, rows=C, cols=C),
        ("trivial control fixture",),
        source=_source("zero", _zero)))
    return out


FIXTURES: dict[str, Fixture] = _build()

_ALIASES = {"fig6series": "fig6", "ex6integrand": "ex6", "ex7integrand": "ex7"}


def _norm(fixture_id: str) -> str:
    key = fixture_id.strip().lower().replace("-", "").replace("_", "")
    return _ALIASES.get(key, key)


def fixture(fixture_id: str) -> Fixture:
    try:
        return FIXTURES[_norm(fixture_id)]
    except KeyError:
        raise KeyError(f"unknown fixture {fixture_id!r}; known: {', '.join(FIXTURES)}") from None


def series_fixtures() -> list[Fixture]:
    return [fx for fx in FIXTURES.values() if fx.source is not None and fx.id != "ex6"]


def integrand_fixtures(cap: int) -> dict[str, Integrand]:
    """Every fixture as an integrand over the quadrant (series via cell embedding)."""
    out: dict[str, Integrand] = {}
    for fx in FIXTURES.values():
        if fx.id == "fig6":
            continue
        out[fx.id] = fx.embedded(cap)
    return out


__all__ = [
    "Expected", "Fixture", "FIXTURES", "fixture", "oracle_partial_sum", "series_fixtures",
    "integrand_fixtures", "CellGrid",
]
