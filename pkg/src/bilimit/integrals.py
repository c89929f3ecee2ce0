"""Integrands over the closed first quadrant and their rectangle integrals.

Step integrands (unit-cell grids and the dyadic block function) are
integrated exactly as signed intersected areas. General callables go
through a tensor-product quadrature with dyadic refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .series import DomainMismatchError, IndexDomain, PrefixSumTable, TermSource


class IntegrationRangeError(ValueError):
    """Negative limits, or limits beyond the integrand's cached reach."""


class QuadratureError(ArithmeticError):
    """Refinement budget exhausted before the requested tolerance was met."""

    def __init__(self, message: str, estimate: complex):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class RectRegion:
    x: float
    x1: float
    y: float
    y1: float

    def __post_init__(self):
        if min(self.x, self.y) < 0:
            raise IntegrationRangeError(f"rectangle {self} leaves the quadrant")
        if self.x > self.x1 or self.y > self.y1:
            raise IntegrationRangeError(f"rectangle {self} has reversed bounds")

    @property
    def area(self) -> float:
        return (self.x1 - self.x) * (self.y1 - self.y)


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "gauss2"
    base_cells: int = 4
    refinement: int = 6
    rel_tol: float = 1e-10
    abs_floor: float = 1e-14

    def __post_init__(self):
        if self.rule not in ("midpoint", "gauss2"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.base_cells < 1 or self.rel_tol <= 0:
            raise ValueError("base_cells must be >= 1 and rel_tol > 0")


_G = 0.5 / math.sqrt(3.0)


def _nodes(lo: float, hi: float, cells: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, cells + 1)
    h = np.diff(edges)
    mid = edges[:-1] + h / 2
    if rule == "midpoint":
        return mid, h
    return np.concatenate([mid - _G * h, mid + _G * h]), np.concatenate([h / 2, h / 2])


class Integrand:
    """Base class. Subclasses provide ``value`` and ``partial_integral``."""

    kind = "abstract"
    #: largest coordinate the integrand can be integrated up to (inf if unlimited)
    reach: float = math.inf

    def value(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def partial_integral(self, x: float, y: float) -> complex:
        raise NotImplementedError

    def breakpoints(self, lo: float, hi: float, reach: Optional[float] = None) -> Optional[np.ndarray]:
        """Coordinates in [lo, hi] where the integrand may jump (both axes); None if smooth.

        ``reach`` bounds the other coordinate of the region of interest
        (default ``hi``); jumps only seen beyond it may be omitted.
        """
        return None

    def absolute(self) -> "Integrand":
        raise NotImplementedError

    @property
    def is_step(self) -> bool:
        return self.breakpoints(0.0, 1.0) is not None

    def _check(self, x: float, y: float) -> None:
        if x < 0 or y < 0:
            raise IntegrationRangeError(f"partial integral needs x, y >= 0, got ({x}, {y})")
        if x > self.reach or y > self.reach:
            raise IntegrationRangeError(f"({x}, {y}) beyond the integrand reach {self.reach}")

    def partial_integrals(self, xs, ys) -> np.ndarray:
        """I(x, y) over the product grid xs x ys."""
        return np.array([[self.partial_integral(float(x), float(y)) for y in ys] for x in xs], dtype=complex)

    def rect_integral(self, r: RectRegion) -> complex:
        if r.x == r.x1 or r.y == r.y1:
            return 0j
        return (self.partial_integral(r.x1, r.y1) - self.partial_integral(r.x, r.y1)
                - self.partial_integral(r.x1, r.y) + self.partial_integral(r.x, r.y))


class CellGrid(Integrand):
    """f(u, v) = a[j, k] on [j, j+1) x [k, k+1), integrated exactly up to ``cap``."""

    kind = "CellGrid"

    def __init__(self, source: TermSource, cap: int, table: PrefixSumTable | None = None):
        if source.domain is not IndexDomain.NAT:
            raise DomainMismatchError("cell embedding is only defined for N^2-indexed sources")
        self.source = source
        self.cap = int(cap)
        self.reach = float(cap)
        self.table = table if table is not None else PrefixSumTable(source, self.cap, self.cap)
        if self.table.cap_m < self.cap or self.table.cap_n < self.cap:
            raise ValueError("backing table smaller than the cell cap")
        self._terms = self.table.terms
        self._p = self.table.padded

    def value(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        j = np.floor(u).astype(int)
        k = np.floor(v).astype(int)
        inside = (j >= 0) & (k >= 0) & (j <= self.cap) & (k <= self.cap)
        out = np.zeros(u.shape, dtype=complex)
        out[inside] = self._terms[j[inside], k[inside]]
        return out

    def partial_integrals(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, float)
        ys = np.asarray(ys, float)
        if xs.size and (xs.min() < 0 or xs.max() > self.reach):
            raise IntegrationRangeError(f"x outside [0, {self.reach}]")
        if ys.size and (ys.min() < 0 or ys.max() > self.reach):
            raise IntegrationRangeError(f"y outside [0, {self.reach}]")
        p = np.floor(xs).astype(int)[:, None]
        q = np.floor(ys).astype(int)[None, :]
        fx = (xs - np.floor(xs))[:, None]
        fy = (ys - np.floor(ys))[None, :]
        P = self._p
        pp = np.minimum(p + 1, self.cap + 1)
        qq = np.minimum(q + 1, self.cap + 1)
        a = self._terms[np.minimum(p, self.cap), np.minimum(q, self.cap)]
        base = P[p, q]
        # fractional parts are exactly 0 at integers, so these terms vanish there
        return (base + fx * (P[pp, q] - base) + fy * (P[p, qq] - base) + fx * fy * a)

    def partial_integral(self, x: float, y: float) -> complex:
        self._check(x, y)
        return complex(self.partial_integrals([x], [y])[0, 0])

    def breakpoints(self, lo, hi, reach=None):
        return np.arange(math.ceil(lo), math.floor(min(hi, self.reach)) + 1, dtype=float)

    def absolute(self) -> "CellGrid":
        return CellGrid(self.source.absolute(), self.cap, self.table.absolute())


def cell_embed(source: TermSource, cap: int) -> CellGrid:
    """The unit-cell step function of a double series, with I(m, n) = s[m-1, n-1]."""
    return CellGrid(source, cap)


def _overlap(a: float, b: float, lo: float, hi: float) -> float:
    return max(0.0, min(b, hi) - max(a, lo))


class DyadicBlocks(Integrand):
    """Signed dyadic blocks below the diagonal, reflected above it.

    Below the diagonal, for k = 0, 1, 2, ... the rectangle
    [2^k, 2^(k+1)) x (2^(-k-1), 2^(-k)] is cut at u = 3*2^(k-1) and
    v = 3*2^(-k-2) into four sub-blocks of area 1/8 with signs

        + on [2^k, 3*2^(k-1)) x (3*2^(-k-2), 2^(-k)]
        + on [3*2^(k-1), 2^(k+1)) x (2^(-k-1), 3*2^(-k-2)]
        - on the other two.

    Above the diagonal f(u, v) = f(v, u). With ``absolute=True`` every sign is +.
    """

    kind = "DyadicBlocks"

    def __init__(self, absolute: bool = False):
        self._abs = absolute

    def _signs(self):
        return (1, 1, 1, 1) if self._abs else (1, 1, -1, -1)

    def _blocks(self, k: int):
        """(u_lo, u_hi, v_lo, v_hi, sign) for level k, lower half."""
        p_hi, p_lo, m_hi, m_lo = self._signs()
        a, mid_u, b = math.ldexp(1, k), 3 * math.ldexp(1, k - 1), math.ldexp(1, k + 1)
        c, mid_v, d = math.ldexp(1, -k - 1), 3 * math.ldexp(1, -k - 2), math.ldexp(1, -k)
        return (
            (a, mid_u, mid_v, d, p_hi),
            (mid_u, b, c, mid_v, p_lo),
            (mid_u, b, mid_v, d, m_hi),
            (a, mid_u, c, mid_v, m_lo),
        )

    def value(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        swap = v > u
        uu = np.where(swap, v, u)
        vv = np.where(swap, u, v)
        mant, e = np.frexp(np.where(uu > 0, uu, 1.0))
        k = e - 1  # uu in [2^k, 2^(k+1))
        lev = (uu >= 1.0) & (vv > np.ldexp(1.0, -k - 1)) & (vv <= np.ldexp(1.0, -k))
        first_u = uu < 1.5 * np.ldexp(1.0, k)
        high_v = vv > 0.75 * np.ldexp(1.0, -k)
        plus = first_u == high_v
        if self._abs:
            out = lev.astype(float)
        else:
            out = np.where(lev, np.where(plus, 1.0, -1.0), 0.0)
        return out.astype(complex)

    def partial_integral(self, x: float, y: float) -> complex:
        self._check(x, y)
        top = max(x, y)
        total = 0.0
        k = 0
        while math.ldexp(1, k) < top:
            for u0, u1, v0, v1, s in self._blocks(k):
                total += s * _overlap(u0, u1, 0, x) * _overlap(v0, v1, 0, y)
                total += s * _overlap(v0, v1, 0, x) * _overlap(u0, u1, 0, y)
            k += 1
        return complex(total)

    def breakpoints(self, lo, hi, reach=None):
        # level k reaches u = 2^(k+1) on one axis and v = 2^(-k-1) on the other
        top = max(hi, hi if reach is None else reach)
        pts = {0.0}
        k = 0
        while math.ldexp(1, k) < top:
            pts.update((math.ldexp(1, k), 3 * math.ldexp(1, k - 1), math.ldexp(1, k + 1),
                        math.ldexp(1, -k), 3 * math.ldexp(1, -k - 2), math.ldexp(1, -k - 1)))
            k += 1
        return np.array(sorted(p for p in pts if lo <= p <= hi))

    def absolute(self) -> "DyadicBlocks":
        return DyadicBlocks(absolute=True)


class CallableIntegrand(Integrand):
    """A vectorised function f(u, v) integrated by a product rule with refinement.

    Passing ``breaks(lo, hi)`` declares f piecewise constant between the
    returned coordinates; iterated integrals then sum exact pieces.
    """

    kind = "Callable"

    def __init__(self, fn: Callable, quad: QuadratureSpec = QuadratureSpec(), name: str = "callable",
                 breaks: Optional[Callable[[float, float], np.ndarray]] = None):
        self.fn = fn
        self.quad = quad
        self.name = name
        self._breaks = breaks

    def value(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.asarray(self.fn(u, v), dtype=complex) * np.ones(u.shape)

    def _rule(self, x0, x1, y0, y1, level: int) -> complex:
        q = self.quad
        nu = max(1, math.ceil(q.base_cells * (x1 - x0))) << level
        nv = max(1, math.ceil(q.base_cells * (y1 - y0))) << level
        un, uw = _nodes(x0, x1, nu, q.rule)
        vn, vw = _nodes(y0, y1, nv, q.rule)
        vals = self.value(un[:, None], vn[None, :])
        return complex(uw @ vals @ vw)

    def _quad_rect(self, x0, x1, y0, y1) -> complex:
        if x0 == x1 or y0 == y1:
            return 0j
        q = self.quad
        prev = self._rule(x0, x1, y0, y1, 0)
        for level in range(1, q.refinement + 1):
            cur = self._rule(x0, x1, y0, y1, level)
            if abs(cur - prev) <= q.rel_tol * max(abs(cur), q.abs_floor):
                return cur
            prev = cur
        raise QuadratureError(
            f"{self.name}: rel_tol {q.rel_tol} not met after {q.refinement} halvings on "
            f"[{x0}, {x1}] x [{y0}, {y1}]", prev)

    def partial_integral(self, x: float, y: float) -> complex:
        self._check(x, y)
        return self._quad_rect(0.0, x, 0.0, y)

    def rect_integral(self, r: RectRegion) -> complex:
        # direct quadrature: four-corner differencing would amplify the rule error
        return self._quad_rect(r.x, r.x1, r.y, r.y1)

    def breakpoints(self, lo, hi, reach=None):
        return None if self._breaks is None else self._breaks(lo, hi)

    def absolute(self) -> "CallableIntegrand":
        return CallableIntegrand(lambda u, v: np.abs(self.value(u, v)), self.quad, f"|{self.name}|", self._breaks)


def partial_integral(f: Integrand, x: float, y: float) -> complex:
    return f.partial_integral(x, y)


def rect_integral(f: Integrand, r: RectRegion) -> complex:
    return f.rect_integral(r)


def horizontal_strip(f: Integrand, x1: float, y: float, y1: float) -> complex:
    """Integral over [0, x1] x [y, y1]."""
    return f.rect_integral(RectRegion(0.0, x1, y, y1))


def vertical_strip(f: Integrand, x: float, x1: float, y1: float) -> complex:
    """Integral over [x, x1] x [0, y1]."""
    return f.rect_integral(RectRegion(x, x1, 0.0, y1))


def _pieces(f: Integrand, lo: float, hi: float, reach: float):
    pts = f.breakpoints(lo, hi, reach)
    edges = np.unique(np.concatenate([[lo, hi], pts[(pts > lo) & (pts < hi)]]))
    return (edges[:-1] + edges[1:]) / 2, np.diff(edges)


def _quad1(fn, a: float, b: float) -> complex:
    if a == b:
        return 0j
    re = integrate.quad(lambda t: complex(fn(t)).real, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    im = integrate.quad(lambda t: complex(fn(t)).imag, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return complex(re, im)


def iterated_integral(f: Integrand, r: RectRegion, inner: str = "v") -> complex:
    """Successive one-dimensional integration over ``r``.

    ``inner="v"`` integrates in v first, then in u; ``inner="u"`` the other
    way round. Step integrands are integrated piece by piece from point
    values, independently of their closed-form partial integrals.
    """
    if inner not in ("u", "v"):
        raise ValueError("inner must be 'u' or 'v'")
    if r.x == r.x1 or r.y == r.y1:
        return 0j
    if f.is_step:
        um, du = _pieces(f, r.x, r.x1, r.y1)
        vm, dv = _pieces(f, r.y, r.y1, r.x1)
        vals = f.value(um[:, None], vm[None, :])
        if inner == "v":
            return complex(du @ (vals @ dv))
        return complex((du @ vals) @ dv)
    if inner == "v":
        return _quad1(lambda u: _quad1(lambda v: f.value(u, v).item(), r.y, r.y1), r.x, r.x1)
    return _quad1(lambda v: _quad1(lambda u: f.value(u, v).item(), r.x, r.x1), r.y, r.y1)


class PlaneIntegrand:
    """A function on the whole plane given as four quadrant integrands.

    ``quadrants[(su, sv)]`` is u, v >= 0 -> f(su*u, sv*v). The axes have
    measure zero, so sharing them between quadrants is harmless.
    """

    SIGNS = ((1, 1), (-1, 1), (1, -1), (-1, -1))

    def __init__(self, quadrants: dict[tuple[int, int], Integrand]):
        missing = [s for s in self.SIGNS if s not in quadrants]
        if missing:
            raise DomainMismatchError(f"plane integrand is missing quadrants {missing}")
        self.quadrants = dict(quadrants)

    @classmethod
    def from_callable(cls, fn: Callable, quad: QuadratureSpec = QuadratureSpec()) -> "PlaneIntegrand":
        return cls({(su, sv): CallableIntegrand(lambda u, v, su=su, sv=sv: fn(su * u, sv * v), quad)
                    for su, sv in cls.SIGNS})

    @classmethod
    def even(cls, f: Integrand) -> "PlaneIntegrand":
        return cls({s: f for s in cls.SIGNS})

    def symmetric_partial_integral(self, x: float, y: float) -> complex:
        return sum((q.partial_integral(x, y) for q in self.quadrants.values()), 0j)

    def annulus_integral(self, x: float, x1: float, y: float, y1: float) -> complex:
        """Integral over {x < |u| < x1} x {y < |v| < y1}."""
        r = RectRegion(x, x1, y, y1)
        return sum((q.rect_integral(r) for q in self.quadrants.values()), 0j)


def symmetric_partial_integral(f: PlaneIntegrand, x: float, y: float) -> complex:
    if not isinstance(f, PlaneIntegrand):
        raise DomainMismatchError("symmetric partial integrals need a plane integrand")
    if x < 0 or y < 0:
        raise IntegrationRangeError("symmetric partial integrals need x, y >= 0")
    return f.symmetric_partial_integral(x, y)
