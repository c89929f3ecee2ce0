"""Double series: term sources, capped prefix-sum tables, block and strip sums."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

TermFn = Callable[[int, int], complex]


class IndexDomain(enum.Enum):
    NAT = "NatSquare"
    INT = "IntSquare"


class CapError(IndexError):
    """Index outside the cached region of a table."""


class RangeOrderError(ValueError):
    """Block bounds given in the wrong order."""


class DomainMismatchError(TypeError):
    """Operation needs the other index domain."""


@dataclass(frozen=True)
class TermSource:
    """A double series given term by term.

    ``term(j, k)`` must be effect-free. For ``IndexDomain.NAT`` it is only
    ever called with ``j, k >= 0``.
    """

    term: TermFn
    domain: IndexDomain = IndexDomain.NAT
    name: str = "anonymous"
    oracle: Optional[Callable[[int, int], Optional[complex]]] = field(default=None, compare=False)
    # optional vectorised form of ``term`` over integer index grids
    batch: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __call__(self, j: int, k: int) -> complex:
        if self.domain is IndexDomain.NAT and (j < 0 or k < 0):
            raise DomainMismatchError(f"{self.name}: N^2 source queried at ({j}, {k})")
        return complex(self.term(j, k))

    def dense(self, rows: int, cols: int) -> np.ndarray:
        """Terms a[j, k] for 0 <= j < rows, 0 <= k < cols."""
        if self.batch is not None:
            j, k = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
            return np.asarray(self.batch(j, k), dtype=complex).reshape(rows, cols)
        out = np.empty((rows, cols), dtype=complex)
        for j in range(rows):
            for k in range(cols):
                out[j, k] = self(j, k)
        return out

    def absolute(self) -> "TermSource":
        batch = None if self.batch is None else (lambda j, k: np.abs(self.batch(j, k)))
        return TermSource(lambda j, k: abs(self.term(j, k)), self.domain, f"|{self.name}|", batch=batch)


def from_array(terms, name: str = "array") -> TermSource:
    """Wrap a finite 2-D array as an N^2 source that is zero outside it."""
    arr = np.asarray(terms, dtype=complex)
    rows, cols = arr.shape

    def term(j: int, k: int) -> complex:
        if j < rows and k < cols:
            return complex(arr[j, k])
        return 0j

    def batch(j, k):
        j, k = np.broadcast_arrays(np.asarray(j), np.asarray(k))
        inside = (j < rows) & (k < cols)
        out = np.zeros(j.shape, dtype=complex)
        out[inside] = arr[j[inside], k[inside]]
        return out

    return TermSource(term, IndexDomain.NAT, name, batch=batch)


class PrefixSumTable:
    """Rectangular partial sums s[m, n] of an N^2 source, cached up to the caps.

    The table is built once and never mutated afterwards, so concurrent
    reads are safe.
    """

    def __init__(self, source: TermSource, cap_m: int, cap_n: int, terms: np.ndarray | None = None):
        if source.domain is not IndexDomain.NAT:
            raise DomainMismatchError("prefix tables are built from N^2 sources; use QuadrantTables for Z^2")
        if cap_m < 0 or cap_n < 0:
            raise ValueError("caps must be non-negative")
        self.source = source
        self.cap_m = int(cap_m)
        self.cap_n = int(cap_n)
        a = source.dense(cap_m + 1, cap_n + 1) if terms is None else np.asarray(terms, dtype=complex)
        if a.shape != (cap_m + 1, cap_n + 1):
            raise ValueError(f"terms shape {a.shape} does not match caps ({cap_m}, {cap_n})")
        self.terms = a
        # padded[m + 1, n + 1] = s[m, n]; row/column 0 carry the s[-1, .] = s[., -1] = 0 convention
        padded = np.zeros((cap_m + 2, cap_n + 2), dtype=complex)
        padded[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
        padded.setflags(write=False)
        a.setflags(write=False)
        self._padded = padded

    @classmethod
    def from_terms(cls, terms, name: str = "array") -> "PrefixSumTable":
        arr = np.asarray(terms, dtype=complex)
        return cls(from_array(arr, name), arr.shape[0] - 1, arr.shape[1] - 1, terms=arr)

    @property
    def sums(self) -> np.ndarray:
        """Read-only view of s[m, n] for 0 <= m <= cap_m, 0 <= n <= cap_n."""
        return self._padded[1:, 1:]

    @property
    def padded(self) -> np.ndarray:
        return self._padded

    def _check(self, m: int, n: int) -> None:
        if not -1 <= m <= self.cap_m:
            raise CapError(f"m={m} outside [-1, cap_m={self.cap_m}]")
        if not -1 <= n <= self.cap_n:
            raise CapError(f"n={n} outside [-1, cap_n={self.cap_n}]")

    def partial_sum(self, m: int, n: int) -> complex:
        self._check(m, n)
        return complex(self._padded[m + 1, n + 1])

    def block_sum(self, m: int, n: int, M: int, N: int) -> complex:
        """Sum of a[j, k] over m <= j <= M, n <= k <= N by inclusion-exclusion."""
        if m > M or n > N:
            raise RangeOrderError(f"empty block: ({m}, {n}) .. ({M}, {N})")
        if m < 0 or n < 0:
            raise CapError(f"block corner ({m}, {n}) is negative")
        self._check(M, N)
        p = self._padded
        return complex(p[M + 1, N + 1] - p[m, N + 1] - p[M + 1, n] + p[m, n])

    def absolute(self) -> "PrefixSumTable":
        a = np.abs(self.terms).astype(complex)
        return PrefixSumTable(self.source.absolute(), self.cap_m, self.cap_n, terms=a)

    def row_partials(self) -> np.ndarray:
        """r[j, N] = sum_{k<=N} a[j, k] for every cached row."""
        return self.terms.cumsum(axis=1)

    def col_partials(self) -> np.ndarray:
        """c[k, M] = sum_{j<=M} a[j, k] for every cached column (indexed column-first)."""
        return self.terms.cumsum(axis=0).T


def build_table(source: TermSource, cap_m: int, cap_n: int | None = None) -> PrefixSumTable:
    return PrefixSumTable(source, cap_m, cap_m if cap_n is None else cap_n)


def partial_sum(table: PrefixSumTable, m: int, n: int) -> complex:
    return table.partial_sum(m, n)


def block_sum(table: PrefixSumTable, m: int, n: int, M: int, N: int) -> complex:
    return table.block_sum(m, n, M, N)


def abs_partial_sum(table: PrefixSumTable, m: int, n: int) -> float:
    """Partial sum of |a[j, k]|; ``table`` may already hold absolute values."""
    table._check(m, n)
    if m < 0 or n < 0:
        return 0.0
    return float(np.abs(table.terms[: m + 1, : n + 1]).sum())


def row_partial(source: TermSource, j: int, N: int) -> complex:
    if j < 0 or N < 0:
        raise ValueError("row index and length must be non-negative")
    return complex(sum(source(j, k) for k in range(N + 1)))


def col_partial(source: TermSource, k: int, M: int) -> complex:
    if k < 0 or M < 0:
        raise ValueError("column index and length must be non-negative")
    return complex(sum(source(j, k) for j in range(M + 1)))


class QuadrantTables:
    """A Z^2 source split into four quadrant prefix tables sharing the axes.

    The quadrant with a negative first (second) index drops j = 0 (k = 0), so
    every lattice point is counted exactly once.
    """

    def __init__(self, source: TermSource, cap_m: int, cap_n: int):
        if source.domain is not IndexDomain.INT:
            raise DomainMismatchError(f"{source.name}: symmetric sums need a Z^2 source")
        self.source = source
        self.cap_m, self.cap_n = cap_m, cap_n
        self.tables: dict[tuple[int, int], PrefixSumTable] = {}
        for sj in (1, -1):
            for sk in (1, -1):
                a = np.empty((cap_m + 1, cap_n + 1), dtype=complex)
                for j in range(cap_m + 1):
                    for k in range(cap_n + 1):
                        if (sj < 0 and j == 0) or (sk < 0 and k == 0):
                            a[j, k] = 0
                        else:
                            a[j, k] = source.term(sj * j, sk * k)
                self.tables[(sj, sk)] = PrefixSumTable.from_terms(a, f"{source.name}[{sj:+d},{sk:+d}]")

    def symmetric_partial_sum(self, m: int, n: int) -> complex:
        if m < 0 or n < 0:
            raise ValueError("symmetric partial sums need m, n >= 0")
        return sum((t.partial_sum(m, n) for t in self.tables.values()), 0j)

    def symmetric_block_sum(self, m: int, n: int, M: int, N: int) -> complex:
        """Sum over m <= |j| <= M, n <= |k| <= N (the Z^2 regular-convergence blocks)."""
        return sum((t.block_sum(m, n, M, N) for t in self.tables.values()), 0j)


def symmetric_partial_sum(source: TermSource, m: int, n: int) -> complex:
    """sum_{|j|<=m} sum_{|k|<=n} a[j, k] for a Z^2-indexed source."""
    if source.domain is not IndexDomain.INT:
        raise DomainMismatchError(f"{source.name}: symmetric sums need a Z^2 source")
    if m < 0 or n < 0:
        raise ValueError("symmetric partial sums need m, n >= 0")
    return complex(sum(source(j, k) for j in range(-m, m + 1) for k in range(-n, n + 1)))
