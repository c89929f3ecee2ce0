"""Finite-truncation classifiers for double series and double sequences.

Every classifier works on a capped prefix table and returns a trinary
:class:`~bilimit.verdict.Verdict`. Thresholds are searched in
``[probe_floor, headroom * cap]``; divergence is only declared when the
offending residual persists at cap/8, cap/4 and cap/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .series import PrefixSumTable, TermSource, build_table
from .verdict import (
    PreconditionError,
    Status,
    TailProfile,
    Verdict,
    first_threshold,
    geometric_probes,
    persists,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    eps: float = 1e-2
    probe_floor: int = 0
    cap_m: int = 64
    cap_n: int = 64
    sample_budget: int = 256
    seed: int = 0
    headroom: float = 7 / 8
    blowup: float = 1e12

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.sample_budget < 1:
            raise ConfigError("sample_budget must be >= 1")
        if not 0 < self.headroom <= 1:
            raise ConfigError("headroom must lie in (0, 1]")
        if self.probe_floor >= min(self.cap_m, self.cap_n):
            raise ConfigError(f"probe_floor {self.probe_floor} must be below the caps ({self.cap_m}, {self.cap_n})")

    @property
    def probe_ceiling(self) -> int:
        return int(self.headroom * min(self.cap_m, self.cap_n))

    def candidates(self) -> range:
        return range(self.probe_floor, self.probe_ceiling + 1)

    def table_for(self, source: TermSource) -> PrefixSumTable:
        return build_table(source, self.cap_m, self.cap_n)


def _check_caps(table: PrefixSumTable, cfg: ClassifierConfig) -> None:
    if table.cap_m < cfg.cap_m or table.cap_n < cfg.cap_n:
        raise ConfigError(f"table caps ({table.cap_m}, {table.cap_n}) below configured ({cfg.cap_m}, {cfg.cap_n})")


def _sums(table: PrefixSumTable, cfg: ClassifierConfig) -> np.ndarray:
    return table.sums[: cfg.cap_m + 1, : cfg.cap_n + 1]


def _pringsheim_profile(S: np.ndarray):
    """Deviation from the corner keyed by the first omitted index, min(m, n) + 1.

    s[cap] - s[m, n] is a sum of two blocks starting at row m + 1 or column
    n + 1, so this keying lines up with the block anchors of regular mode.
    """
    cap_m, cap_n = S.shape[0] - 1, S.shape[1] - 1
    limit = complex(S[cap_m, cap_n])
    dev = np.abs(S - limit)
    keys = np.minimum.outer(np.arange(cap_m + 1), np.arange(cap_n + 1)) + 1
    by_key = np.zeros(min(cap_m, cap_n) + 2)
    np.maximum.at(by_key, keys, dev)
    return limit, dev, by_key


def _pringsheim_core(S: np.ndarray, cfg: ClassifierConfig, what: str) -> Verdict:
    """Threshold kappa means |s[m, n] - s[cap]| < eps whenever min(m, n) >= kappa."""
    cap_m, cap_n = S.shape[0] - 1, S.shape[1] - 1
    caps = (cap_m, cap_n)
    limit, dev, by_key = _pringsheim_profile(S)
    prof = TailProfile(np.arange(len(by_key)), by_key)

    peak = float(np.abs(S).max())
    if peak > cfg.blowup:
        idx = np.unravel_index(int(np.abs(S).argmax()), S.shape)
        return Verdict(Status.DIVERGES, None, prof.residual(cfg.probe_floor), cfg.probe_floor,
                       tuple(int(i) for i in idx), cfg.eps, caps, f"{what}: partial sums exceed blow-up bound",
                       complex(S[idx]))

    geo = geometric_probes(min(cap_m, cap_n), cfg.probe_floor)
    tail = [prof.residual(g) for g in geo]
    if persists(tail, cfg.eps) and prof.residual(cfg.probe_ceiling) >= cfg.eps:
        g = geo[-1]
        region = dev[g:, g:]
        i, j = np.unravel_index(int(region.argmax()), region.shape)
        w = ((int(i + g), int(j + g)), (cap_m, cap_n))
        return Verdict(Status.DIVERGES, None, tail[-1], g, w, cfg.eps, caps,
                       f"{what}: oscillation >= eps persists past cap/8, cap/4, cap/2",
                       complex(S[w[0]] - limit))
    ray = [abs(complex(S[2 * g, 2 * g] - S[g, g])) for g in geo]
    if persists(ray, cfg.eps) and prof.residual(cfg.probe_ceiling) >= cfg.eps:
        g = geo[-1]
        return Verdict(Status.DIVERGES, None, tail[-1], g, ((g, g), (2 * g, 2 * g)), cfg.eps, caps,
                       f"{what}: diagonal increments s[2k,2k]-s[k,k] stay >= eps",
                       complex(S[2 * g, 2 * g] - S[g, g]))

    kappa = first_threshold(prof, cfg.candidates(), cfg.eps)
    if kappa is not None:
        return Verdict(Status.CONVERGES, limit, prof.residual(kappa), kappa, None, cfg.eps, caps,
                       f"{what}: tail within eps of the corner value")
    g = cfg.probe_ceiling
    return Verdict(Status.INCONCLUSIVE, None, prof.residual(g), g, None, cfg.eps, caps,
                   f"{what}: no threshold within headroom and no persistent divergence")


def classify_pringsheim(table: PrefixSumTable, cfg: ClassifierConfig) -> Verdict:
    """Does s[m, n] settle as min(m, n) grows?  The cluster value is s at the caps corner."""
    _check_caps(table, cfg)
    return _pringsheim_core(_sums(table, cfg), cfg, "pringsheim")


def classify_absolute(table: PrefixSumTable, cfg: ClassifierConfig) -> Verdict:
    """Pringsheim classification of the series of absolute values."""
    _check_caps(table, cfg)
    S = np.abs(table.terms[: cfg.cap_m + 1, : cfg.cap_n + 1]).cumsum(axis=0).cumsum(axis=1)
    return _pringsheim_core(S.astype(complex), cfg, "absolute")


# --- regular convergence --------------------------------------------------


def _axis_anchors(cap: int) -> list[int]:
    pts = {0, cap}
    p = 1
    while p <= cap:
        pts.add(p)
        if 3 * p // 2 <= cap:
            pts.add(3 * p // 2)
        p *= 2
    return sorted(pts)


class _Probes:
    """Accumulates (key, worst |block|, smallest offending block) over probe families."""

    def __init__(self, eps: float, size: int):
        self.eps = eps
        self.best = np.zeros(size)
        self.best_block: list = [None] * size
        self.off_key = -1
        self.off_area = np.inf
        self.off_block = None
        self.off_value = None

    def add(self, key: int, worst: float, block, value: complex, off_block=None, off_value=None):
        if worst > self.best[key] or self.best_block[key] is None:
            self.best[key] = worst
            self.best_block[key] = (block, value)
        if off_block is not None:
            m, n, M, N = off_block
            area = (M - m + 1) * (N - n + 1)
            if key > self.off_key or (key == self.off_key and area < self.off_area):
                self.off_key, self.off_area = key, area
                self.off_block, self.off_value = off_block, off_value

    def profile(self) -> TailProfile:
        return TailProfile(np.arange(len(self.best)), self.best, self.best_block)


def _regular_probes(table: PrefixSumTable, cfg: ClassifierConfig) -> _Probes:
    cm, cn = cfg.cap_m, cfg.cap_n
    P = table.padded[: cm + 2, : cn + 2]
    a = table.terms[: cm + 1, : cn + 1]
    eps = cfg.eps
    probes = _Probes(eps, max(cm, cn) + 2)

    # blocks anchored on a geometric lattice, all far corners
    for m in _axis_anchors(cm):
        for n in _axis_anchors(cn):
            B = P[m + 1:, n + 1:] - P[m, n + 1:][None, :] - P[m + 1:, n][:, None] + P[m, n]
            W = np.abs(B)
            i, j = np.unravel_index(int(W.argmax()), W.shape)
            off = W >= eps
            ob = ov = None
            if off.any():
                area = np.add.outer(np.arange(W.shape[0]) + 1, np.zeros(W.shape[1])) * (np.arange(W.shape[1]) + 1)
                area = np.where(off, area, np.inf)
                oi, oj = np.unravel_index(int(area.argmin()), area.shape)
                ob, ov = (m, n, m + int(oi), n + int(oj)), complex(B[oi, oj])
            probes.add(max(m, n), float(W[i, j]), (m, n, m + int(i), n + int(j)), complex(B[i, j]), ob, ov)

    # single-row and single-column strips, every start and end
    def strips(rows: np.ndarray, transpose: bool):
        ncols = rows.shape[1]
        Rp = np.zeros((rows.shape[0], ncols + 1), dtype=complex)
        Rp[:, 1:] = rows.cumsum(axis=1)
        upper = np.triu(np.ones((ncols, ncols), dtype=bool))
        for r in range(rows.shape[0]):
            B = Rp[r, None, 1:] - Rp[r, :-1, None]  # B[n, N] = sum_{k=n..N}
            W = np.where(upper, np.abs(B), 0.0)
            worst_n = W.max(axis=1)
            arg_n = W.argmax(axis=1)
            off = W >= eps
            first_off = off.argmax(axis=1)
            for n in range(ncols):
                key = max(r, n)
                N = int(arg_n[n])
                blk = (r, n, r, N) if not transpose else (n, r, N, r)
                ob = ov = None
                if off[n].any():
                    No = int(first_off[n])
                    ob = (r, n, r, No) if not transpose else (n, r, No, r)
                    ov = complex(B[n, No])
                probes.add(key, float(worst_n[n]), blk, complex(B[n, N]), ob, ov)

    strips(a, transpose=False)
    strips(a.T, transpose=True)

    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.sample_budget):
        m, M = sorted(int(x) for x in rng.integers(0, cm + 1, size=2))
        n, N = sorted(int(x) for x in rng.integers(0, cn + 1, size=2))
        v = complex(P[M + 1, N + 1] - P[m, N + 1] - P[M + 1, n] + P[m, n])
        w = abs(v)
        probes.add(max(m, n), w, (m, n, M, N), v, (m, n, M, N) if w >= eps else None, v)
    return probes


def _split(table: PrefixSumTable, m: int, n: int, M: int, N: int):
    """The larger of the two blocks whose sum is s[M, N] - s[m, n]."""
    parts = [((m + 1, 0, M, N), table.block_sum(m + 1, 0, M, N)) if m < M else None,
             ((0, n + 1, m, N), table.block_sum(0, n + 1, m, N)) if n < N else None]
    parts = [p for p in parts if p is not None]
    if not parts:
        return (0, 0, m, n), table.partial_sum(m, n)
    return max(parts, key=lambda p: abs(p[1]))


def _fold_pringsheim(probes: _Probes, table: PrefixSumTable, dev: np.ndarray, by_key: np.ndarray) -> None:
    cm, cn = dev.shape[0] - 1, dev.shape[1] - 1
    for key in range(1, len(by_key)):
        if by_key[key] <= probes.best[key]:
            continue
        g = key - 1
        row, col = dev[g, g:], dev[g:, g]
        m, n = (g, g + int(row.argmax())) if row.max() >= col.max() else (g + int(col.argmax()), g)
        probes.best[key] = by_key[key]
        probes.best_block[key] = _split(table, m, n, cm, cn)


def classify_regular(table: PrefixSumTable, cfg: ClassifierConfig) -> Verdict:
    """Are all blocks anchored past max(m, n) > kappa below eps?

    Probes every single-row and single-column strip, blocks anchored on a
    geometric lattice with every far corner, and ``sample_budget`` seeded
    random blocks. The Pringsheim tail is folded in as well, since regular
    convergence contains it; a Pringsheim divergence is a regular one.
    The divergence witness is the offending block with the largest anchor,
    smallest area first.
    """
    _check_caps(table, cfg)
    caps = (cfg.cap_m, cfg.cap_n)
    probes = _regular_probes(table, cfg)
    S = _sums(table, cfg)
    limit, dev, by_key = _pringsheim_profile(S)
    _fold_pringsheim(probes, table, dev, by_key)
    prof = probes.profile()

    pv = _pringsheim_core(S, cfg, "pringsheim")
    if pv.status is Status.DIVERGES:
        w = pv.witness
        (m, n), (M, N) = w if isinstance(w[0], tuple) else ((0, 0), w)
        if not isinstance(w[0], tuple):
            blk, val = (0, 0, M, N), table.partial_sum(M, N)
        else:
            blk, val = _split(table, m, n, M, N)
        return Verdict(Status.DIVERGES, None, prof.residual(pv.threshold), pv.threshold, blk, cfg.eps, caps,
                       "regular: " + pv.rule, val)
    if float(np.abs(table.terms[: cfg.cap_m + 1, : cfg.cap_n + 1]).max(initial=0.0)) > cfg.blowup:
        return Verdict(Status.DIVERGES, None, prof.residual(cfg.probe_floor), cfg.probe_floor,
                       probes.off_block, cfg.eps, caps, "regular: terms exceed blow-up bound", probes.off_value)
    geo = geometric_probes(min(caps), cfg.probe_floor)
    tail = [prof.residual(g) for g in geo]
    if persists(tail, cfg.eps) and prof.residual(cfg.probe_ceiling) >= cfg.eps:
        return Verdict(Status.DIVERGES, None, tail[-1], geo[-1], probes.off_block, cfg.eps, caps,
                       "regular: blocks >= eps persist past cap/8, cap/4, cap/2", probes.off_value)
    # the two blocks making up S[2g, 2g] - S[g, g]; catches slow (logarithmic) growth
    halves = [((g + 1, 0, 2 * g, 2 * g), table.block_sum(g + 1, 0, 2 * g, 2 * g)) for g in geo]
    halves += [((0, g + 1, g, 2 * g), table.block_sum(0, g + 1, g, 2 * g)) for g in geo]
    ray = [max(abs(halves[i][1]), abs(halves[i + len(geo)][1])) for i in range(len(geo))]
    if persists(ray, cfg.eps) and prof.residual(cfg.probe_ceiling) >= cfg.eps:
        blk, val = max((halves[len(geo) - 1], halves[-1]), key=lambda h: abs(h[1]))
        return Verdict(Status.DIVERGES, None, tail[-1], geo[-1], blk, cfg.eps, caps,
                       "regular: diagonal half-blocks stay >= eps", val)
    kappa = first_threshold(prof, cfg.candidates(), cfg.eps)
    if kappa is not None:
        return Verdict(Status.CONVERGES, limit, prof.residual(kappa), kappa, None, cfg.eps, caps,
                       "regular: every probed block past the threshold is below eps")
    g = cfg.probe_ceiling
    worst = prof.argworst(g)
    return Verdict(Status.INCONCLUSIVE, None, prof.residual(g), g, None if worst is None else worst[0],
                   cfg.eps, caps, "regular: no threshold within headroom and no persistent divergence")


# --- single sequences: rows, columns, inner limits -------------------------


def classify_sequence(values, cfg: ClassifierConfig, label: str = "sequence") -> Verdict:
    """Cauchy-style classification of a single sequence x[0..cap]."""
    x = np.asarray(values, dtype=complex)
    cap = len(x) - 1
    limit = complex(x[-1])
    dev = np.abs(x - limit)
    prof = TailProfile(np.arange(cap + 1), dev)
    ceiling = int(cfg.headroom * cap)
    if float(np.abs(x).max()) > cfg.blowup:
        i = int(np.abs(x).argmax())
        return Verdict(Status.DIVERGES, None, prof.residual(cfg.probe_floor), cfg.probe_floor, (i,), cfg.eps,
                       (cap,), f"{label}: exceeds blow-up bound", complex(x[i]))
    geo = geometric_probes(cap, cfg.probe_floor)
    tail = [prof.residual(g) for g in geo]
    if persists(tail, cfg.eps) and prof.residual(ceiling) >= cfg.eps:
        g = geo[-1]
        i = g + 1 + int(dev[g + 1:].argmax())
        return Verdict(Status.DIVERGES, None, tail[-1], g, (i, cap), cfg.eps, (cap,),
                       f"{label}: oscillation persists", complex(x[i] - limit))
    ray = [abs(complex(x[2 * g] - x[g])) for g in geo]
    if persists(ray, cfg.eps) and prof.residual(ceiling) >= cfg.eps:
        g = geo[-1]
        return Verdict(Status.DIVERGES, None, tail[-1], g, (g, 2 * g), cfg.eps, (cap,),
                       f"{label}: dyadic increments stay >= eps", complex(x[2 * g] - x[g]))
    kappa = first_threshold(prof, range(cfg.probe_floor, ceiling + 1), cfg.eps)
    if kappa is not None:
        return Verdict(Status.CONVERGES, limit, prof.residual(kappa), kappa, None, cfg.eps, (cap,),
                       f"{label}: tail within eps")
    return Verdict(Status.INCONCLUSIVE, None, prof.residual(ceiling), ceiling, None, cfg.eps, (cap,),
                   f"{label}: undecided")


@dataclass(frozen=True)
class RowColVerdicts:
    rows: list
    cols: list

    @property
    def all_rows_converge(self) -> bool:
        return all(v.converges for v in self.rows)

    @property
    def all_cols_converge(self) -> bool:
        return all(v.converges for v in self.cols)

    def summary(self) -> dict:
        def count(vs):
            out = {s.value: 0 for s in Status}
            for v in vs:
                out[v.status.value] += 1
            return out

        return {"rows": count(self.rows), "cols": count(self.cols)}


def row_col_verdicts(source: TermSource | PrefixSumTable, cfg: ClassifierConfig) -> RowColVerdicts:
    """Classify each row series and column series.

    Only rows j <= cap_m/2 (columns k <= cap_n/2) are judged, so each series
    has at least as many observed terms beyond its index as before it.
    """
    table = source if isinstance(source, PrefixSumTable) else cfg.table_for(source)
    _check_caps(table, cfg)
    a = table.terms[: cfg.cap_m + 1, : cfg.cap_n + 1]
    R = a.cumsum(axis=1)
    Cc = a.cumsum(axis=0).T
    rows = [classify_sequence(R[j], cfg, f"row {j}") for j in range(cfg.cap_m // 2 + 1)]
    cols = [classify_sequence(Cc[k], cfg, f"column {k}") for k in range(cfg.cap_n // 2 + 1)]
    return RowColVerdicts(rows, cols)


@dataclass(frozen=True)
class SuccessiveSumReport:
    by_rows: complex
    by_cols: complex
    pringsheim: complex
    residuals: tuple[float, float, float]
    tolerance: float
    regular: Verdict

    @property
    def passed(self) -> bool:
        return max(self.residuals) <= self.tolerance


def successive_sum_check(table: PrefixSumTable, cfg: ClassifierConfig) -> SuccessiveSumReport:
    """Row-by-row and column-by-column successive sums against the double sum.

    Requires regular convergence; the tolerance is 4 * eps.
    """
    reg = classify_regular(table, cfg)
    if not reg.converges:
        raise PreconditionError(f"successive summation needs regular convergence, got {reg.status.value}", reg)
    a = table.terms[: cfg.cap_m + 1, : cfg.cap_n + 1]
    r = a.sum(axis=1)  # row series summed to cap_n
    c = a.sum(axis=0)
    by_rows = complex(r.sum())
    by_cols = complex(c.sum())
    s = complex(_sums(table, cfg)[-1, -1])
    res = (abs(by_rows - by_cols), abs(by_rows - s), abs(by_cols - s))
    return SuccessiveSumReport(by_rows, by_cols, s, res, 4 * cfg.eps, reg)


@dataclass(frozen=True)
class IteratedLimitsReport:
    rows_then_cols: Optional[complex]  # lim_m lim_n s[m, n]
    cols_then_rows: Optional[complex]  # lim_n lim_m s[m, n]
    double: complex
    gaps: tuple[float, float, float]
    inner_rows: dict
    inner_cols: dict
    regular: Verdict


def sequence_to_terms(seq) -> np.ndarray:
    """Terms a[j, k] whose rectangular partial sums are ``seq``."""
    s = np.asarray(seq, dtype=complex)
    p = np.zeros((s.shape[0] + 1, s.shape[1] + 1), dtype=complex)
    p[1:, 1:] = s
    return p[1:, 1:] - p[:-1, 1:] - p[1:, :-1] + p[:-1, :-1]


def sequence_iterated_limits(seq, cfg: ClassifierConfig) -> IteratedLimitsReport:
    """Iterated limits of a regularly convergent double sequence s[m, n]."""
    s = np.asarray(seq, dtype=complex)[: cfg.cap_m + 1, : cfg.cap_n + 1]
    table = PrefixSumTable.from_terms(sequence_to_terms(s), "sequence")
    reg = classify_regular(table, cfg)
    if not reg.converges:
        raise PreconditionError(f"iterated limits need a regularly convergent sequence, got {reg.status.value}", reg)
    inner_n = [classify_sequence(s[m, :], cfg, f"s[{m}, .]") for m in range(s.shape[0])]
    inner_m = [classify_sequence(s[:, n], cfg, f"s[., {n}]") for n in range(s.shape[1])]

    def outer(inner):
        vals = [v.limit for v in inner]
        if any(v is None for v in vals):
            return None
        return classify_sequence(vals, cfg, "outer").limit

    a, b = outer(inner_n), outer(inner_m)
    d = complex(s[-1, -1])
    gap = lambda x, y: float("inf") if x is None or y is None else abs(x - y)  # noqa: E731
    summarize = lambda vs: RowColVerdicts(vs, []).summary()["rows"]  # noqa: E731
    return IteratedLimitsReport(a, b, d, (gap(a, b), gap(a, d), gap(b, d)),
                                summarize(inner_n), summarize(inner_m), reg)
