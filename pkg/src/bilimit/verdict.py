"""Trinary verdicts and the tail-residual decision rule shared by all classifiers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

# Divergence needs the offending residual at three geometrically spaced
# thresholds, with the last one at least this fraction of the first, and
# still present past the headroom ceiling (a late jump that settles before
# the ceiling is a convergent tail, not an oscillation).
PERSIST_RATIO = 0.5


class Status(str, enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


class PreconditionError(RuntimeError):
    """Raised when an operation's convergence hypothesis is not established."""

    def __init__(self, message: str, verdict: "Verdict"):
        super().__init__(message)
        self.verdict = verdict


@dataclass(frozen=True)
class Verdict:
    status: Status
    limit: Optional[complex]
    residual: float
    threshold: Optional[float]
    witness: Optional[tuple] = None
    eps: float = 0.0
    caps: tuple = ()
    rule: str = ""
    witness_value: Optional[complex] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        if self.status is Status.CONVERGES and (self.limit is None or not self.residual < self.eps):
            raise ValueError("a convergent verdict needs a limit and residual below eps")
        if self.status is Status.DIVERGES and self.witness is None:
            raise ValueError("a divergent verdict needs a witness")

    @property
    def converges(self) -> bool:
        return self.status is Status.CONVERGES

    @property
    def diverges(self) -> bool:
        return self.status is Status.DIVERGES


def geometric_probes(cap: float, floor: float = 0) -> list[float]:
    """cap/8, cap/4, cap/2: the thresholds at which divergence must persist."""
    out = [cap / 8, cap / 4, cap / 2]
    if isinstance(cap, (int, np.integer)):
        out = [int(cap) // 8, int(cap) // 4, int(cap) // 2]
    return [g for g in out if g >= floor and g > 0]


class TailProfile:
    """Worst deviation observed at each probe key, with suffix maxima.

    ``residual(t)`` is the largest deviation among probes whose key exceeds ``t``.
    """

    def __init__(self, keys: np.ndarray, worst: np.ndarray, payload: Optional[Sequence[Any]] = None):
        keys = np.asarray(keys, dtype=float).ravel()
        worst = np.asarray(worst, dtype=float).ravel()
        order = np.argsort(keys, kind="stable")
        keys, worst = keys[order], worst[order]
        self.keys = keys
        self.worst = worst
        self.payload = None if payload is None else [payload[i] for i in order]
        n = len(worst)
        suffix = np.zeros(n + 1)
        arg = np.full(n + 1, -1)
        for i in range(n - 1, -1, -1):
            if worst[i] >= suffix[i + 1]:
                suffix[i], arg[i] = worst[i], i
            else:
                suffix[i], arg[i] = suffix[i + 1], arg[i + 1]
        self._suffix = suffix
        self._arg = arg

    def _idx(self, t: float) -> int:
        return int(np.searchsorted(self.keys, t, side="right"))

    def residual(self, t: float) -> float:
        return float(self._suffix[self._idx(t)])

    def argworst(self, t: float):
        i = self._arg[self._idx(t)]
        if i < 0 or self.payload is None:
            return None
        return self.payload[i]


def first_threshold(profile: TailProfile, candidates: Sequence[float], eps: float) -> Optional[float]:
    for t in candidates:
        if profile.residual(t) < eps:
            return t
    return None


def persists(values: Sequence[float], eps: float) -> bool:
    return len(values) >= 3 and min(values) >= eps and values[-1] >= PERSIST_RATIO * values[0]


def to_jsonable(v: Verdict) -> dict:
    def num(x):
        return None if x is None else format(float(x), ".17g")

    def cnum(z):
        return None if z is None else {"re": num(complex(z).real), "im": num(complex(z).imag)}

    def wit(w):
        if w is None:
            return None
        if isinstance(w, (tuple, list)):
            return [wit(x) for x in w]
        if isinstance(w, (float, np.floating)):
            return num(w)
        if isinstance(w, (int, np.integer)):
            return int(w)
        return w

    return {
        "status": v.status.value,
        "limit": cnum(v.limit),
        "residual": num(v.residual),
        "threshold": num(v.threshold),
        "witness": wit(v.witness),
        "witness_value": cnum(v.witness_value),
        "eps": num(v.eps),
        "caps": [wit(c) for c in v.caps],
        "rule": v.rule,
    }
