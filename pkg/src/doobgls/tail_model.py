"""Tail functions t -> P(tau > t) of non-negative random variables.

Every model is an immutable dataclass.  The numerical core works with the
log-tail on a logarithmic axis, ``s = ln t``, so that very light and very
heavy tails can be integrated without overflow; :meth:`log_tail_at_log` is
the one method a new model has to provide.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, UnboundedQuantileError

__all__ = [
    "BISECTION_TOL",
    "BISECTION_MAX_ITER",
    "SlowlyVarying",
    "TailFunction",
    "Exponential",
    "PowerLog",
    "LogSquare",
    "Subgaussian",
    "EmpiricalTable",
    "Scaled",
    "point_mass",
    "eval_tail",
    "quantile",
]

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class SlowlyVarying:
    """L(x) = (ln(x + 1))**r.  ``r = 0`` is the constant function 1."""

    r: float = 0.0

    def log(self, x):
        x = np.asarray(x, dtype=float)
        if self.r == 0:
            return np.zeros_like(x)
        return self.r * np.log(np.log1p(x))

    def log_at_log(self, lx):
        """ln L(e**lx), safe for huge lx."""
        lx = np.asarray(lx, dtype=float)
        if self.r == 0:
            return np.zeros_like(lx)
        return self.r * np.log(np.logaddexp(lx, 0.0))

    def __call__(self, x):
        return _scalar_or_array(np.exp(self.log(x)), x)

    def to_config(self) -> dict:
        return {"r": self.r}


class TailFunction:
    """Base class; subclasses are frozen dataclasses."""

    #: t-values where the tail jumps or has a kink
    breakpoints: tuple = ()

    def log_tail_at_log(self, s):
        """ln T(e**s) for an array of log-levels ``s`` (``-inf`` allowed)."""
        raise NotImplementedError

    def log_tail(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            s = np.log(t)
        return self.log_tail_at_log(s)

    def __call__(self, t):
        return eval_tail(self, t)

    def quantile(self, q, tol=BISECTION_TOL, max_iter=BISECTION_MAX_ITER):
        return quantile(self, q, tol=tol, max_iter=max_iter)

    def _quantile(self, q, tol, max_iter):
        return _bisect_quantile(self, q, tol, max_iter)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(TailFunction):
    """Standard exponential law, T(t) = exp(-t)."""

    def log_tail_at_log(self, s):
        return -np.exp(np.asarray(s, dtype=float))

    def _quantile(self, q, tol, max_iter):
        return -np.log(q) + 0.0

    def to_config(self):
        return {"kind": "Exponential", "params": {}}


@dataclass(frozen=True)
class Subgaussian(TailFunction):
    """T(t) = exp(-c t**2)."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"Subgaussian needs c > 0, got {self.c}")

    def log_tail_at_log(self, s):
        return -self.c * np.exp(2.0 * np.asarray(s, dtype=float))

    def _quantile(self, q, tol, max_iter):
        return np.sqrt(-np.log(q) / self.c) + 0.0

    def to_config(self):
        return {"kind": "Subgaussian", "params": {"c": self.c}}


@dataclass(frozen=True)
class LogSquare(TailFunction):
    """T(t) = exp(-ln(t)**2 / (2 gamma)) for t >= e, and 1 below e."""

    gamma: float = 1.0
    breakpoints = (math.e,)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"LogSquare needs gamma > 0, got {self.gamma}")

    def log_tail_at_log(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, 0.0, -np.square(np.maximum(s, 1.0)) / (2.0 * self.gamma))

    def _quantile(self, q, tol, max_iter):
        at_e = math.exp(-0.5 / self.gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.exp(np.sqrt(2.0 * self.gamma * -np.log(q)))
        return np.where(q >= 1.0, 0.0, np.where(q >= at_e, math.e, inner))

    def to_config(self):
        return {"kind": "LogSquare", "params": {"gamma": self.gamma}}


@dataclass(frozen=True)
class PowerLog(TailFunction):
    """T(t) = t**-beta (ln t)**gamma L(ln t) for t >= e, clamped to 1, and 1 below e.

    Moments of order p are finite exactly for p < beta.
    """

    beta: float
    gamma: float = 0.0
    L: SlowlyVarying = SlowlyVarying()
    breakpoints = (math.e,)

    def __post_init__(self):
        if not self.beta > 1:
            raise DomainError(f"PowerLog needs beta > 1, got {self.beta}")
        if not self.gamma > -1:
            raise DomainError(f"PowerLog needs gamma > -1, got {self.gamma}")
        s = np.geomspace(1.0, 1e8, 4000)
        if np.any(np.diff(self._formula(s)) > 1e-12):
            raise DomainError("PowerLog parameters give a tail that increases beyond t = e")

    def _formula(self, s):
        return -self.beta * s + self.gamma * np.log(s) + self.L.log(s)

    def log_tail_at_log(self, s):
        s = np.asarray(s, dtype=float)
        safe = np.maximum(s, 1.0)
        return np.where(s < 1.0, 0.0, np.minimum(self._formula(safe), 0.0))

    def _quantile(self, q, tol, max_iter):
        return _bisect_quantile(self, q, tol, max_iter, s_floor=1.0)

    def to_config(self):
        return {
            "kind": "PowerLog",
            "params": {"beta": self.beta, "gamma": self.gamma, "L": self.L.to_config()},
        }


@dataclass(frozen=True)
class Scaled(TailFunction):
    """Tail of ``factor * tau``: T(t) = inner(t / factor)."""

    inner: TailFunction
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise DomainError(f"scale factor must be positive, got {self.factor}")

    @property
    def breakpoints(self):
        return tuple(self.factor * b for b in self.inner.breakpoints)

    def log_tail_at_log(self, s):
        return self.inner.log_tail_at_log(np.asarray(s, dtype=float) - math.log(self.factor))

    def log_tail(self, t):
        return self.inner.log_tail(np.asarray(t, dtype=float) / self.factor)

    def _quantile(self, q, tol, max_iter):
        return self.factor * self.inner._quantile(q, tol, max_iter)

    def to_config(self):
        return {"kind": "Scaled", "params": {"inner": self.inner.to_config(), "factor": self.factor}}


@dataclass(frozen=True)
class EmpiricalTable(TailFunction):
    """Right-continuous step tail: T(t) = tail[k] on [t[k], t[k+1]), and 1 before t[0]."""

    t: tuple
    tail: tuple

    def __post_init__(self):
        ts = np.asarray(self.t, dtype=float)
        tails = np.asarray(self.tail, dtype=float)
        object.__setattr__(self, "t", tuple(float(x) for x in ts))
        object.__setattr__(self, "tail", tuple(float(x) for x in tails))
        if ts.ndim != 1 or ts.size == 0 or ts.shape != tails.shape:
            raise DomainError("empirical table needs two non-empty columns of equal length")
        if ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise DomainError("empirical table t-values must be non-negative and strictly increasing")
        if np.any(tails < 0) or np.any(tails > 1) or np.any(np.diff(tails) > 0):
            raise DomainError("empirical tail values must lie in [0, 1] and be nonincreasing")

    @cached_property
    def _arrays(self):
        return np.asarray(self.t), np.asarray(self.tail)

    @property
    def breakpoints(self):
        return self.t

    def log_tail(self, t):
        ts, tails = self._arrays
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(ts, t, side="right") - 1
        vals = np.where(idx < 0, 1.0, tails[np.maximum(idx, 0)])
        with np.errstate(divide="ignore"):
            return np.log(vals)

    def log_tail_at_log(self, s):
        return self.log_tail(np.exp(np.asarray(s, dtype=float)))

    def _quantile(self, q, tol, max_iter):
        ts, tails = self._arrays
        k = np.searchsorted(-tails, -q, side="left")
        if np.any((k >= ts.size) & (q < 1.0)):
            raise UnboundedQuantileError("quantile level below the last tabulated tail value")
        return np.where(q >= 1.0, 0.0, ts[np.minimum(k, ts.size - 1)])

    @classmethod
    def from_csv(cls, path) -> "EmpiricalTable":
        """Load a two-column ``t,tail`` CSV; a non-numeric first row is a header."""
        rows = []
        with open(Path(path), newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise DomainError(f"bad CSV row {i + 1}: {row!r}") from None
        if not rows:
            raise DomainError(f"no data rows in {path}")
        t, tail = zip(*rows)
        return cls(t, tail)

    @classmethod
    def from_sample(cls, values) -> "EmpiricalTable":
        """Empirical tail of a sample: fraction of values strictly above each distinct value."""
        v = np.sort(np.asarray(values, dtype=float))
        if v.size == 0 or v[0] < 0:
            raise DomainError("sample must be non-empty and non-negative")
        uniq, counts = np.unique(v, return_counts=True)
        above = v.size - np.cumsum(counts)
        return cls(uniq, above / v.size)

    def to_config(self):
        return {"kind": "EmpiricalTable", "params": {"t": list(self.t), "tail": list(self.tail)}}


def point_mass(value: float) -> EmpiricalTable:
    """Deterministic variable ``tau == value``; ``point_mass(0)`` has T identically 0."""
    return EmpiricalTable((value,), (0.0,))


def eval_tail(T: TailFunction, t):
    """P(tau > t) for scalar or array ``t >= 0``."""
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("tail is evaluated only at t >= 0")
    out = np.clip(np.exp(T.log_tail(arr)), 0.0, 1.0)
    return _scalar_or_array(out, t)


def quantile(T: TailFunction, q, tol=BISECTION_TOL, max_iter=BISECTION_MAX_ITER):
    """inf{t >= 0 : T(t) <= q} for q in (0, 1]."""
    arr = np.asarray(q, dtype=float)
    if np.any(~(arr > 0)):
        raise UnboundedQuantileError("quantile level must be positive")
    if np.any(arr > 1):
        raise DomainError("quantile level must not exceed 1")
    out = np.asarray(T._quantile(arr, tol, max_iter), dtype=float)
    return _scalar_or_array(out, q)


def _bisect_quantile(T, q, tol, max_iter, s_floor=-np.inf):
    """Vectorised bisection on s = ln t.

    Below ``s_floor`` the tail is assumed to be 1, so the answer is either
    0, e**s_floor or lies above it.
    """
    q = np.asarray(q, dtype=float)
    lq = np.log(q)
    out = np.zeros_like(q)
    if np.isfinite(s_floor):
        at_floor = T.log_tail_at_log(np.array(s_floor))
        done = (q >= 1.0) | (at_floor <= lq)
        out = np.where(done & (q < 1.0), math.exp(s_floor), 0.0)
        lo = np.full_like(q, s_floor)
    else:
        done = (q >= 1.0) | (T.log_tail_at_log(np.array(-np.inf)) <= lq)
        lo = np.full_like(q, -1.0)
        for _ in range(2000):
            bad = ~done & (T.log_tail_at_log(lo) <= lq)
            if not bad.any():
                break
            lo = np.where(bad, 2 * lo - 1, lo)
    hi = np.where(done, lo, lo + 1.0)
    for _ in range(2000):
        need = ~done & (T.log_tail_at_log(hi) > lq)
        if not need.any():
            break
        hi = np.where(need, lo + 2 * (hi - lo), hi)
    else:
        raise UnboundedQuantileError("tail does not fall below the requested level")
    for _ in range(max_iter):
        active = ~done & (np.exp(hi) - np.exp(lo) > tol)
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        active &= ~stuck
        below = T.log_tail_at_log(mid) <= lq
        hi = np.where(active & below, mid, hi)
        lo = np.where(active & ~below, mid, lo)
    return np.where(done, out, np.exp(hi))
