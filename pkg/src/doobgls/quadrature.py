"""Improper integrals of tail functions.

All integrals are computed on the logarithmic axis ``s = ln t`` from the
logarithm of the integrand, with an adaptive Gauss-Kronrod (7, 15) rule
that is vectorised over panels.  Working with ``log f`` keeps moments such
as ``E tau**10000`` or tails such as ``exp(-1000)`` inside floating point
range, and turns the ``t**(p-1)`` singularity at zero into a plain
exponentially decaying left tail.

The integration range is chosen from the integrand itself: starting at its
maximum we march outwards with doubling steps until the log-integrand has
dropped by ``ln(1/eps_tail)``.  A second march to ``eps_tail / 100`` gives
the divergence test: if that extra piece adds more than ``1e-3`` of the
total, the integral is reported as divergent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import DomainError, NonIntegrableError
from .tail_model import EmpiricalTable, PowerLog, Scaled, TailFunction, eval_tail, quantile

__all__ = [
    "QuadratureConfig",
    "Estimate",
    "PowerH",
    "GeneralH",
    "gauss_kronrod_15",
    "log_panel_integrals",
    "log_integral",
    "log_moment",
    "moment_from_tail",
    "kappa_p",
    "log_kappa_many",
    "truncated_mean",
    "log_truncated_mean",
    "log_truncated_mean_grid",
]

DIVERGENCE_GROWTH = 1e-3
_MARCH_CAP = 1e12


@dataclass(frozen=True)
class QuadratureConfig:
    rtol: float = 1e-8
    atol: float = 1e-12
    eps_tail: float = 1e-14
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.eps_tail > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if not self.eps_tail < 1:
            raise DomainError("eps_tail must be below 1")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")


DEFAULT_CONFIG = QuadratureConfig()


class Estimate(NamedTuple):
    value: float
    divergent: bool


# -- h specifications -------------------------------------------------------


@dataclass(frozen=True)
class PowerH:
    """h(t) = t**delta."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"power exponent must be positive, got {self.delta}")

    def log_at_log(self, s):
        return self.delta * np.asarray(s, dtype=float)

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.delta

    def describe(self):
        return {"Delta": self.delta}


@dataclass(frozen=True)
class GeneralH:
    """An arbitrary positive, strictly increasing h given as a vectorised callable."""

    func: Callable
    name: str = "h"

    def log_at_log(self, s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.log(np.asarray(self.func(np.exp(np.asarray(s, dtype=float))), dtype=float))

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def describe(self):
        return {"h": self.name}


# -- Gauss-Kronrod engine ---------------------------------------------------

# Kronrod nodes on [0, 1]; odd indices are the 7-point Gauss nodes, last is 0.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_LOG_WK = np.log(np.concatenate([_WGK[:-1], _WGK[::-1]]))
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_LOG_WG = np.log(np.concatenate([_WG[:-1], _WG[::-1]]))


def gauss_kronrod_15(f, a, b):
    """Plain (non-log) K15 and G7 estimates of the integral of ``f`` over [a, b]."""
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    y = np.asarray(f(c + h * _NODES), dtype=float)
    wk = np.exp(_LOG_WK)
    wg = np.exp(_LOG_WG)
    return h * np.dot(wk, y), h * np.dot(wg, y[_GAUSS_IDX])


def _gk_log(logf, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    pts = c[:, None] + h[:, None] * _NODES[None, :]
    lf = np.asarray(logf(pts), dtype=float)
    lf = np.where(np.isnan(lf), -np.inf, lf)
    with np.errstate(divide="ignore", invalid="ignore"):
        lh = np.log(h)
        lk = logsumexp(lf + _LOG_WK, axis=1) + lh
        lg = logsumexp(lf[:, _GAUSS_IDX] + _LOG_WG, axis=1) + lh
    return lk, lg


def log_panel_integrals(logf, edges, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """log of the integral of ``exp(logf)`` over each panel [edges[i], edges[i+1]].

    Intervals are bisected until the Kronrod/Gauss discrepancy is below
    ``rtol`` relative to their panel total.
    """
    edges = np.asarray(edges, dtype=float)
    n = edges.size - 1
    result = np.full(n, -np.inf)
    if n <= 0:
        return result
    a, b, owner = edges[:-1].copy(), edges[1:].copy(), np.arange(n)
    nonempty = b > a
    a, b, owner = a[nonempty], b[nonempty], owner[nonempty]
    if a.size == 0:
        return result
    lk, lg = _gk_log(logf, a, b)
    panel = np.full(n, -np.inf)
    np.logaddexp.at(panel, owner, lk)
    used = 0
    for _ in range(200):
        with np.errstate(invalid="ignore", over="ignore"):
            rel = np.abs(np.expm1(lg - lk))
            rel = np.where(np.isneginf(lk) & np.isneginf(lg), 0.0, rel)
            rel = np.where(np.isnan(rel), 1.0, rel)
            weight = np.exp(lk - panel[owner])
            weight = np.where(np.isnan(weight), 0.0, weight)
        err = rel * weight
        tiny = (b - a) <= 1e-13 * np.maximum(1.0, np.abs(a))
        accept = (err <= cfg.rtol) | tiny
        if used >= cfg.max_subdivisions:
            if not accept.all():
                warnings.warn("quadrature subdivision budget exhausted", RuntimeWarning, stacklevel=2)
            accept[:] = True
        if accept.any():
            np.logaddexp.at(result, owner[accept], lk[accept])
        keep = ~accept
        if not keep.any():
            break
        a, b, owner = a[keep], b[keep], owner[keep]
        mid = 0.5 * (a + b)
        a, b, owner = np.concatenate([a, mid]), np.concatenate([mid, b]), np.concatenate([owner, owner])
        used += a.size
        lk, lg = _gk_log(logf, a, b)
    return result


def _scalar(logf):
    def f(s):
        v = float(np.asarray(logf(np.array([s], dtype=float)), dtype=float)[0])
        return -np.inf if math.isnan(v) else v
    return f


def _climb(f, s0, f0, lo, hi):
    """Locate the maximum of a (roughly unimodal) function; None when it keeps rising."""
    h = 0.25
    sr, sl = min(s0 + h, hi), max(s0 - h, lo)
    fr, fl = f(sr), f(sl)
    if fr <= f0 and fl <= f0:
        a, c = sl, sr
        best_s, best_f = s0, f0
    else:
        d = 1.0 if fr >= fl else -1.0
        s, fs = (sr, fr) if d > 0 else (sl, fl)
        prev = s0
        step = 2 * h
        while True:
            sn = min(max(s + d * step, lo), hi)
            if sn == s:
                a, c = (prev, s) if d > 0 else (s, prev)
                break
            fn = f(sn)
            if fn < fs:
                a, c = (prev, sn) if d > 0 else (sn, prev)
                break
            prev, s, fs = s, sn, fn
            step *= 2
            if abs(s - s0) > _MARCH_CAP:
                return None
        best_s, best_f = s, fs
    if c > a:
        res = minimize_scalar(lambda x: -f(x), bounds=(a, c), method="bounded",
                              options={"xatol": 1e-10 * max(1.0, abs(best_s))})
        if res.success and -res.fun > best_f:
            best_s, best_f = float(res.x), float(-res.fun)
    return best_s, best_f


def _march(f, s_star, target, bound, direction):
    """Points stepping away from ``s_star`` until f < target or ``bound`` is hit.

    Returns (points, reached) where ``reached`` is False when the cap was hit.
    """
    pts = []
    step = 0.25
    while True:
        s = s_star + direction * step
        s = min(s, bound) if direction > 0 else max(s, bound)
        pts.append(s)
        if s == bound or f(s) < target:
            return pts, True
        step *= 2
        if step > _MARCH_CAP:
            return pts, False


def log_integral(logf, cfg: QuadratureConfig = DEFAULT_CONFIG, lo=-np.inf, hi=np.inf,
                 start=0.0, breaks=()) -> Estimate:
    """log of the integral of ``exp(logf(s))`` over [lo, hi] with divergence detection.

    ``logf`` must accept arrays.  Returns ``Estimate(log_value, divergent)``;
    a divergent integral has ``log_value = inf``.
    """
    f = _scalar(logf)
    drop = -math.log(cfg.eps_tail)
    s0 = float(np.clip(start if math.isfinite(start) else 0.0, lo, hi))
    f0 = f(s0)
    if f0 == -np.inf:
        for k in range(64):
            for cand in (s0 - 2.0**k, s0 + 2.0**k):
                if lo <= cand <= hi and f(cand) > -np.inf:
                    s0, f0 = cand, f(cand)
                    break
            if f0 > -np.inf:
                break
        else:
            return Estimate(-np.inf, False)
    if f0 == np.inf:
        return Estimate(np.inf, True)
    peak = _climb(f, s0, f0, lo, hi)
    if peak is None:
        return Estimate(np.inf, True)
    s_star, fmax = peak

    right, ok_r = ([], True) if s_star >= hi else _march(f, s_star, fmax - drop, hi, +1)
    left, ok_l = ([], True) if s_star <= lo else _march(f, s_star, fmax - drop, lo, -1)
    if not (ok_r and ok_l):
        return Estimate(np.inf, True)
    r1 = right[-1] if right else s_star
    extra = []
    if r1 < hi:
        extra, ok = _march(f, r1, fmax - drop - math.log(100.0), hi, +1)
        if not ok:
            return Estimate(np.inf, True)
        # _march steps from r1, keep geometric spacing monotone
        extra = sorted(set(extra))
    l1 = left[-1] if left else s_star

    inner = [l1, *left, s_star, *right]
    inner += [math.log(b) for b in breaks if b > 0 and l1 < math.log(b) < r1]
    edges = np.unique(np.asarray(inner, dtype=float))
    shifted = lambda s: np.asarray(logf(s), dtype=float) - fmax  # noqa: E731
    main = log_panel_integrals(shifted, edges, cfg)
    i1 = logsumexp(main) if main.size else -np.inf
    i2 = -np.inf
    if extra:
        tail_edges = np.unique(np.asarray([r1, *extra], dtype=float))
        tail_edges = np.unique(np.concatenate([tail_edges, [math.log(b) for b in breaks
                                                             if b > 0 and r1 < math.log(b) < tail_edges[-1]]]))
        i2 = logsumexp(log_panel_integrals(shifted, tail_edges, cfg))
    if i1 == -np.inf:
        return Estimate(-np.inf, False)
    divergent = i2 - i1 > math.log(DIVERGENCE_GROWTH)
    total = np.logaddexp(i1, i2) + fmax
    return Estimate(np.inf if divergent else float(total), bool(divergent))


# -- moments ----------------------------------------------------------------


def _start_level(T: TailFunction):
    t0 = float(eval_tail(T, 0.0))
    if t0 <= 0:
        return None
    try:
        q = float(quantile(T, 0.5 * t0))
    except DomainError:
        return 0.0
    return math.log(q) if q > 0 else 0.0


def _log_moment_table(T: EmpiricalTable, p):
    ts, tails = T._arrays
    if tails[-1] > 0:
        return Estimate(np.inf, True)
    drops = -np.diff(np.concatenate([[1.0], tails]))
    with np.errstate(divide="ignore"):
        terms = np.log(drops) + p * np.log(ts)
    terms = np.where(drops > 0, terms, -np.inf)
    return Estimate(float(logsumexp(terms)), False)


def _hashable(x):
    try:
        hash(x)
    except TypeError:
        return False
    return True


def log_moment(T: TailFunction, p: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """ln E[tau**p] for any p > 0, from the tail via p * int t**(p-1) T(t) dt."""
    if not p > 0:
        raise DomainError(f"moment order must be positive, got {p}")
    if _hashable(T):
        return _log_moment_cached(T, float(p), cfg)
    return _log_moment(T, float(p), cfg)


@lru_cache(maxsize=65536)
def _log_moment_cached(T, p, cfg):
    return _log_moment(T, p, cfg)


def _log_moment(T, p, cfg):
    if isinstance(T, EmpiricalTable):
        return _log_moment_table(T, p)
    if isinstance(T, Scaled):
        inner = log_moment(T.inner, p, cfg)
        return inner if inner.divergent else Estimate(inner.value + p * math.log(T.factor), False)
    if isinstance(T, PowerLog) and p >= T.beta:
        return Estimate(np.inf, True)
    start = _start_level(T)
    if start is None:
        return Estimate(-np.inf, False)
    lp = math.log(p)

    def logf(s):
        s = np.asarray(s, dtype=float)
        return lp + p * s + T.log_tail_at_log(s)

    return log_integral(logf, cfg, start=start, breaks=T.breakpoints)


def moment_from_tail(T: TailFunction, p: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Lebesgue-Riesz norm ||tau||_p = [p int_0^inf t**(p-1) T(t) dt]**(1/p), p >= 1.

    Returns ``Estimate(norm, divergent)``; a divergent norm is ``inf``.
    """
    if not p >= 1:
        raise DomainError(f"norm order must be at least 1, got {p}")
    return norm_from_tail(T, p, cfg)


def norm_from_tail(T, q, cfg=DEFAULT_CONFIG) -> Estimate:
    """(E tau**q)**(1/q) for any q > 0; used internally for orders below 1."""
    lm = log_moment(T, q, cfg)
    if lm.divergent:
        return Estimate(np.inf, True)
    return Estimate(math.exp(lm.value / q) if lm.value > -np.inf else 0.0, False)


# -- kappa_p ----------------------------------------------------------------


def kappa_p(h, p: float, x: float, cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """int_0^x t**(p-1) / h(t) dt.

    Power ``h`` uses the antiderivative unless ``method="numeric"``.
    """
    if not x >= 0:
        raise DomainError("kappa_p is defined for x >= 0")
    if isinstance(h, PowerH) and not p > h.delta:
        raise NonIntegrableError(f"t**(p-1)/t**Delta is not integrable at 0 for p={p} <= Delta={h.delta}")
    if x == 0:
        return 0.0
    if isinstance(h, PowerH) and method == "auto":
        return x ** (p - h.delta) / (p - h.delta)
    v = _log_kappa(h, p, math.log(x), cfg)
    return math.exp(v)


def _log_kappa(h, p, lx, cfg):
    def logf(s):
        s = np.asarray(s, dtype=float)
        return p * s - h.log_at_log(s)

    est = log_integral(logf, cfg, hi=lx, start=min(lx, 0.0), breaks=(math.exp(min(lx, 0.0)),))
    if est.divergent:
        raise NonIntegrableError(f"t**(p-1)/h(t) is not integrable at 0 for p={p}")
    return est.value


def log_kappa_many(h, p, s, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """ln kappa_p(e**s) for an array of log-levels, sharing one cumulative pass."""
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    if isinstance(h, PowerH):
        if not p > h.delta:
            raise NonIntegrableError(f"p={p} <= Delta={h.delta}")
        return ((p - h.delta) * s) - math.log(p - h.delta)
    order = np.argsort(flat)
    srt = flat[order]
    out_sorted = np.full(srt.size, -np.inf)
    finite = np.isfinite(srt)
    if finite.any():
        fs = srt[finite]
        uniq, inv = np.unique(fs, return_inverse=True)
        head = _log_kappa(h, p, float(uniq[0]), cfg)

        def logf(x):
            x = np.asarray(x, dtype=float)
            return p * x - h.log_at_log(x)

        pieces = log_panel_integrals(logf, uniq, cfg)
        cum = np.logaddexp.accumulate(np.concatenate([[head], pieces]))
        out_sorted[finite] = cum[inv]
    out_sorted[np.isposinf(srt)] = np.inf
    out = np.empty_like(flat)
    out[order] = out_sorted
    return out.reshape(s.shape)


# -- truncated means --------------------------------------------------------


def _table_upper_integral(T: EmpiricalTable, t):
    """int_t^inf T(u) du for a step table, vectorised in t."""
    ts, tails = T._arrays
    t = np.asarray(t, dtype=float)
    if tails[-1] > 0:
        return np.full(t.shape, np.inf)
    areas = tails[:-1] * np.diff(ts)
    # suffix[k]: area of the steps starting at ts[k], ts[k+1], ...
    suffix = np.concatenate([np.cumsum(areas[::-1])[::-1], [0.0]])
    idx = np.searchsorted(ts, t, side="right") - 1
    k = np.clip(idx, 0, ts.size - 1)
    nxt = np.minimum(k + 1, ts.size - 1)
    inside = np.where(k + 1 < ts.size, tails[k] * (ts[nxt] - t) + suffix[nxt], 0.0)
    return np.where(idx < 0, (ts[0] - t) + suffix[0], inside)


def log_truncated_mean(T: TailFunction, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """ln E[tau * 1{tau > t}] = ln( t T(t) + int_t^inf T(s) ds )."""
    if not t >= 0:
        raise DomainError("truncated mean needs t >= 0")
    if isinstance(T, EmpiricalTable):
        upper = float(_table_upper_integral(T, t))
        if not math.isfinite(upper):
            return Estimate(np.inf, True)
        total = t * float(eval_tail(T, t)) + upper
        return Estimate(math.log(total) if total > 0 else -np.inf, False)
    if isinstance(T, Scaled):
        inner = log_truncated_mean(T.inner, t / T.factor, cfg)
        return inner if inner.divergent else Estimate(inner.value + math.log(T.factor), False)
    lt = math.log(t) if t > 0 else -np.inf
    start = _start_level(T)
    if start is None:
        return Estimate(-np.inf, False)

    def logf(s):
        s = np.asarray(s, dtype=float)
        return s + T.log_tail_at_log(s)

    upper = log_integral(logf, cfg, lo=lt, start=max(start, lt), breaks=T.breakpoints)
    if upper.divergent:
        return upper
    if t > 0:
        return Estimate(float(np.logaddexp(lt + T.log_tail(np.array(t)), upper.value)), False)
    return upper


def truncated_mean(T: TailFunction, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """E[tau * 1{tau > t}], the right side of the hypothesis for the coupling X = tau."""
    est = log_truncated_mean(T, t, cfg)
    if est.divergent:
        return Estimate(np.inf, True)
    return Estimate(math.exp(est.value), False)


def log_truncated_mean_grid(T: TailFunction, t_grid, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Vectorised :func:`log_truncated_mean` over a strictly increasing positive grid.

    Returns (log_values, divergent).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise DomainError("t-grid must be positive and strictly increasing")
    if isinstance(T, Scaled):
        vals, div = log_truncated_mean_grid(T.inner, t / T.factor, cfg)
        return vals + math.log(T.factor), div
    if isinstance(T, EmpiricalTable):
        upper = _table_upper_integral(T, t)
        if not np.all(np.isfinite(upper)):
            return np.full(t.shape, np.inf), True
        with np.errstate(divide="ignore"):
            return np.log(t * eval_tail(T, t) + upper), False
    s = np.log(t)
    head = log_integral(lambda x: np.asarray(x) + T.log_tail_at_log(x), cfg, lo=float(s[-1]),
                        start=float(s[-1]), breaks=T.breakpoints)
    if head.divergent:
        return np.full(t.shape, np.inf), True
    bps = [math.log(b) for b in T.breakpoints if b > 0]
    edges = np.union1d(s, [b for b in bps if s[0] < b < s[-1]])
    pieces = log_panel_integrals(lambda x: np.asarray(x) + T.log_tail_at_log(x), edges, cfg)
    rev = np.logaddexp.accumulate(np.concatenate([[head.value], pieces[::-1]]))[::-1]
    upper = rev[np.searchsorted(edges, s)]
    return np.logaddexp(s + T.log_tail_at_log(s), upper), False
