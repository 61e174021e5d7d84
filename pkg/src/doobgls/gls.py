"""Grand Lebesgue Spaces.

A generating function psi > 0 on an interval (a, b) defines the norm

    ||tau||_G(psi) = sup_{a < p < b} ||tau||_p / psi(p).

Suprema over p are taken on finite grids with one local golden-section
refinement; whether a supremum is really finite can only be judged
heuristically, so results carry a tri-state :class:`Status`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, EmptySearchSpaceError
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, log_moment, moment_from_tail
from .tail_model import EmpiricalTable, PowerLog, Scaled, SlowlyVarying, TailFunction

__all__ = [
    "Status",
    "GeneratingFunction",
    "PsiML",
    "SubgaussianPsi",
    "NuGamma",
    "NaturalOf",
    "DeltaBetaTransform",
    "Tabulated",
    "ConstantPsi",
    "default_p_grid",
    "eval_psi",
    "gls_norm",
    "young_fenchel",
    "tail_from_gls",
    "check_limit_condition",
    "check_slowly_varying",
    "membership_from_tail",
    "prop41_bound",
    "heavy_tail_moment_rate",
]

GROWTH_TOL = 1e-4
P_CAP = 200.0


class Status(str, enum.Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INDETERMINATE = "indeterminate"


class GeneratingFunction:
    """Base class.  Support is [a, b) unless ``a_open`` / ``b_open`` say otherwise."""

    a_open = False
    b_open = True

    @property
    def a(self) -> float:
        return 1.0

    @property
    def b(self) -> float:
        return math.inf

    def in_support(self, p):
        p = np.asarray(p, dtype=float)
        lo = p > self.a if self.a_open else p >= self.a
        hi = p < self.b if (self.b_open or math.isinf(self.b)) else p <= self.b
        return lo & hi & np.isfinite(p)

    def _log(self, p):
        raise NotImplementedError

    def log_psi(self, p):
        p = np.asarray(p, dtype=float)
        if not np.all(self.in_support(p)):
            raise DomainError(f"p outside the support ({self.a}, {self.b}) of {self!r}")
        return self._log(p)

    def __call__(self, p):
        return eval_psi(self, p)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PsiML(GeneratingFunction):
    """p**(1/m) L(p), m > 1."""

    m: float
    L: SlowlyVarying = SlowlyVarying()

    def __post_init__(self):
        if not self.m > 1:
            raise DomainError(f"PsiML needs m > 1, got {self.m}")

    def _log(self, p):
        return np.log(p) / self.m + self.L.log(p)

    def to_config(self):
        return {"kind": "PsiML", "params": {"m": self.m, "L": self.L.to_config()}}


@dataclass(frozen=True)
class SubgaussianPsi(GeneratingFunction):
    """sqrt(p)."""

    def _log(self, p):
        return 0.5 * np.log(p)

    def to_config(self):
        return {"kind": "Subgaussian", "params": {}}


@dataclass(frozen=True)
class NuGamma(GeneratingFunction):
    """exp(gamma p / 2)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"NuGamma needs gamma > 0, got {self.gamma}")

    def _log(self, p):
        return 0.5 * self.gamma * np.asarray(p, dtype=float)

    def to_config(self):
        return {"kind": "NuGamma", "params": {"gamma": self.gamma}}


@dataclass(frozen=True)
class ConstantPsi(GeneratingFunction):
    """psi identically equal to ``value`` on [lower, inf)."""

    value: float = 1.0
    lower: float = 1.0

    def __post_init__(self):
        if not (self.value > 0 and self.lower >= 1):
            raise DomainError("ConstantPsi needs value > 0 and lower >= 1")

    @property
    def a(self):
        return self.lower

    def _log(self, p):
        return np.full(np.shape(p), math.log(self.value))

    def to_config(self):
        return {"kind": "Constant", "params": {"value": self.value, "lower": self.lower}}


def _moment_limit(T: TailFunction) -> float:
    if isinstance(T, PowerLog):
        return T.beta
    if isinstance(T, Scaled):
        return _moment_limit(T.inner)
    if isinstance(T, EmpiricalTable) and T.tail[-1] > 0:
        return 1.0
    return math.inf


@dataclass(frozen=True)
class NaturalOf(GeneratingFunction):
    """The natural function p -> ||tau||_p of a tail."""

    tail: TailFunction
    cfg: QuadratureConfig = DEFAULT_CONFIG

    @property
    def b(self):
        return _moment_limit(self.tail)

    def _log(self, p):
        p = np.asarray(p, dtype=float)
        out = np.empty(p.shape)
        for i, q in np.ndenumerate(p):
            lm = log_moment(self.tail, float(q), self.cfg)
            out[i] = np.inf if lm.divergent else lm.value / q
        return out

    def to_config(self):
        return {"kind": "Natural", "params": {"tail": self.tail.to_config()}}


@dataclass(frozen=True)
class DeltaBetaTransform(GeneratingFunction):
    """p/(p - Delta) beta**p psi(p) on (Delta, b)."""

    inner: GeneratingFunction
    delta: float
    beta: float
    a_open = True

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if not self.inner.a <= self.delta < self.inner.b:
            raise DomainError(f"Delta={self.delta} must lie in the support of the inner function")

    @property
    def a(self):
        return self.delta

    @property
    def b(self):
        return self.inner.b

    @property
    def b_open(self):
        return self.inner.b_open

    def _log(self, p):
        p = np.asarray(p, dtype=float)
        return np.log(p) - np.log(p - self.delta) + p * math.log(self.beta) + self.inner._log(p)

    def to_config(self):
        return {"kind": "DeltaBeta",
                "params": {"inner": self.inner.to_config(), "delta": self.delta, "beta": self.beta}}


@dataclass(frozen=True)
class Tabulated(GeneratingFunction):
    """psi given at grid points, log-linear in between; support [p[0], p[-1]]."""

    p: tuple
    psi: tuple
    b_open = False

    def __post_init__(self):
        ps = np.asarray(self.p, dtype=float)
        vs = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "p", tuple(ps.tolist()))
        object.__setattr__(self, "psi", tuple(vs.tolist()))
        if ps.ndim != 1 or ps.size < 2 or ps.shape != vs.shape:
            raise DomainError("tabulated psi needs at least two (p, psi) pairs")
        if ps[0] < 1 or np.any(np.diff(ps) <= 0):
            raise DomainError("tabulated p must start at >= 1 and increase strictly")
        if np.any(~(vs > 0)):
            raise DomainError("tabulated psi must be strictly positive")

    @property
    def a(self):
        return self.p[0]

    @property
    def b(self):
        return self.p[-1]

    def _log(self, p):
        return np.interp(p, self.p, np.log(self.psi))

    def to_config(self):
        return {"kind": "Tabulated", "params": {"p": list(self.p), "psi": list(self.psi)}}


def eval_psi(psi: GeneratingFunction, p):
    """psi(p); raises :class:`DomainError` outside the support."""
    out = np.exp(psi.log_psi(p))
    return float(out) if np.ndim(p) == 0 else out


def default_p_grid(psi: GeneratingFunction, n: int = 256, p_cap: float = P_CAP):
    """n log-spaced points from the lower end of the support to min(b, p_cap)."""
    lo = psi.a + 1e-3 if psi.a_open else psi.a
    hi = min(psi.b, p_cap)
    if math.isfinite(psi.b) and psi.b <= p_cap and psi.b_open:
        hi = psi.b - 1e-3
    if not hi > lo:
        raise EmptySearchSpaceError("support too small for a p-grid")
    return np.geomspace(lo, hi, n)


def _grid_in_support(psi, p_grid):
    grid = default_p_grid(psi) if p_grid is None else np.sort(np.atleast_1d(np.asarray(p_grid, dtype=float)))
    grid = grid[psi.in_support(grid) & (grid >= 1)]
    if grid.size == 0:
        raise EmptySearchSpaceError("no grid point inside the support")
    return grid


class GLSNorm(NamedTuple):
    norm: float
    argmax_p: float
    status: Status

    @property
    def divergent(self):
        return self.status is not Status.FINITE


def _log_ratio(T, psi, p, cfg):
    lm = log_moment(T, float(p), cfg)
    if lm.divergent:
        return np.inf
    lp = float(psi._log(np.array(p)))
    if math.isinf(lp) and lp > 0:
        return -np.inf
    return lm.value / p - lp


def _grows_on_doubling(log_f, p, log_at_p) -> bool:
    """Growth test past a truncated grid: log-increments over p -> 2p -> 4p.

    A convergent ratio such as 1 - 1/p has increments that halve per
    doubling; genuine growth (powers, logs, exponentials) keeps them from
    shrinking that fast.
    """
    far = [log_f(2.0 * p), log_f(4.0 * p)]
    if np.isposinf(far[-1]):
        return True
    d1, d2 = far[0] - log_at_p, far[1] - far[0]
    return bool(d2 > math.log1p(GROWTH_TOL) and d2 >= 0.75 * d1)


def gls_norm(T: TailFunction, psi: GeneratingFunction, p_grid=None,
             cfg: QuadratureConfig = DEFAULT_CONFIG) -> GLSNorm:
    """sup_p ||tau||_p / psi(p) on a grid, refined once around the maximiser."""
    grid = _grid_in_support(psi, p_grid)
    lr = np.array([_log_ratio(T, psi, p, cfg) for p in grid])
    if np.any(np.isnan(lr)):
        return GLSNorm(math.nan, math.nan, Status.INDETERMINATE)
    if np.any(np.isposinf(lr)):
        k = int(np.argmax(np.isposinf(lr)))
        return GLSNorm(math.inf, float(grid[k]), Status.DIVERGENT)
    k = int(np.argmax(lr))
    best_p, best = float(grid[k]), float(lr[k])
    if np.isfinite(best) and grid.size > 1:
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(lambda q: -_log_ratio(T, psi, q, cfg), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-8})
        if res.success and np.isfinite(res.fun) and -res.fun > best:
            best_p, best = float(res.x), float(-res.fun)
    growing = bool(grid.size >= 2 and np.isfinite(lr[-2]) and lr[-1] - lr[-2] > math.log1p(GROWTH_TOL))
    if growing and p_grid is None and math.isinf(psi.b):
        growing = _grows_on_doubling(lambda q: _log_ratio(T, psi, q, cfg), float(grid[-1]), float(lr[-1]))
    status = Status.DIVERGENT if growing else Status.FINITE
    norm = math.inf if growing else (math.exp(best) if best > -np.inf else 0.0)
    return GLSNorm(norm, best_p, status)


def _young_fenchel(psi, u, p_grid):
    grid = _grid_in_support(psi, p_grid)
    lp = psi._log(grid)
    vals = grid * (u - lp)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    best_p, best = float(grid[k]), float(vals[k])
    if grid.size > 1:
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]

        def neg(q):
            v = q * (u - float(psi._log(np.array(q))))
            return np.inf if math.isnan(v) else -v

        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
        if res.success and -res.fun > best:
            best_p, best = float(res.x), float(-res.fun)
    return best, best_p


def young_fenchel(psi: GeneratingFunction, u: float, p_grid=None) -> float:
    """h*(u) = sup_p (p u - p ln psi(p)), the conjugate of h(p) = p ln psi(p)."""
    return _young_fenchel(psi, float(u), p_grid)[0]


def tail_from_gls(psi: GeneratingFunction, k: float, t: float, p_grid=None) -> float:
    """Tail bound exp(-h*(ln(t/k))) for ||tau||_G(psi) = k; 1 when t/k < e."""
    if not k > 0:
        raise DomainError("norm value k must be positive")
    if not t >= 0:
        raise DomainError("t must be non-negative")
    x = t / k
    if x < math.e:
        return 1.0
    return min(1.0, math.exp(-young_fenchel(psi, math.log(x), p_grid)))


def check_limit_condition(psi: GeneratingFunction, p_max: float = 1e4):
    """Numeric proxy for psi(p)/p -> 0 as p -> inf.

    True when psi(p)/p is below 0.1 at ``p_max`` and has fallen by at least
    sqrt(2) since ``p_max/4``; None when the support is bounded above.
    """
    if math.isfinite(psi.b):
        return None
    r_lo = float(psi._log(np.array(p_max / 4))) - math.log(p_max / 4)
    r_hi = float(psi._log(np.array(p_max))) - math.log(p_max)
    return bool(r_hi < math.log(0.1) and r_lo - r_hi >= 0.5 * math.log(2.0))


class SlowlyVaryingCheck(NamedTuple):
    theta: float
    sup_ratio: float
    growing: bool


def check_slowly_varying(L: SlowlyVarying, theta_list, p_grid=None) -> list[SlowlyVaryingCheck]:
    """Grid suprema of L(p**theta)/L(p) for each theta."""
    grid = np.geomspace(1.0, 1e6, 512) if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(grid < 1):
        raise DomainError("p-grid must lie in [1, inf)")
    lp = np.log(grid)
    out = []
    for theta in theta_list:
        if not theta > 0:
            raise DomainError("theta must be positive")
        lr = L.log_at_log(theta * lp) - L.log(grid)
        growing = bool(lr.size >= 2 and lr[-1] - lr[-2] > math.log1p(GROWTH_TOL))
        out.append(SlowlyVaryingCheck(float(theta), float(np.exp(lr.max())), growing))
    return out


class Membership(NamedTuple):
    finite: bool | None
    sup_ratio: float
    status: Status


def membership_from_tail(T: TailFunction, psi: GeneratingFunction, p_grid=None,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> Membership:
    """Whether tau looks like a member of G(psi), judged by the grid norm."""
    if math.isinf(psi.b) and check_limit_condition(psi) is False:
        warnings.warn("psi(p)/p does not appear to vanish; tail-based membership may fail",
                      RuntimeWarning, stacklevel=2)
    res = gls_norm(T, psi, p_grid, cfg)
    finite = None if res.status is Status.INDETERMINATE else res.status is Status.FINITE
    return Membership(finite, res.norm, res.status)


class Prop41(NamedTuple):
    lhs: float
    rhs: float
    holds: bool | None


def prop41_bound(T_xi: TailFunction, T_X: TailFunction, psi: GeneratingFunction, Delta: float,
                 beta: float, C: float, p_grid=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Prop41:
    """Compare ||xi||_G(psi_{Delta,beta}) with C ||X||_G(psi).

    The hypothesis with power Delta is the caller's responsibility.
    """
    if not C > 0:
        raise DomainError("C must be positive")
    transformed = DeltaBetaTransform(psi, Delta, beta)
    lhs = gls_norm(T_xi, transformed, p_grid, cfg)
    rhs = gls_norm(T_X, psi, p_grid, cfg)
    if lhs.status is not Status.FINITE or rhs.status is not Status.FINITE:
        return Prop41(lhs.norm, C * rhs.norm, None)
    rhs_v = C * rhs.norm
    return Prop41(lhs.norm, rhs_v, bool(lhs.norm <= rhs_v * (1 + 1e-6)))


class HeavyTailReport(NamedTuple):
    sup_ratio: float
    bounded: bool
    level_sups: tuple
    p_top: tuple


def heavy_tail_moment_rate(beta: float, gamma: float, L: SlowlyVarying = SlowlyVarying(), p_grid=None,
                           exponent: float | None = None, refinements: int = 2,
                           cfg: QuadratureConfig = DEFAULT_CONFIG) -> HeavyTailReport:
    """Check ||tau||_p (beta-p)**e / L(1/(beta-p))**(1/beta) stays bounded as p -> beta-.

    ``tau`` has the tail t**-beta (ln t)**gamma L(ln t); ``e`` defaults to
    (gamma+1)/beta.  Each refinement adds ten points between the current
    closest approach d to beta and d/10; the ratio counts as bounded when
    no refinement raises the running supremum by more than 1e-4.
    """
    T = PowerLog(beta, gamma, L)
    e = (gamma + 1) / beta if exponent is None else float(exponent)
    grid = np.linspace(1.0, beta - 0.01, 100) if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(grid < 1) or np.any(grid >= beta):
        raise DomainError(f"p-grid must lie in [1, {beta})")

    def ratios(ps):
        out = []
        for p in ps:
            nrm = moment_from_tail(T, float(p), cfg)
            d = beta - p
            out.append(math.log(nrm.value) + e * math.log(d) - float(L.log(1.0 / d)) / beta)
        return np.array(out)

    sup = float(ratios(grid).max())
    sups = [sup]
    tops = [float(grid.max())]
    bounded = True
    d = beta - grid.max()
    for _ in range(refinements):
        batch = beta - np.geomspace(d, d / 10, 11)[1:]
        level = float(ratios(batch).max())
        if level > sup + math.log1p(GROWTH_TOL):
            bounded = False
        sup = max(sup, level)
        sups.append(sup)
        d /= 10
        tops.append(float(beta - d))
    return HeavyTailReport(math.exp(sup), bounded, tuple(math.exp(s) for s in sups), tuple(tops))
