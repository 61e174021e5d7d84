"""Doob-type moment bounds from the hypothesis

    h(t) P(xi > beta t) <= C E[X 1{xi > t}],  t >= 0.

Integrating the hypothesis against p t**(p-1) gives
``E (xi/beta)**p <= C p E[X kappa_p(xi)]``; Hoelder with exponents
(theta, alpha) and a restriction ``||kappa_p(xi)||_theta <= v ||xi||_p**r / p``
then bound ``||xi||_p`` through ``[C v beta**p ||X||_alpha]**(1/(p-r))``.
This module computes every ingredient and searches the (theta, r) grid for
the smallest bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DivergenceError,
    DomainError,
    EmptySearchSpaceError,
    InfeasibleHypothesisError,
    NonIntegrableError,
)
from .quadrature import (
    DEFAULT_CONFIG,
    Estimate,
    GeneralH,
    PowerH,
    QuadratureConfig,
    _start_level,
    log_integral,
    log_kappa_many,
    log_moment,
    log_truncated_mean_grid,
    moment_from_tail,
    norm_from_tail,
)
from .tail_model import TailFunction

__all__ = [
    "PowerH",
    "GeneralH",
    "DoobHypothesis",
    "Independent",
    "IDENTICAL",
    "AdmissibleC",
    "BoundCandidate",
    "default_t_grid",
    "default_theta_grid",
    "default_r_grid",
    "min_admissible_C",
    "K_p_norm",
    "fit_v",
    "theorem_bound",
    "candidate_grid",
    "optimize_bound",
    "closed_form_bound",
    "derived_form_bound",
    "multivariate_bound",
    "vector_p_norm",
    "l_s_norm",
    "bound_report",
]

IDENTICAL = "identical"


@dataclass(frozen=True)
class DoobHypothesis:
    h: PowerH | GeneralH
    beta: float
    C: float

    def __post_init__(self):
        if not (self.beta > 0 and self.C > 0):
            raise DomainError("hypothesis constants beta and C must be positive")

    @property
    def delta(self):
        return self.h.delta if isinstance(self.h, PowerH) else None


@dataclass(frozen=True)
class Independent:
    """X independent of xi, with its own tail."""

    tail_X: TailFunction


class AdmissibleC(NamedTuple):
    C_min: float
    divergent: bool
    argmax_t: float


@dataclass(frozen=True)
class BoundCandidate:
    theta: float
    alpha: float
    r: float
    v: float
    bound: float

    def to_dict(self):
        return {"theta": self.theta, "alpha": self.alpha, "r": self.r, "v": self.v}


def default_t_grid(t_max: float = 1e3, n: int = 10_000):
    """Uniform grid t_max/n, 2 t_max/n, ..., t_max."""
    return np.linspace(t_max / n, t_max, n)


def default_theta_grid(n: int = 64, theta_max: float = 20.0):
    """n log-spaced points on (1, theta_max]."""
    return np.exp(np.arange(1, n + 1) / n * math.log(theta_max))


def default_r_grid(p: float, n: int = 64):
    """n points on [1, p - 1e-3]."""
    top = p - 1e-3
    if top < 1:
        raise DomainError(f"no admissible r in [1, p) for p={p}")
    return np.linspace(1.0, top, n)


def _h_log(h, s):
    return h.log_at_log(s)


def min_admissible_C(T_xi: TailFunction, coupling, h, beta: float, t_grid=None,
                     cfg: QuadratureConfig = DEFAULT_CONFIG) -> AdmissibleC:
    """Smallest C making the hypothesis hold on every grid point.

    ``coupling`` is ``"identical"`` (X = xi) or :class:`Independent`.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("t-grid must be non-empty, finite and strictly positive")
    t = np.sort(t)
    s = np.log(t)
    log_num = _h_log(h, s) + T_xi.log_tail(beta * t)
    if coupling == IDENTICAL:
        log_den, div = log_truncated_mean_grid(T_xi, t, cfg)
    elif isinstance(coupling, Independent):
        mean_x = log_moment(coupling.tail_X, 1.0, cfg)
        div = mean_x.divergent
        log_den = T_xi.log_tail(t) + mean_x.value
    else:
        raise DomainError(f"unknown coupling {coupling!r}")
    if div:
        raise DivergenceError("E[X 1{xi > t}] is infinite; the hypothesis is vacuous")
    zero_den = np.isneginf(log_den)
    if np.any(zero_den & ~np.isneginf(log_num)):
        bad = float(t[np.argmax(zero_den & ~np.isneginf(log_num))])
        raise InfeasibleHypothesisError(f"E[X 1{{xi > t}}] = 0 but the left side is positive at t={bad:g}")
    with np.errstate(invalid="ignore"):
        ratio = np.where(zero_den, 0.0, np.exp(log_num - np.where(zero_den, 0.0, log_den)))
    k = int(np.argmax(ratio))
    divergent = bool(t.size >= 2 and ratio[-1] > ratio[-2] * (1 + 1e-6))
    return AdmissibleC(float(ratio[k]), divergent, float(t[k]))


def K_p_norm(T_xi: TailFunction, h, p: float, theta: float,
             cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> Estimate:
    """||kappa_p(xi)||_theta.

    For power h this is ``||xi||_{theta(p-Delta)}**(p-Delta) / (p-Delta)``.
    Otherwise ``E kappa_p(xi)**theta = int theta kappa**(theta-1) kappa'(t) T(t) dt``
    (the tail of kappa_p(xi) is T composed with the inverse of kappa_p).
    """
    if not theta >= 1:
        raise DomainError("theta must be at least 1")
    if isinstance(h, PowerH):
        if not p > h.delta:
            raise NonIntegrableError(f"kappa_p needs p > Delta, got p={p}, Delta={h.delta}")
        if method == "auto":
            gap = p - h.delta
            nrm = norm_from_tail(T_xi, theta * gap, cfg)
            if nrm.divergent:
                return Estimate(np.inf, True)
            return Estimate(nrm.value**gap / gap, False)
    lt = math.log(theta)

    def logf(s):
        s = np.asarray(s, dtype=float)
        out = p * s - _h_log(h, s) + T_xi.log_tail_at_log(s)
        if theta != 1:
            out = out + (theta - 1) * log_kappa_many(h, p, s, cfg)
        return lt + out

    start = _start_level(T_xi)
    if start is None:
        return Estimate(0.0, False)
    est = log_integral(logf, cfg, start=start, breaks=T_xi.breakpoints)
    if est.divergent:
        return Estimate(np.inf, True)
    return Estimate(math.exp(est.value / theta), False)


def fit_v(T_xi: TailFunction, h, p: float, theta: float, r: float,
          cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Tightest v with K_p(theta) <= v ||xi||_p**r / p, i.e. ``p K_p(theta) / ||xi||_p**r``."""
    if not 1 <= r < p:
        raise DomainError(f"r must lie in [1, p), got r={r}, p={p}")
    K = K_p_norm(T_xi, h, p, theta, cfg)
    nrm = moment_from_tail(T_xi, p, cfg)
    if K.divergent or nrm.divergent:
        raise DivergenceError("K_p(theta) or ||xi||_p is infinite")
    return p * K.value / nrm.value**r


def theorem_bound(C: float, beta: float, p: float, r: float, v: float, x_norm_alpha: float) -> float:
    """[C v beta**p ||X||_alpha]**(1/(p-r))."""
    if not p > r:
        raise DomainError(f"bound needs p > r, got p={p}, r={r}")
    if not (C > 0 and beta > 0 and v > 0 and x_norm_alpha > 0):
        raise DomainError("theorem_bound inputs must be positive")
    logb = (math.log(C) + math.log(v) + p * math.log(beta) + math.log(x_norm_alpha)) / (p - r)
    return math.exp(logb) if logb < 709.0 else math.inf


def candidate_grid(T_xi: TailFunction, hyp: DoobHypothesis, p: float, T_X: TailFunction | None = None,
                   theta_grid=None, r_grid=None, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Every feasible candidate, ordered by theta then r.

    Candidates with an infinite K_p(theta) or ||X||_alpha are skipped.
    """
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    T_X = T_xi if T_X is None else T_X
    thetas = default_theta_grid() if theta_grid is None else np.atleast_1d(np.asarray(theta_grid, dtype=float))
    rs = default_r_grid(p) if r_grid is None else np.atleast_1d(np.asarray(r_grid, dtype=float))
    if thetas.size == 0 or rs.size == 0:
        raise EmptySearchSpaceError("search grids must be non-empty")
    xi_norm = moment_from_tail(T_xi, p, cfg)
    if xi_norm.divergent or xi_norm.value == 0:
        raise EmptySearchSpaceError("||xi||_p must be finite and positive")
    out = []
    for theta in np.sort(thetas):
        if not theta > 1:
            continue
        alpha = theta / (theta - 1)
        try:
            K = K_p_norm(T_xi, hyp.h, p, theta, cfg)
        except NonIntegrableError:
            continue
        xa = moment_from_tail(T_X, alpha, cfg)
        if K.divergent or xa.divergent or K.value <= 0 or xa.value <= 0:
            continue
        for r in np.sort(rs):
            if not 1 <= r < p:
                continue
            v = p * K.value / xi_norm.value**r
            b = theorem_bound(hyp.C, hyp.beta, p, r, v, xa.value)
            out.append(BoundCandidate(float(theta), float(alpha), float(r), float(v), b))
    return out


def optimize_bound(T_xi: TailFunction, hyp: DoobHypothesis, p: float, T_X: TailFunction | None = None,
                   theta_grid=None, r_grid=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> BoundCandidate:
    """Grid infimum of the bound over (theta, r); ties go to the smallest theta, then r."""
    cands = candidate_grid(T_xi, hyp, p, T_X, theta_grid, r_grid, cfg)
    if not cands:
        raise EmptySearchSpaceError("no feasible (theta, r) candidate on the grids")
    best = cands[0]
    for c in cands[1:]:
        if c.bound < best.bound:
            best = c
    return best


def _check_delta(p, Delta):
    if not Delta > 0:
        raise DomainError("Delta must be positive")
    if not p > Delta:
        raise DomainError(f"bound needs p > Delta, got p={p}, Delta={Delta}")


def closed_form_bound(C: float, beta: float, Delta: float, p: float, x_norm_p: float) -> float:
    """C p/(p-Delta) beta**p ||X||_p."""
    _check_delta(p, Delta)
    return C * p / (p - Delta) * beta**p * x_norm_p


def derived_form_bound(C: float, beta: float, Delta: float, p: float, x_norm_p_over_delta: float) -> float:
    """Theorem bound at theta = p/(p-Delta), r = p-Delta:
    [C p beta**p / (p-Delta)]**(1/Delta) ||X||_{p/Delta}**(1/Delta)."""
    _check_delta(p, Delta)
    return (C * p * beta**p / (p - Delta) * x_norm_p_over_delta) ** (1.0 / Delta)


def multivariate_bound(C: float, beta: float, Delta: float, p: float, d: int, x_norm_p: float) -> float:
    """C p/(p-Delta) d**(1/p) beta**p ||X||_p for d-dimensional xi."""
    if not p > max(1.0, Delta):
        raise DomainError(f"multivariate bound needs p > max(1, Delta), got p={p}")
    if int(d) != d or d < 1:
        raise DomainError("dimension d must be a positive integer")
    return closed_form_bound(C, beta, Delta, p, x_norm_p) * float(d) ** (1.0 / p)


def vector_p_norm(component_norms, p: float) -> float:
    """[sum_j ||xi_j||_p**p]**(1/p)."""
    x = np.asarray(component_norms, dtype=float)
    if x.size == 0:
        raise DomainError("empty vector")
    if np.any(x < 0):
        raise DomainError("component norms must be non-negative")
    if not p >= 1:
        raise DomainError("p must be at least 1")
    return l_s_norm(x, p)


def l_s_norm(vector, s: float) -> float:
    """(sum_j |t_j|**s)**(1/s)."""
    x = np.abs(np.asarray(vector, dtype=float))
    if x.size == 0:
        raise DomainError("empty vector")
    if not s >= 1:
        raise DomainError("s must be at least 1")
    m = x.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((x / m) ** s) ** (1.0 / s))


def bound_report(T_xi: TailFunction, hyp: DoobHypothesis, p: float, T_X: TailFunction | None = None,
                 theta_grid=None, r_grid=None, d: int | None = None,
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> dict:
    """Closed-form, derived-form and optimised bounds as one JSON-ready record."""
    T_X = T_xi if T_X is None else T_X
    Delta = hyp.delta
    if Delta is not None:
        _check_delta(p, Delta)
    best = optimize_bound(T_xi, hyp, p, T_X, theta_grid, r_grid, cfg)
    closed = derived = multi = None
    if Delta is not None:
        xp = moment_from_tail(T_X, p, cfg)
        if not xp.divergent:
            closed = closed_form_bound(hyp.C, hyp.beta, Delta, p, xp.value)
            if d is not None:
                multi = multivariate_bound(hyp.C, hyp.beta, Delta, p, d, xp.value)
        xq = norm_from_tail(T_X, p / Delta, cfg)
        if not xq.divergent:
            derived = derived_form_bound(hyp.C, hyp.beta, Delta, p, xq.value)
    actual = moment_from_tail(T_xi, p, cfg)
    rec = {
        "schema": "1",
        "p": p,
        "C": hyp.C,
        "beta": hyp.beta,
        "Delta_or_h": Delta if Delta is not None else hyp.h.name,
        "candidate": best.to_dict(),
        "bound": best.bound,
        "closed_form": closed,
        "derived_form": derived,
        "actual_norm_if_known": None if actual.divergent else actual.value,
    }
    if d is not None:
        rec["d"] = int(d)
        rec["multivariate_bound"] = multi
    return rec
