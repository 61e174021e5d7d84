"""How close the Doob constant p/(p - Delta) is to optimal.

For a pair (xi, X) the ratio

    Y(p) = ||xi||_p / (C p/(p - Delta) beta**p ||X||_p)

measures how much of the bound is used.  On the exponential witness
xi = X ~ Exp(1), with C = beta = 1, Y(p) = (p - Delta)/p, which tends to 1:
the constant cannot be lowered.  The supremum over all pairs is not
searchable, so only the witness is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .doob_bounds import AdmissibleC, IDENTICAL, min_admissible_C
from .errors import DivergenceError, DomainError, EmptySearchSpaceError, InfeasibleHypothesisError
from .quadrature import DEFAULT_CONFIG, PowerH, QuadratureConfig, log_moment
from .reporting import dumps, rows_to_csv
from .tail_model import Exponential

__all__ = ["y_functional", "exponential_log_norm", "default_sharpness_grid", "u_estimate",
           "SharpnessReport", "sharpness_experiment"]


def _log_y(log_xi, log_x, C, beta, Delta, p):
    return log_xi - (math.log(C) + math.log(p) - math.log(p - Delta) + p * math.log(beta) + log_x)


def y_functional(xi_norm_p: float, X_norm_p: float, C: float, beta: float, Delta: float, p: float) -> float:
    """||xi||_p / (C p (p - Delta)**-1 beta**p ||X||_p), evaluated in logs."""
    if not p > Delta:
        raise DomainError(f"Y needs p > Delta, got p={p}, Delta={Delta}")
    if not (xi_norm_p > 0 and X_norm_p > 0 and C > 0 and beta > 0 and Delta > 0):
        raise DomainError("norms and constants must be positive")
    return math.exp(_log_y(math.log(xi_norm_p), math.log(X_norm_p), C, beta, Delta, p))


def exponential_log_norm(p: float, method: str = "analytic", cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """ln ||Exp(1)||_p = ln Gamma(p+1) / p, analytically or by quadrature."""
    if method == "analytic":
        return math.lgamma(p + 1.0) / p
    if method == "quadrature":
        return log_moment(Exponential(), float(p), cfg).value / p
    raise DomainError(f"unknown norm method {method!r}")


def default_sharpness_grid(Delta: float, p_max: float, n: int = 200):
    """n log-spaced points from just above max(1, Delta) to p_max."""
    lo = max(1.0, Delta) + 1e-3
    if not p_max > lo:
        raise EmptySearchSpaceError(f"p_max must exceed {lo}")
    return np.geomspace(lo, p_max, n)


def _y_values(Delta, grid, C, beta, method, cfg):
    out = np.empty(grid.size)
    for i, p in enumerate(grid):
        ln = exponential_log_norm(float(p), method, cfg)
        out[i] = math.exp(_log_y(ln, ln, C, beta, Delta, float(p)))
    return out


def _grid(Delta, p_grid):
    grid = np.sort(np.atleast_1d(np.asarray(p_grid, dtype=float)))
    if grid.size == 0:
        raise EmptySearchSpaceError("empty p-grid")
    if np.any(grid <= Delta) or np.any(grid < 1):
        raise DomainError("p-grid must lie in (Delta, inf) and [1, inf)")
    return grid


def u_estimate(Delta: float, p_grid, method: str = "analytic", C: float = 1.0, beta: float = 1.0,
               cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Grid supremum of Y on the exponential pair and the p attaining it."""
    grid = _grid(Delta, p_grid)
    y = _y_values(Delta, grid, C, beta, method, cfg)
    k = int(np.argmax(y))
    return float(y[k]), float(grid[k])


@dataclass
class SharpnessReport:
    delta: float
    C: float
    beta: float
    p_grid: np.ndarray
    y: np.ndarray
    sup_y: float
    attained_p: float
    limit: float | None
    admissibility: AdmissibleC | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        adm = None
        if self.admissibility is not None:
            adm = {"C_min": self.admissibility.C_min, "divergent": self.admissibility.divergent,
                   "argmax_t": self.admissibility.argmax_t}
        return {
            "schema": "1",
            "Delta": self.delta,
            "C": self.C,
            "beta": self.beta,
            "sup_Y": self.sup_y,
            "attained_p": self.attained_p,
            "limit": self.limit,
            "admissibility": adm,
            "notes": list(self.notes),
            "p": self.p_grid.tolist(),
            "Y": self.y.tolist(),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        return rows_to_csv(["p", "Y"], zip(self.p_grid.tolist(), self.y.tolist()))


def sharpness_experiment(Delta: float, p_max: float = 100.0, p_grid=None, C: float = 1.0, beta: float = 1.0,
                         method: str = "analytic", check_admissibility: bool = True,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> SharpnessReport:
    """Y over a p-grid for the exponential pair, with the hypothesis check.

    ``limit`` is the analytic value 1 only for C = beta = 1; other settings
    are reported without a limit.
    """
    grid = default_sharpness_grid(Delta, p_max) if p_grid is None else _grid(Delta, p_grid)
    y = _y_values(Delta, grid, C, beta, method, cfg)
    k = int(np.argmax(y))
    limit = 1.0 if (C == 1 and beta == 1) else None
    adm, notes = None, []
    if check_admissibility:
        try:
            adm = min_admissible_C(Exponential(), IDENTICAL, PowerH(Delta), beta, cfg=cfg)
            if adm.divergent:
                notes.append("no finite C makes the hypothesis hold for this pair")
            elif adm.C_min > C * (1 + 1e-9):
                notes.append(f"nominal C={C} is below the grid-admissible C={adm.C_min:.9g}")
        except (InfeasibleHypothesisError, DivergenceError) as exc:
            notes.append(f"admissibility check failed: {exc}")
    return SharpnessReport(Delta, C, beta, grid, y, float(y[k]), float(grid[k]), limit, adm, notes)
