"""Seeded inverse-transform sampling and empirical checks.

Uniforms come from Philox streams keyed by (seed, stream, chunk), so a
draw depends only on its position, never on thread scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .tail_model import TailFunction, quantile

__all__ = [
    "CHUNK_SIZE",
    "SampleSet",
    "uniforms",
    "sample",
    "sample_pair",
    "empirical_moment",
    "empirical_tail",
    "moment_standard_error",
    "HypothesisReport",
    "verify_hypothesis",
    "BoundCheck",
    "verify_bound",
]

CHUNK_SIZE = 1 << 16
_TWO53 = float(1 << 53)


@dataclass(frozen=True, eq=False)
class SampleSet:
    descriptor: dict
    seed: int
    n: int
    values: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (self.descriptor == other.descriptor and self.seed == other.seed and self.n == other.n
                and np.array_equal(self.values, other.values))

    def to_csv(self, path) -> None:
        """One ``value`` column; provenance goes in a leading comment line."""
        head = json.dumps({"descriptor": self.descriptor, "seed": self.seed, "n": self.n}, sort_keys=True)
        with open(path, "w") as fh:
            fh.write(f"# {head}\nvalue\n")
            np.savetxt(fh, self.values, fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        with open(path) as fh:
            first = fh.readline()
            meta = json.loads(first[1:]) if first.startswith("#") else {"descriptor": {}, "seed": 0}
            if first.startswith("#"):
                fh.readline()
            values = np.loadtxt(fh, dtype=float, ndmin=1)
        return cls(meta["descriptor"], int(meta["seed"]), values.size, values)

    def to_binary(self, path) -> None:
        """Raw little-endian float64 values plus a ``.json`` provenance sidecar."""
        path = Path(path)
        self.values.astype("<f8").tofile(path)
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps({"descriptor": self.descriptor, "seed": self.seed, "n": self.n}, sort_keys=True))

    @classmethod
    def from_binary(cls, path) -> "SampleSet":
        path = Path(path)
        values = np.fromfile(path, dtype="<f8").astype(float)
        side = path.with_suffix(path.suffix + ".json")
        meta = json.loads(side.read_text()) if side.exists() else {"descriptor": {}, "seed": 0}
        return cls(meta["descriptor"], int(meta["seed"]), values.size, values)


def _chunk_uniforms(seed, stream, index, size):
    ss = np.random.SeedSequence(seed, spawn_key=(stream, index))
    bits = np.random.Generator(np.random.Philox(ss)).integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (bits.astype(float) + 0.5) / _TWO53


def _chunks(n):
    return [(i, min(CHUNK_SIZE, n - i * CHUNK_SIZE)) for i in range(-(-n // CHUNK_SIZE))]


def uniforms(n: int, seed: int, stream: int = 0, workers: int = 1) -> np.ndarray:
    """n uniforms on (0, 1), never hitting 0 or 1."""
    return _generate(lambda u: u, n, seed, stream, workers)


def _generate(transform, n, seed, stream, workers):
    if int(n) != n or n < 1:
        raise DomainError("sample size must be a positive integer")
    if seed < 0 or seed >= 1 << 64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    out = np.empty(int(n))

    def work(job):
        i, size = job
        out[i * CHUNK_SIZE:i * CHUNK_SIZE + size] = transform(_chunk_uniforms(seed, stream, i, size))

    jobs = _chunks(int(n))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, jobs))
    else:
        for job in jobs:
            work(job)
    return out


def sample(T: TailFunction, n: int, seed: int, stream: int = 0, workers: int = 1) -> SampleSet:
    """n draws quantile(T, U) with U uniform; identical inputs give identical values."""
    values = _generate(lambda u: np.asarray(quantile(T, u), dtype=float), n, seed, stream, workers)
    return SampleSet(T.to_config(), int(seed), int(n), values)


def sample_pair(T_xi: TailFunction, coupling, n: int, seed: int, workers: int = 1):
    """(xi, X) samples: ``"identical"`` reuses xi, otherwise an independent stream for X."""
    xi = sample(T_xi, n, seed, 0, workers)
    if coupling == "identical":
        return xi, xi
    T_X = getattr(coupling, "tail_X", coupling)
    return xi, sample(T_X, n, seed, 1, workers)


def _values(S):
    return S.values if isinstance(S, SampleSet) else np.asarray(S, dtype=float)


def empirical_moment(S, p: float) -> float:
    """(mean of values**p)**(1/p)."""
    if not p >= 1:
        raise DomainError(f"p must be at least 1, got {p}")
    v = _values(S)
    return float(np.mean(v**p) ** (1.0 / p))


def empirical_tail(S, t: float) -> float:
    """Fraction of values strictly above t."""
    return float(np.mean(_values(S) > t))


def moment_standard_error(S, p: float) -> float:
    """Delta-method standard error of the empirical p-norm."""
    v = _values(S)
    vp = v**p
    m = float(np.mean(vp))
    if m == 0 or v.size < 2:
        return 0.0
    se_m = float(np.std(vp, ddof=1)) / math.sqrt(v.size)
    return m ** (1.0 / p - 1.0) * se_m / p


class HypothesisReport(NamedTuple):
    t: list
    lhs: list
    rhs: list
    rhs_se: list
    violations: list
    uninformative: list

    def to_dict(self) -> dict:
        return {"schema": "1", "n_violations": len(self.violations), "violations": self.violations,
                "uninformative": self.uninformative, "t": self.t, "lhs": self.lhs, "rhs": self.rhs,
                "rhs_se": self.rhs_se}


def verify_hypothesis(xi, X, h, beta: float, C: float, t_grid, slack_se: float = 3.0) -> HypothesisReport:
    """Check h(t) P(xi > beta t) <= C E[X 1{xi > t}] on empirical pairs.

    A violation needs lhs > rhs + ``slack_se`` standard errors of rhs.  Points
    where both sides vanish carry no information and are listed separately.
    """
    a, b = _values(xi), _values(X)
    if a.shape != b.shape:
        raise DomainError("paired samples must have equal length")
    t_grid = np.asarray(t_grid, dtype=float)
    if not np.all(np.isfinite(t_grid)):
        raise DomainError("t-grid must be finite")
    n = a.size
    order = np.argsort(a, kind="stable")
    a_sorted, b_sorted = a[order], b[order]
    csum = np.concatenate([[0.0], np.cumsum(b_sorted[::-1])])
    csq = np.concatenate([[0.0], np.cumsum((b_sorted**2)[::-1])])
    ts, lhs, rhs, ses, bad, empty = [], [], [], [], [], []
    for t in t_grid:
        k = n - np.searchsorted(a_sorted, t, side="right")
        k_beta = n - np.searchsorted(a_sorted, beta * t, side="right")
        l = float(h(t)) * k_beta / n
        mean = csum[k] / n
        var = max(csq[k] / n - mean * mean, 0.0)
        se = C * math.sqrt(var * n / (n - 1) / n) if n > 1 else 0.0
        r = C * mean
        ts.append(float(t)), lhs.append(l), rhs.append(r), ses.append(se)
        if l == 0 and r == 0:
            empty.append(float(t))
        elif l > r + slack_se * se:
            bad.append(float(t))
    return HypothesisReport(ts, lhs, rhs, ses, bad, empty)


class BoundCheck(NamedTuple):
    empirical_norm: float
    standard_error: float
    holds: bool


def verify_bound(S, p: float, bound: float) -> BoundCheck:
    """empirical ||.||_p <= bound (1 + 3 SE/norm), SE from the delta method."""
    if not bound > 0:
        raise DomainError("bound must be positive")
    nrm = empirical_moment(S, p)
    se = moment_standard_error(S, p)
    rel = se / nrm if nrm > 0 else 0.0
    return BoundCheck(nrm, se, bool(nrm <= bound * (1 + 3 * rel)))
