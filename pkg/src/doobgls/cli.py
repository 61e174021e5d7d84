"""``doobgls`` command line: one subcommand per pipeline.

Exit codes: 0 success, 2 domain or config error, 3 divergence or an
indeterminate result, 4 a violation found by ``verify``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, parse_psi, parse_tail
from .doob_bounds import DoobHypothesis, Independent, IDENTICAL, bound_report
from .errors import DivergenceError, DomainError, EmptySearchSpaceError, InfeasibleHypothesisError
from .gls import NaturalOf, Status, gls_norm, tail_from_gls
from .montecarlo import sample_pair, verify_bound, verify_hypothesis
from .quadrature import PowerH, moment_from_tail
from .reporting import dumps, rows_to_csv
from .sharpness import sharpness_experiment

EXIT_OK, EXIT_DOMAIN, EXIT_DIVERGENT, EXIT_VIOLATION = 0, 2, 3, 4


class _Divergent(Exception):
    def __init__(self, text):
        super().__init__("divergent")
        self.text = text


def _descriptor(text):
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise argparse.ArgumentTypeError(f"invalid JSON descriptor: {exc}") from exc
    return text


def _common(sp):
    sp.add_argument("--config", help="JSON run config; explicit flags override it")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tolerance", type=float, help="relative quadrature tolerance")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doobgls", description="Doob-type moment bounds and GLS norms.")
    ap.add_argument("--version", action="version", version=f"doobgls {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("moment", help="||tau||_p from a tail model")
    _common(sp)
    sp.add_argument("--tail", type=_descriptor)
    sp.add_argument("--p", type=float, nargs="+")

    sp = sub.add_parser("doob-bound", help="closed-form, derived-form and optimised Doob bounds")
    _common(sp)
    sp.add_argument("--tail", type=_descriptor)
    sp.add_argument("--tail-x", dest="tail_X", type=_descriptor)
    sp.add_argument("--coupling", choices=("identical", "independent"))
    sp.add_argument("--Delta", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--C", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--d", type=int, help="dimension for the multivariate bound")

    sp = sub.add_parser("gls", help="GLS norm, tail bound or natural function")
    _common(sp)
    sp.add_argument("--tail", type=_descriptor)
    sp.add_argument("--psi", type=_descriptor)
    sp.add_argument("--action", choices=("norm", "tail-bound", "natural"))
    sp.add_argument("--k", type=float, help="norm value for tail-bound")
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--p", type=float, nargs="+")

    sp = sub.add_parser("sharpness", help="Y ratio on the exponential pair")
    _common(sp)
    sp.add_argument("--Delta", type=float)
    sp.add_argument("--p-max", dest="p_max", type=float)
    sp.add_argument("--method", choices=("analytic", "quadrature"))

    sp = sub.add_parser("verify", help="Monte Carlo check of the hypothesis and a bound")
    _common(sp)
    sp.add_argument("--tail", type=_descriptor)
    sp.add_argument("--tail-x", dest="tail_X", type=_descriptor)
    sp.add_argument("--coupling", choices=("identical", "independent"))
    sp.add_argument("--Delta", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--C", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--bound", type=float)
    return ap


_FLAG_KEYS = ("tail", "tail_X", "coupling", "psi", "action", "Delta", "beta", "C", "p", "d", "k", "t",
              "p_max", "method", "n", "workers", "bound", "seed", "out", "format")


def resolve_config(args) -> tuple[RunConfig, set]:
    """Config file first, then flags; also returns the keys set explicitly."""
    base = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    explicit = set()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            explicit |= set(json.load(fh))
    overrides = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    explicit |= set(overrides)
    if getattr(args, "tolerance", None) is not None:
        quad = dict(base.quadrature or {})
        quad["rtol"] = args.tolerance
        overrides["quadrature"] = quad
    return base.merged(overrides), explicit


def _floats(x):
    return [] if x is None else [float(v) for v in np.atleast_1d(x)]


def cmd_moment(cfg: RunConfig, explicit):
    T = parse_tail(cfg.tail)
    ps = _floats(cfg.grid("p")) or [1.0, 2.0]
    rows, divergent = [], False
    for p in ps:
        est = moment_from_tail(T, p, cfg.quad)
        divergent |= est.divergent
        rows.append({"p": p, "norm": est.value, "divergent": est.divergent})
    if cfg.format == "csv":
        text = rows_to_csv(["p", "norm", "divergent"], [(r["p"], r["norm"], r["divergent"]) for r in rows])
    else:
        text = dumps({"schema": "1", "command": "moment", "tail": T.to_config(), "rows": rows})
    if divergent:
        raise _Divergent(text)
    return text


def _coupling(cfg):
    if cfg.coupling == "identical":
        return IDENTICAL, None
    T_X = parse_tail(cfg.tail_X)
    return Independent(T_X), T_X


def cmd_doob_bound(cfg: RunConfig, explicit):
    T = parse_tail(cfg.tail)
    _, T_X = _coupling(cfg)
    if cfg.p is None:
        raise ConfigError("doob-bound needs p")
    p = float(np.atleast_1d(cfg.p)[0])
    hyp = DoobHypothesis(PowerH(cfg.Delta), cfg.beta, cfg.C)
    rec = bound_report(T, hyp, p, T_X, cfg.grid("theta_grid"), cfg.grid("r_grid"), cfg.d, cfg.quad)
    if cfg.format == "csv":
        keys = [k for k, v in rec.items() if not isinstance(v, dict)]
        return rows_to_csv(keys, [[rec[k] if rec[k] is not None else "" for k in keys]])
    return dumps(rec)


def cmd_gls(cfg: RunConfig, explicit):
    T = parse_tail(cfg.tail)
    quad = cfg.quad
    if cfg.action == "natural":
        ps = _floats(cfg.grid("p")) or [1.0, 2.0, 4.0, 8.0]
        rows, divergent = [], False
        for p in ps:
            est = moment_from_tail(T, p, quad)
            divergent |= est.divergent
            rows.append({"p": p, "psi": est.value})
        text = (rows_to_csv(["p", "psi"], [(r["p"], r["psi"]) for r in rows]) if cfg.format == "csv"
                else dumps({"schema": "1", "command": "gls", "action": "natural", "rows": rows}))
        if divergent:
            raise _Divergent(text)
        return text
    psi = NaturalOf(T, quad) if cfg.psi is None else parse_psi(cfg.psi, T, quad)
    if cfg.action == "tail-bound":
        ts = _floats(cfg.grid("t")) or [math.e]
        rows = [{"t": t, "bound": tail_from_gls(psi, cfg.k, t, cfg.grid("p_grid"))} for t in ts]
        if cfg.format == "csv":
            return rows_to_csv(["t", "bound"], [(r["t"], r["bound"]) for r in rows])
        return dumps({"schema": "1", "command": "gls", "action": "tail-bound", "psi": psi.to_config(),
                      "k": cfg.k, "rows": rows})
    if cfg.action != "norm":
        raise ConfigError(f"unknown gls action {cfg.action!r}")
    res = gls_norm(T, psi, cfg.grid("p_grid"), quad)
    rec = {"schema": "1", "command": "gls", "action": "norm", "norm": res.norm, "argmax_p": res.argmax_p,
           "status": res.status}
    text = (rows_to_csv(["norm", "argmax_p", "status"], [(res.norm, res.argmax_p, res.status.value)])
            if cfg.format == "csv" else dumps(rec))
    if res.status is not Status.FINITE:
        raise _Divergent(text)
    return text


def cmd_sharpness(cfg: RunConfig, explicit):
    rep = sharpness_experiment(cfg.Delta, cfg.p_max, cfg.grid("p_grid"), cfg.C, cfg.beta, cfg.method, cfg=cfg.quad)
    fmt = cfg.format if "format" in explicit else "csv"
    return rep.to_csv() if fmt == "csv" else rep.to_json()


def cmd_verify(cfg: RunConfig, explicit):
    T = parse_tail(cfg.tail)
    coupling, _ = _coupling(cfg)
    xi, X = sample_pair(T, coupling, cfg.n, cfg.seed, cfg.workers)
    t_grid = cfg.grid("t_grid")
    if t_grid is None:
        t_grid = np.linspace(0.05, 20.0, 400)
    rep = verify_hypothesis(xi, X, PowerH(cfg.Delta), cfg.beta, cfg.C, t_grid)
    rec = {"schema": "1", "command": "verify", "seed": cfg.seed, "n": cfg.n, "Delta": cfg.Delta,
           "beta": cfg.beta, "C": cfg.C, "hypothesis": rep.to_dict()}
    failed = bool(rep.violations)
    if cfg.bound is not None:
        p = float(np.atleast_1d(cfg.p)[0]) if cfg.p is not None else 2.0
        chk = verify_bound(xi, p, cfg.bound)
        rec["bound_check"] = {"p": p, "bound": cfg.bound, "empirical_norm": chk.empirical_norm,
                              "standard_error": chk.standard_error, "holds": chk.holds}
        failed |= not chk.holds
    if cfg.format == "csv":
        text = rows_to_csv(["t", "lhs", "rhs", "rhs_se"], zip(rep.t, rep.lhs, rep.rhs, rep.rhs_se))
    else:
        text = dumps(rec)
    return text, (EXIT_VIOLATION if failed else EXIT_OK)


_COMMANDS = {"moment": cmd_moment, "doob-bound": cmd_doob_bound, "gls": cmd_gls, "sharpness": cmd_sharpness,
             "verify": cmd_verify}


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = resolve_config(args)
        result = _COMMANDS[args.command](cfg, explicit)
        text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
        _emit(text, cfg.out)
        return code
    except _Divergent as exc:
        _emit(exc.text, getattr(args, "out", None))
        print("doobgls: divergent or indeterminate result", file=sys.stderr)
        return EXIT_DIVERGENT
    except DivergenceError as exc:
        print(f"doobgls: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except (DomainError, InfeasibleHypothesisError, EmptySearchSpaceError, ConfigError, OSError) as exc:
        print(f"doobgls: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (KeyError, TypeError, ValueError) as exc:
        print(f"doobgls: bad configuration: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
