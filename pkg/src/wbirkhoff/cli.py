"""Experiment runner: config parsing, sweeps, checks, scans.

Config files are plain-text key/value documents, one ``key = value`` pair
per line, ``#`` comments allowed::

    observable = analytic:mu=1
    rotation   = golden
    weight     = exp
    theta0     = 0
    mode       = discrete
    grid       = 128:2:8          # start:factor:count, geometric
    precision  = 80
    output     = sweep.csv

A hypothesis-check block replaces the sweep keys::

    check       = H1              # H1 | H2 | H3 | H4
    delta       = pow:tau=1.2
    delta_tilde = pow:tau=4
    m           = 2
    d           = 1

Subcommands: ``sweep``, ``check``, ``scan``, ``weight-norms``,
``oracle-check``.  Exit codes: 0 success, 2 parse/config error, 3 numeric
failure.  Sweep output is CSV (schema ``wba-sweep v1``), check output is a
JSON verdict object; both are byte-reproducible for a fixed config except
for the informational wall_ms column.
"""

from __future__ import annotations

import argparse
import json
import sys

from mpmath import mp, mpf

from . import analysis, engine, observables, rotations, weights
from .errors import (BudgetDegenerate, DegenerateWindow, DimensionError,
                     DomainError, InsufficientData, ParseError,
                     PrecisionExhausted, QuadratureBudgetExceeded,
                     SupportMismatch, TailBoundUnavailable, WbirkhoffError)
from .prec import default_precision, working

SWEEP_SCHEMA = "wba-sweep v1"
VERDICT_SCHEMA = "wba-verdict v1"

_PARSE_ERRORS = (ParseError, DomainError, DimensionError, SupportMismatch,
                 KeyError, ValueError)
_NUMERIC_ERRORS = (PrecisionExhausted, QuadratureBudgetExceeded,
                   DegenerateWindow, BudgetDegenerate, InsufficientData,
                   TailBoundUnavailable)


def parse_config(text: str) -> dict:
    """Parse the plain-text key/value config document."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"config line {lineno}: expected key = value, "
                             f"got {raw!r}")
        key, val = line.split("=", 1)
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ParseError(f"config line {lineno}: empty key or value")
        if key in out:
            raise ParseError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _parse_grid(spec: str) -> list[int]:
    try:
        start, factor, count = spec.split(":")
        start, count = int(start), int(count)
        factor = float(factor)
    except ValueError as exc:
        raise ParseError(f"grid must be start:factor:count, got {spec!r}") from exc
    if start < 1 or count < 1 or factor <= 1:
        raise ParseError("grid needs start >= 1, factor > 1, count >= 1")
    grid = []
    x = float(start)
    for _ in range(count):
        n = int(round(x))
        if grid and n <= grid[-1]:
            raise ParseError("grid is not strictly increasing")
        grid.append(n)
        x *= factor
    return grid


def _build_run(cfg: dict, scale: int):
    precision = int(cfg.get("precision", default_precision()))
    rho = rotations.make_rotation(cfg["rotation"], precision)
    if rho.regime == "finite":
        obs = observables.make_observable(cfg["observable"], dim=rho.dim,
                                          precision=precision)
    else:
        obs = observables.make_observable(cfg["observable"], trunc=rho.dim,
                                          eta=rho.eta, precision=precision)
    w = weights.make_weight(cfg.get("weight", "exp"), precision)
    theta_raw = cfg.get("theta0", "0")
    with working(precision):
        parts = [mpf(v) for v in theta_raw.split(",")]
        if len(parts) == 1:
            theta0 = tuple(parts * rho.dim)
        elif len(parts) == rho.dim:
            theta0 = tuple(parts)
        else:
            raise ParseError(
                f"theta0 has {len(parts)} coordinates, rotation has {rho.dim}")
    mode_name = cfg.get("mode", "discrete")
    eval_tol = mpf(cfg["eval_tol"]) if "eval_tol" in cfg else None
    if mode_name == "discrete":
        mode = engine.Discrete(scale)
    elif mode_name == "continuous":
        quad_tol = mpf(cfg["quad_tol"]) if "quad_tol" in cfg else None
        mode = engine.Continuous(scale, quad_tol)
    else:
        raise ParseError(f"mode must be discrete or continuous, got {mode_name!r}")
    return engine.AveragingRun(obs, rho, w, theta0, mode, precision, eval_tol)


def _format_row(result: engine.RunResult, precision: int) -> str:
    with working(precision + 10):
        return ",".join([
            str(result.scale),
            mp.nstr(mp.re(result.value), 25),
            mp.nstr(mp.im(result.value), 25),
            mp.nstr(result.abs_error, 15),
            mp.nstr(result.precision_floor, 3),
            str(int(result.wall_s * 1000)),
        ])


def _fit_footers(points, floors) -> list[str]:
    lines = []
    for model in ("poly", "stretched"):
        try:
            fit = analysis.fit_rate(points, model, floors=floors)
            excluded = ",".join(str(s) for s in fit.excluded) or "none"
            lines.append(f"# fit {fit.summary()} excluded={excluded}")
        except InsufficientData as exc:
            lines.append(f"# fit model={model} status=insufficient-data ({exc})")
    return lines


def run_sweep(cfg: dict, out) -> None:
    """Execute the grid, streaming one CSV row per point plus fit footers."""
    for key in ("observable", "rotation", "grid"):
        if key not in cfg:
            raise ParseError(f"sweep config is missing the {key!r} key")
    grid = _parse_grid(cfg["grid"])
    precision = int(cfg.get("precision", default_precision()))
    mode_name = cfg.get("mode", "discrete")
    out.write(f"# {SWEEP_SCHEMA}\n")
    echo = " ".join(f"{k}={cfg[k]}" for k in sorted(cfg) if k != "output")
    out.write(f"# config {echo}\n")
    out.write("# saturated when abs_error <= 100 * precision_floor\n")
    out.write("# wall_ms is informational, excluded from the determinism contract\n")
    out.write("N_or_T,value_re,value_im,abs_error,precision_floor,wall_ms\n")
    points, floors = [], []
    for scale in grid:
        run = _build_run(cfg, scale)
        try:
            if mode_name == "discrete":
                result = engine.birkhoff_weighted_discrete(run)
            else:
                result = engine.birkhoff_weighted_continuous(run)
        except WbirkhoffError as exc:
            out.write(f"# error at N_or_T={scale}: "
                      f"{type(exc).__name__}: {exc}\n")
            out.flush()
            raise
        out.write(_format_row(result, precision) + "\n")
        out.flush()
        points.append((scale, result.abs_error))
        floors.append(result.precision_floor)
    for line in _fit_footers(points, floors):
        out.write(line + "\n")


def run_check(cfg: dict, out) -> None:
    """Execute the hypothesis check named in the config's check block."""
    name = cfg.get("check")
    if name not in ("H1", "H2", "H3", "H4"):
        raise ParseError("check must be one of H1, H2, H3, H4")
    dps = int(cfg.get("precision", 40))
    if name == "H1":
        report = analysis.check_H1(
            rotations.make_approx(cfg["delta"]),
            rotations.make_approx(cfg["delta_tilde"]),
            int(cfg["m"]), int(cfg["d"]), dps=dps)
    elif name == "H3":
        report = analysis.check_H3(
            rotations.make_approx(cfg["delta"]),
            rotations.make_approx(cfg["delta_tilde"]),
            analysis.make_adaptive(cfg["phi"]),
            cfg["alpha"], int(cfg["d"]), dps=dps,
            shape_exponent=cfg.get("shape_exponent"))
    elif name == "H2":
        report = analysis.check_H2_H4(
            rotations.make_approx(cfg["delta"]),
            rotations.make_approx(cfg["delta_tilde"]),
            eta=int(cfg["eta"]), mode="H2", m=int(cfg["m"]),
            nu_max=int(cfg.get("nu_max", 40)), dps=dps)
    else:
        report = analysis.check_H2_H4(
            rotations.make_approx(cfg["delta"]),
            rotations.make_approx(cfg["delta_tilde"]),
            eta=int(cfg["eta"]), mode="H4",
            phi=analysis.make_adaptive(cfg["phi"]), gamma=cfg["gamma"],
            nu_max=int(cfg.get("nu_max", 40)), dps=dps)
    payload = {
        "schema": VERDICT_SCHEMA,
        "check": report.check,
        "verdict": report.verdict,
        "estimate": None if report.estimate is None else mp.nstr(report.estimate, 12),
        "detail": report.detail,
        "config": {k: v for k, v in sorted(cfg.items())},
    }
    json.dump(payload, out, indent=2, default=str)
    out.write("\n")


def run_scan(args) -> None:
    rho = rotations.make_rotation(args.rotation, args.precision)
    approx = rotations.make_approx(args.approx)
    res = rotations.nonresonance_scan(rho, approx, args.K, args.mode)
    payload = {
        "rotation": args.rotation,
        "approx": args.approx,
        "K": res.radius,
        "mode": res.mode,
        "alpha_est": mp.nstr(res.alpha, 20),
        "argmin": list(res.argmin.entries) if res.argmin else None,
    }
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def run_weight_norms(args) -> None:
    sys.stdout.write("n,l1_norm,log_l1_over_nlogn\n")
    with working(args.precision):
        for n in range(2, args.n_max + 1):
            l1 = weights.l1_derivative_norm(n, args.precision)
            expo = mp.log(l1) / (n * mp.log(n))
            sys.stdout.write(f"{n},{mp.nstr(l1, 20)},{mp.nstr(expo, 10)}\n")


def run_oracle_check(cfg: dict, out) -> int:
    """Compare time-domain and Fourier-domain errors on the config grid."""
    for key in ("observable", "rotation", "grid"):
        if key not in cfg:
            raise ParseError(f"oracle-check config is missing {key!r}")
    grid = _parse_grid(cfg["grid"])
    precision = int(cfg.get("precision", default_precision()))
    tol = mpf(cfg.get("agree_tol", "1e-%d" % max(10, precision - 20)))
    worst = mpf(0)
    with working(precision + 10):
        for scale in grid:
            run = _build_run(cfg, scale)
            res = engine.birkhoff_weighted_discrete(run)
            oracle = engine.fourier_error_oracle(run)
            diff = abs((res.value - run.observable.mean) - oracle)
            worst = max(worst, diff)
            out.write(f"N={scale} abs_error={mp.nstr(res.abs_error, 10)} "
                      f"oracle_gap={mp.nstr(diff, 4)}\n")
        out.write(f"worst_gap={mp.nstr(worst, 6)} tolerance={mp.nstr(tol, 4)} "
                  f"{'OK' if worst <= tol else 'FAIL'}\n")
    return 0 if worst <= tol else 3


def _read_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc}") from exc


def _open_output(cfg: dict):
    path = cfg.get("output")
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wbirkhoff",
        description="weighted Birkhoff averaging laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run an averaging sweep over a grid")
    p_sweep.add_argument("config")

    p_check = sub.add_parser("check", help="run a hypothesis check")
    p_check.add_argument("config")

    p_scan = sub.add_parser("scan", help="empirical nonresonance scan")
    p_scan.add_argument("rotation")
    p_scan.add_argument("approx")
    p_scan.add_argument("--K", type=int, required=True)
    p_scan.add_argument("--mode", choices=("discrete", "continuous"),
                        default="discrete")
    p_scan.add_argument("--precision", type=int, default=default_precision())

    p_norms = sub.add_parser("weight-norms",
                             help="L1 norms of window derivatives")
    p_norms.add_argument("--n-max", type=int, required=True)
    p_norms.add_argument("--precision", type=int, default=40)

    p_oracle = sub.add_parser("oracle-check",
                              help="time-domain vs Fourier-domain agreement")
    p_oracle.add_argument("config")

    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            cfg = _read_config(args.config)
            out, close = _open_output(cfg)
            try:
                run_sweep(cfg, out)
            finally:
                if close:
                    out.close()
        elif args.command == "check":
            cfg = _read_config(args.config)
            out, close = _open_output(cfg)
            try:
                run_check(cfg, out)
            finally:
                if close:
                    out.close()
        elif args.command == "scan":
            run_scan(args)
        elif args.command == "weight-norms":
            run_weight_norms(args)
        elif args.command == "oracle-check":
            cfg = _read_config(args.config)
            return run_oracle_check(cfg, sys.stdout)
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numeric failure: {type(exc).__name__}: {exc}\n")
        return 3
    except _PARSE_ERRORS as exc:
        sys.stderr.write(f"config error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
