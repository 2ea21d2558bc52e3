"""Command-line interface: ``shrinklab <command> [options]``.

Option values are resolved as command-line flag, then ``--config`` file,
then built-in default.  The config file is flat ``key = value`` text; keys
are the long flag names with or without the leading dashes.

Exit codes: 0 ok, 1 quadrature or internal failure, 2 invalid input,
3 verification failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import InvalidHyperparameterError, PriorHyper, ProblemDims
from .estimators import (
    GeneralizedBayesShrinkage,
    JamesStein,
    JamesSteinVariant,
    ScaledIdentity,
    ShrinkSpec,
    phi_over_w,
    phi_star,
)
from .quadrature import QuadConfig, QuadratureError
from .report import (
    COMPARE_COLUMNS,
    PHI_COLUMNS,
    REGION_COLUMNS,
    RISK_COLUMNS,
    region_rows,
    region_svg,
    rows_to_csv,
    rows_to_json,
)
from .risk import MARGIN, dominance_check, risk_curve
from .sequences import BLYTH_COLUMNS, blyth_scan
from .verify import CHECKS, run_checks

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """Comma-separated numbers; an item ``lo:hi:step`` expands inclusively."""
    out: list[float] = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            parts = item.split(":")
            if len(parts) != 3:
                raise UsageError(f"range must be lo:hi:step, got {item!r}")
            lo, hi, step = (float(v) for v in parts)
            if not step > 0 or hi < lo:
                raise UsageError(f"bad range {item!r}")
            k = int(np.floor((hi - lo) / step + 1e-9))
            out.extend(float(np.round(lo + i * step, 12)) for i in range(k + 1))
        else:
            out.append(float(item))
    if not out:
        raise UsageError("empty grid")
    return out


def _vector(text: str) -> np.ndarray:
    return np.array(parse_grid(text))


@dataclass(frozen=True)
class Opt:
    kind: Callable
    default: object
    help: str
    choices: tuple | None = None


OPTIONS = {
    "p": Opt(int, 5, "dimension of the mean"),
    "n": Opt(int, 4, "degrees of freedom of the scale statistic"),
    "a": Opt(float, -2.0, "prior hyperparameter a"),
    "b": Opt(float, 0.0, "prior hyperparameter b"),
    "x": Opt(_vector, None, "observation vector, comma separated"),
    "x_file": Opt(str, None, "file holding the observation vector"),
    "s": Opt(float, None, "scale statistic s > 0"),
    "w_grid": Opt(parse_grid, "0,0.1,1,10,100,10000", "grid of w values"),
    "lambda_grid": Opt(parse_grid, "0,1,4,16,100,10000", "grid of lambda values"),
    "a_range": Opt(parse_grid, "-3.5:2:0.25", "a values (lo:hi:step or list)"),
    "b_range": Opt(parse_grid, "-0.5:3:0.25", "b values (lo:hi:step or list)"),
    "j_grid": Opt(parse_grid, "2,10,100,1000,10000,1000000", "grid of j values"),
    "reps": Opt(int, 100_000, "Monte Carlo replicates per grid point"),
    "seed": Opt(int, 0, "random seed"),
    "order": Opt(int, 64, "base Gauss-Jacobi order"),
    "rel_tol": Opt(float, 1e-10, "relative quadrature tolerance"),
    "estimator": Opt(str, "gb", "estimator", ("gb", "js", "js-variant", "identity")),
    "against": Opt(str, "js", "comparison estimator", ("gb", "js", "js-variant", "identity")),
    "checks": Opt(str, ",".join(CHECKS), "comma separated subset of checks"),
    "out": Opt(str, "-", "output path, '-' for stdout"),
    "format": Opt(str, "csv", "output format", ("csv", "json", "svg")),
}

COMMANDS = {
    "estimate": ("shrinkage estimate for one observation (JSON)",
                 ("x", "x_file", "s", "p", "n", "a", "b", "order", "rel_tol", "out")),
    "phi": ("shrinkage ratio over a w grid",
            ("w_grid", "p", "n", "a", "b", "order", "rel_tol", "out", "format")),
    "region-map": ("admissibility and minimaxity labels over an (a, b) grid",
                   ("p", "n", "a_range", "b_range", "out", "format")),
    "risk-scan": ("Monte Carlo risk and minimax verdict over a lambda grid",
                  ("estimator", "p", "n", "a", "b", "lambda_grid", "reps", "seed",
                   "order", "rel_tol", "out", "format")),
    "compare": ("paired risk difference of two estimators",
                ("estimator", "against", "p", "n", "a", "b", "lambda_grid", "reps",
                 "seed", "order", "rel_tol", "out", "format")),
    "blyth": ("integrals and products of the proper prior sequences",
              ("a", "b", "j_grid", "order", "rel_tol", "out", "format")),
    "verify": ("run the numerical self-checks",
               ("checks", "reps", "seed", "order", "rel_tol", "out")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shrinklab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, opts) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key=value configuration file")
        for key in opts:
            o = OPTIONS[key]
            choices = o.choices
            if key == "format":
                choices = ("csv", "json", "svg") if name == "region-map" else ("csv", "json")
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            choices=choices, help=f"{o.help} (default: {o.default})")
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def resolve(ns: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults, converting every value."""
    opts = COMMANDS[ns.command][1]
    config = read_config(ns.config) if ns.config else {}
    unknown = sorted(set(config) - set(opts))
    if unknown:
        raise UsageError(f"config keys not used by {ns.command}: {', '.join(unknown)}")
    out = {"_given": {k for k in opts if getattr(ns, k) is not None or k in config}}
    for key in opts:
        o = OPTIONS[key]
        raw = getattr(ns, key)
        if raw is None:
            raw = config.get(key, o.default)
        if raw is None:
            out[key] = None
            continue
        try:
            out[key] = o.kind(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for --{key.replace('_', '-')}: {raw!r} ({exc})")
        if o.choices and out[key] not in o.choices:
            raise UsageError(f"--{key.replace('_', '-')} must be one of {o.choices}")
    return out


def _cfg(opts) -> QuadConfig:
    return QuadConfig(base_order=opts["order"], rel_tol=opts["rel_tol"])


def _dims_hyper(opts) -> tuple[ProblemDims, PriorHyper]:
    dims = ProblemDims(opts["p"], opts["n"])
    hyper = PriorHyper(opts["a"], opts["b"])
    return dims, hyper


def _make_estimator(kind, opts):
    n = opts["n"]
    if kind == "gb":
        hyper = PriorHyper(opts["a"], opts["b"]).check(ProblemDims(opts["p"], n))
        return GeneralizedBayesShrinkage(n=n, a=hyper.a, b=hyper.b,
                                         base_order=opts["order"], rel_tol=opts["rel_tol"])
    if kind == "js":
        return JamesStein(n=n)
    if kind == "js-variant":
        return JamesSteinVariant(n=n)
    return ScaledIdentity(n=n, factor=1.0)


def _hyper_cells(kind, opts):
    return (opts["a"], opts["b"]) if kind == "gb" else ("", "")


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _table(rows, columns, opts) -> str:
    if opts["format"] == "json":
        return rows_to_json([{c: r[c] for c in columns} for r in rows])
    return rows_to_csv(rows, columns)


def cmd_estimate(opts) -> int:
    if (opts["x"] is None) == (opts["x_file"] is None):
        raise UsageError("give exactly one of --x and --x-file")
    if opts["s"] is None:
        raise UsageError("--s is required")
    if opts["x"] is not None:
        x = opts["x"]
    else:
        with open(opts["x_file"], encoding="utf-8") as fh:
            x = _vector(fh.read().replace("\n", ",").replace(" ", ","))
    p = x.size
    if "p" in opts["_given"] and opts["p"] != p:
        raise UsageError(f"--p={opts['p']} but x has {p} entries")
    dims = ProblemDims(p, opts["n"])
    hyper = PriorHyper(opts["a"], opts["b"]).check(dims)
    spec = ShrinkSpec(dims, hyper, _cfg(opts))
    s = opts["s"]
    if not s > 0:
        raise UsageError("s must be positive")
    w = float(x @ x) / s
    psi = phi_over_w(w, spec)
    mult = 1.0 - psi
    _emit(rows_to_json({"w": w, "phi_over_w": psi, "multiplier": mult,
                        "delta": list(mult * x)}), opts["out"])
    return EXIT_OK


def cmd_phi(opts) -> int:
    dims, hyper = _dims_hyper(opts)
    spec = ShrinkSpec(dims, hyper.check(dims), _cfg(opts))
    rows = []
    for w in opts["w_grid"]:
        if w < 0:
            raise UsageError("w must be non-negative")
        rows.append({"w": w, "phi_over_w": phi_over_w(w, spec), "phi_star": phi_star(w, spec)})
    _emit(_table(rows, PHI_COLUMNS, opts), opts["out"])
    return EXIT_OK


def cmd_region_map(opts) -> int:
    dims = ProblemDims(opts["p"], opts["n"])
    if opts["format"] == "svg":
        text = region_svg(dims, opts["a_range"], opts["b_range"])
    else:
        text = _table(region_rows(dims, opts["a_range"], opts["b_range"]), REGION_COLUMNS, opts)
    _emit(text, opts["out"])
    return EXIT_OK


def _check_lambdas(grid):
    if any(v < 0 for v in grid):
        raise UsageError("lambda values must be non-negative")


def cmd_risk_scan(opts) -> int:
    dims = ProblemDims(opts["p"], opts["n"])
    _check_lambdas(opts["lambda_grid"])
    kind = opts["estimator"]
    est = _make_estimator(kind, opts)
    a, b = _hyper_cells(kind, opts)
    judged = dims.p >= 3 and dims.n >= 2
    rows = []
    for r in risk_curve(est, opts["lambda_grid"], dims, opts["reps"], opts["seed"]):
        if judged:
            verdict = "PASS" if r.mean_risk - MARGIN * r.std_err <= dims.p else "FAIL"
        else:
            verdict = "NA"
        rows.append({"estimator": kind, "p": dims.p, "n": dims.n, "a": a,
                     "b": b, "lambda": r.lam, "mean_risk": r.mean_risk,
                     "std_err": r.std_err, "reps": r.reps, "seed": r.seed,
                     "verdict": verdict})
    _emit(_table(rows, RISK_COLUMNS, opts), opts["out"])
    return EXIT_OK


def cmd_compare(opts) -> int:
    dims = ProblemDims(opts["p"], opts["n"])
    _check_lambdas(opts["lambda_grid"])
    ka, kb = opts["estimator"], opts["against"]
    est_a, est_b = _make_estimator(ka, opts), _make_estimator(kb, opts)
    a, b = _hyper_cells(ka if ka == "gb" else kb, opts)
    rows = []
    for r in dominance_check(est_a, est_b, opts["lambda_grid"], dims, opts["reps"],
                             opts["seed"]):
        rows.append({"estimator_a": ka, "estimator_b": kb,
                     "p": dims.p, "n": dims.n, "a": a, "b": b, "lambda": r.lam,
                     "mean_diff": r.mean_diff, "std_err_diff": r.std_err_diff,
                     "reps": r.reps, "seed": opts["seed"],
                     "verdict": "CONSISTENT" if r.consistent_with_domination else "VIOLATED"})
    _emit(_table(rows, COMPARE_COLUMNS, opts), opts["out"])
    return EXIT_OK


def cmd_blyth(opts) -> int:
    hyper = PriorHyper(opts["a"], opts["b"])
    reports = blyth_scan(opts["j_grid"], hyper, _cfg(opts))
    _emit(_table([r.row() for r in reports], BLYTH_COLUMNS, opts), opts["out"])
    return EXIT_OK


def cmd_verify(opts) -> int:
    names = [c.strip() for c in opts["checks"].split(",") if c.strip()]
    results = run_checks(_cfg(opts), reps=opts["reps"], seed=opts["seed"], only=names)
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    _emit("\n".join(lines) + "\n", opts["out"])
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


HANDLERS = {
    "estimate": cmd_estimate,
    "phi": cmd_phi,
    "region-map": cmd_region_map,
    "risk-scan": cmd_risk_scan,
    "compare": cmd_compare,
    "blyth": cmd_blyth,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(ns)
        return HANDLERS[ns.command](opts)
    except QuadratureError as exc:
        print(f"shrinklab: quadrature failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InvalidHyperparameterError, UsageError, ValueError, OSError) as exc:
        print(f"shrinklab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"shrinklab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
