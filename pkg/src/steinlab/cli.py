"""Command-line front end: ``steinlab <bias|distance|bound|reproduce> ...``."""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__, bounds, experiments
from .distributions import Dist, DistError, DistSpecError, Numeric, dist_to_json, format_dist, parse_dist, split_rng
from .metrics import (
    kolmogorov,
    kolmogorov_empirical,
    wasserstein,
    wasserstein_empirical,
)
from .numeric import to_numeric
from .transforms import BiasKind, Equilibrium, SizeBiased, ZeroBiased, bias

DEFAULT_SEED = 0
SIG_DIGITS = 12

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNSATISFIED = 2


class UsageError(Exception):
    def __init__(self, message: str, category: str = "usage"):
        super().__init__(message)
        self.category = category


_TYPED = re.compile(r"argument (\S+): (spec|domain): (.*)", re.S)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        m = _TYPED.match(message)
        if m:  # a law spec that failed to parse keeps its own category
            raise UsageError(f"{m.group(1)}: {m.group(3)}", m.group(2))
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# output


def _round(obj: Any) -> Any:
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_round(obj), indent=2)


def _fmt_csv(x: float) -> str:
    return f"{float(x):.{SIG_DIGITS}g}"


def _emit(text: str, path: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# argument types


def _grid(text: str) -> list[float]:
    """``start:stop:count`` (inclusive linear grid) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            n = int(count)
            if n < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(start), float(stop), n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:count or a,b,c") from None


def _dist(text: str) -> Dist:
    try:
        return parse_dist(text)
    except DistSpecError as exc:
        raise argparse.ArgumentTypeError(f"spec: {exc}") from None
    except (DistError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"domain: {exc}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


# ---------------------------------------------------------------------------
# schemas


def _props(fields: dict[str, str]) -> dict:
    return {k: {"type": v} for k, v in fields.items()}


SCHEMAS = {
    "DistanceEstimate": {
        "type": "object",
        "properties": _props(
            {
                "value": "number",
                "metric": "string",
                "method": "string",
                "error": "number",
                "n": "integer",
                "flagged": "boolean",
            }
        ),
        "required": ["value", "metric", "method", "error"],
    },
    "BoundReport": {
        "type": "object",
        "properties": _props(
            {
                "mu": "number",
                "sigma2": "number",
                "r": "number",
                "alpha": "number",
                "theta": "number",
                "w_bound": "number",
                "k_bound": "number",
                "a_const": "number",
                "b_const": "number",
                "regime": "string",
            }
        ),
        "required": ["mu", "sigma2", "r", "alpha", "theta", "w_bound", "k_bound", "a_const", "b_const", "regime"],
    },
    "ExperimentResult": {
        "type": "object",
        "properties": {
            "scenario": {"type": "string"},
            "master_seed": {"type": "integer"},
            "satisfied": {"type": "boolean"},
            "wall_time": {"type": "number"},
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "check": {"type": "string"},
                        "params": {"type": "object"},
                        "computed_distance": {"$ref": "#/DistanceEstimate"},
                        "reference": {"type": "number"},
                        "reference_kind": {"enum": ["bound", "exact", "lower", "upper"]},
                        "tolerance": {"type": "number"},
                        "satisfied": {"type": "boolean"},
                    },
                },
            },
        },
        "required": ["scenario", "master_seed", "satisfied", "rows"],
    },
}


# ---------------------------------------------------------------------------
# commands


def cmd_bias(args) -> int:
    out = bias(args.dist, BiasKind(args.kind))
    result: dict[str, Any] = {"kind": args.kind, "input": format_dist(args.dist)}
    if isinstance(out, (SizeBiased, ZeroBiased, Equilibrium, Numeric)):
        law = to_numeric(out, tol=args.tol)
        result.update(closed_form=False, numeric=law.to_json())
    else:
        result.update(closed_form=True, spec=format_dist(out), dist=dist_to_json(out))
    _emit(dumps(result), args.output)
    return EXIT_OK


def cmd_distance(args) -> int:
    if args.empirical is not None:
        s1_rng, s2_rng = split_rng(args.seed, 2)
        s1 = args.d1.sample(s1_rng, args.empirical)
        if args.metric == "wasserstein":
            est = wasserstein_empirical(s1, args.d2.sample(s2_rng, args.empirical), seed=args.seed)
        else:
            est = kolmogorov_empirical(s1, args.d2, seed=args.seed)
    else:
        fn = wasserstein if args.metric == "wasserstein" else kolmogorov
        est = fn(args.d1, args.d2, args.tol)
    _emit(dumps(est.to_json()), args.output)
    return EXIT_OK


def cmd_bound(args) -> int:
    which = args.which
    if which == "theorem2":
        out: dict[str, Any] = bounds.theorem_report(args.mu, args.var, args.theta).to_json()
    elif which == "gamma-pair":
        out = {
            "r1": args.r1,
            "alpha1": args.a1,
            "r2": args.r2,
            "alpha2": args.a2,
            "w_bound": bounds.gamma_pair_bound(args.r1, args.a1, args.r2, args.a2),
        }
    elif which == "nb":
        out = bounds.nb_report(args.kappa, args.p).to_json()
        if args.nu is not None:
            out["nu"] = args.nu
            out["sum_bound"] = bounds.nb_sum_bound(args.kappa, args.p, args.nu)
    elif which == "example1":
        theta, bound, exact = bounds.example1_values(args.delta)
        out = {"delta": args.delta, "theta": theta, "w_bound": bound, "exact": exact}
    else:  # concentration
        out = {
            "r": args.r,
            "alpha": args.alpha,
            "delta": args.delta,
            "eps": bounds.concentration_eps(args.r, args.alpha, args.delta),
        }
    _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    name = args.scenario
    kw: dict[str, Any] = {"seed": args.seed}
    if name == "characterization" and (args.r or args.alpha):
        rs = args.r or [0.5, 1.0, 2.0, 5.0]
        alphas = args.alpha or [0.5, 1.0, 3.0]
        kw["grid"] = [(r, a) for r in rs for a in alphas]
    elif name == "example1" and args.deltas:
        kw["deltas"] = args.deltas
    elif name == "nb":
        if args.kappas:
            kw["kappas"] = args.kappas
        if args.ps:
            kw["ps"] = args.ps
    elif name == "counterexample" and args.lambdas:
        kw["lams"] = args.lambdas
    elif name == "sum":
        kw["n"] = args.n
        if args.part:
            kw["parts"] = args.part
    result = experiments.SCENARIOS[name](**kw)
    if args.out == "csv":
        text = result.to_csv(_fmt_csv)
    else:
        text = dumps(result.to_json(include_time=args.include_time))
    _emit(text, args.output)
    return EXIT_OK if result.satisfied else EXIT_UNSATISFIED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="steinlab", description="Gamma approximation toolkit: bias transforms, distances, bounds.")
    p.add_argument("--version", action="store_true", help="print the version as JSON and exit")
    p.add_argument("--schema", action="store_true", help="print the JSON schemas of the outputs and exit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--output", "-o", default=None, help="write to this path instead of stdout")

    b = sub.add_parser("bias", help="size-bias, zero-bias or equilibrium transform of a law")
    b.add_argument("--kind", required=True, choices=[k.value for k in BiasKind])
    b.add_argument("--dist", required=True, type=_dist, help="law spec, e.g. gamma:r=2,alpha=1")
    b.add_argument("--tol", type=float, default=1e-8, help="CDF tolerance of a tabulated result")
    common(b)
    b.set_defaults(func=cmd_bias)

    d = sub.add_parser("distance", help="Wasserstein or Kolmogorov distance between two laws")
    d.add_argument("--metric", required=True, choices=["wasserstein", "kolmogorov"])
    d.add_argument("--d1", required=True, type=_dist)
    d.add_argument("--d2", required=True, type=_dist)
    d.add_argument("--tol", type=float, default=None, help="target error of the exact computation")
    d.add_argument("--empirical", type=_positive_int, default=None, metavar="N", help="use N samples instead")
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common(d)
    d.set_defaults(func=cmd_distance)

    bd = sub.add_parser("bound", help="closed-form error bounds")
    bsub = bd.add_subparsers(dest="which", required=True, parser_class=_Parser)
    t2 = bsub.add_parser("theorem2", help="bounds from mean, variance and theta")
    t2.add_argument("--mu", type=float, required=True)
    t2.add_argument("--var", type=float, required=True)
    t2.add_argument("--theta", type=float, required=True)
    gp = bsub.add_parser("gamma-pair", help="Wasserstein bound between two gamma laws")
    for name in ("--r1", "--a1", "--r2", "--a2"):
        gp.add_argument(name, type=float, required=True)
    nb = bsub.add_parser("nb", help="rescaled negative binomial against its gamma limit")
    nb.add_argument("--kappa", type=float, required=True)
    nb.add_argument("--p", type=float, required=True)
    nb.add_argument("--nu", type=float, default=None, help="spread of the summands for the random-sum bound")
    ex = bsub.add_parser("example1", help="truncated gamma-process compound Poisson law")
    ex.add_argument("--delta", type=float, required=True)
    co = bsub.add_parser("concentration", help="gamma concentration bound")
    co.add_argument("--r", type=float, required=True)
    co.add_argument("--alpha", type=float, required=True)
    co.add_argument("--delta", type=float, required=True)
    for sp in (t2, gp, nb, ex, co):
        common(sp)
        sp.set_defaults(func=cmd_bound)

    rp = sub.add_parser("reproduce", help="run a reproduction scenario")
    rp.add_argument("scenario", choices=list(experiments.SCENARIOS))
    rp.add_argument("--out", choices=["json", "csv"], default="json")
    rp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    rp.add_argument("--include-time", action="store_true", help="add wall time (breaks byte-identical output)")
    rp.add_argument("--r", type=_grid, help="characterization shapes")
    rp.add_argument("--alpha", type=_grid, help="characterization rates")
    rp.add_argument("--deltas", type=_grid, help="example1 truncation levels")
    rp.add_argument("--kappas", type=_grid, help="nb shape grid")
    rp.add_argument("--ps", type=_grid, help="nb probability grid")
    rp.add_argument("--lambdas", type=_grid, help="counterexample rates")
    rp.add_argument("--n", type=_positive_int, default=100_000, help="sum: Monte Carlo draws")
    rp.add_argument("--part", type=_dist, action="append", help="sum: a summand law (repeatable)")
    common(rp)
    rp.set_defaults(func=cmd_reproduce)
    return p


def _fail(category: str, detail: str) -> int:
    sys.stderr.write(f"error: {category}: {detail}\n")
    return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(exc.category, str(exc))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.version:
        _emit(json.dumps({"name": "steinlab", "version": __version__}), None)
        return EXIT_OK
    if args.schema:
        _emit(json.dumps(SCHEMAS, indent=2), None)
        return EXIT_OK
    if args.command is None:
        return _fail("usage", "a subcommand is required (bias, distance, bound, reproduce)")
    try:
        return args.func(args)
    except DistSpecError as exc:
        return _fail("spec", str(exc))
    except (DistError, ValueError) as exc:
        return _fail("domain", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    except Exception as exc:  # never a traceback on user input
        return _fail("internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
