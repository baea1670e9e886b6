"""Command-line experiment runner.

Subcommands: ``run`` (method sweep over a problem), ``deblur`` (budgeted
image restoration), ``diagnose`` (theory factors vs observed decay).  A TOML
or JSON spec can be supplied with ``--config``; explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .harness import ExperimentSpec, deblur_run, diagnose, run
from .solvers import METHODS


def _load_config(path: str) -> dict:
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(raw)
    return tomllib.loads(raw.decode("utf-8"))


def _add_common(parser):
    parser.add_argument("--config", help="TOML or JSON experiment spec")
    parser.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--stop-rule", choices=["residual", "relative-error"])
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--l", type=float, help="row fraction for TRKS")
    parser.add_argument("--eta", type=float, help="row fraction for SRKS/TSRKS")
    parser.add_argument("--check-every", type=int)
    parser.add_argument("--budget-seconds", type=float)
    parser.add_argument("--budget-iters", type=int)
    parser.add_argument("--out", help="output directory")


def _add_problem(parser):
    parser.add_argument("--problem", choices=["trigpoly", "gaussian", "mtx", "deblur"])
    parser.add_argument("--m", type=int, help="row count (trigpoly, gaussian)")
    parser.add_argument("--n", type=int, help="column count (gaussian)")
    parser.add_argument("--r", type=int, help="bandwidth (trigpoly)")
    parser.add_argument("--path", help="Matrix Market file (mtx)")
    parser.add_argument("--image", help="PGM or CSV image (deblur); omit for the phantom")
    parser.add_argument("--side", type=int, help="image side (deblur)")
    parser.add_argument("--r-band", type=int, help="vertical half-bandwidth (deblur)")
    parser.add_argument("--s-band", type=int, help="horizontal half-bandwidth (deblur)")
    parser.add_argument("--sigma", type=float, help="blur kernel width (deblur)")


def _problem_from_args(args, base: dict | None) -> dict:
    problem = dict(base or {})
    if args.problem:
        problem["type"] = args.problem
    setters = {
        "m": args.m, "n": args.n, "r": args.r, "path": args.path,
        "image": args.image, "side": args.side, "r_band": getattr(args, "r_band", None),
        "s_band": getattr(args, "s_band", None), "sigma": args.sigma,
    }
    for key, value in setters.items():
        if value is not None:
            problem[key] = value
    if "type" not in problem:
        raise SystemExit("no problem given: use --problem or a --config with a problem table")
    return problem


def _build_spec(args, force_problem_type: str | None = None) -> ExperimentSpec:
    data = _load_config(args.config) if args.config else {}
    problem = _problem_from_args(args, data.pop("problem", None))
    if force_problem_type:
        problem.setdefault("type", force_problem_type)
        if problem["type"] != force_problem_type:
            raise SystemExit(f"this subcommand requires a {force_problem_type!r} problem")
    data["problem"] = problem
    overrides = {
        "methods": args.methods.split(",") if args.methods else None,
        "trials": args.trials,
        "stop_rule": args.stop_rule,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "seed": args.seed,
        "l": args.l,
        "eta": args.eta,
        "check_every": args.check_every,
        "budget_seconds": args.budget_seconds,
        "budget_iters": args.budget_iters,
        "out_dir": args.out,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return ExperimentSpec.from_mapping(data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kaczmarz2d",
                                     description="row-action solver benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a problem with several methods and report")
    _add_problem(p_run)
    _add_common(p_run)

    p_deblur = sub.add_parser("deblur", help="budgeted image restoration comparison")
    _add_problem(p_deblur)
    _add_common(p_deblur)

    p_diag = sub.add_parser("diagnose", help="theory factors vs observed decay")
    _add_problem(p_diag)
    _add_common(p_diag)

    args = parser.parse_args(argv)
    if args.command == "run":
        summary = run(_build_spec(args))
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    elif args.command == "deblur":
        spec = _build_spec(args, force_problem_type="deblur")
        summary = deblur_run(spec)
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    else:
        spec = _build_spec(args)
        report = diagnose(spec)
        print(json.dumps(report, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
