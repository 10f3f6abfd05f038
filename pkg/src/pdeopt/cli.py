"""Command-line interface.

Subcommands:
  solve       one problem/config -> solve result JSON
  experiment  experiment spec JSON -> per-run CSV + summary JSON
  reference   emit a reference field as CSV
  validate    run the invariant suite (gradient check, stencil order,
              oracle self-convergence)

Exit codes: 0 success, 1 solver error, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .grid import GridSpec, mae, random_field
from .loss import finite_difference_gradient, gradient
from .operators import ProblemSpec, builtin_problem
from .optimizer import OptimizerConfig, minimize
from .reference import OracleError, heat_oracle, wave_exact_field
from .stencil import SchemePolicy, derivative
from .warmstart import cascade, cascade_to_json
from .grid import Field

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_INVALID_INPUT = 2


class UsageError(Exception):
    pass


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, nt = text.lower().split("x")
        return int(nx), int(nt)
    except ValueError:
        raise UsageError(f"bad --grid value {text!r}; expected NXxNT, e.g. 10x10") from None


def _parse_scheme(text: str) -> SchemePolicy:
    try:
        interior, boundary = (int(v) for v in text.split(","))
        return SchemePolicy(interior, boundary)
    except ValueError as exc:
        raise UsageError(f"bad --scheme value {text!r}: {exc}") from None


def _reference_for(name: str, spec: GridSpec):
    if name == "wave":
        return wave_exact_field(spec)
    if name == "heat":
        return heat_oracle(spec)
    return None


def _optimizer_config(args) -> OptimizerConfig:
    kwargs = {}
    if args.max_iter is not None:
        kwargs["max_iterations"] = args.max_iter
    return OptimizerConfig(**kwargs)


def _cmd_solve(args) -> int:
    n_x, n_t = _parse_grid(args.grid)
    policy = _parse_scheme(args.scheme)
    if args.config:
        with open(args.config) as fh:
            problem = ProblemSpec.from_json(json.load(fh))
        name = None
    else:
        name = args.problem
        problem = builtin_problem(name, n_x, n_t, lam=args.lam)
    config = _optimizer_config(args)
    reference = _reference_for(name, problem.grid) if name else None

    if args.init == "random":
        init = random_field(problem.grid, seed=args.seed)
        result = minimize(problem, init, policy, config=config, reference=reference)
        payload = result.to_json(history_stride=args.history_stride)
    else:
        resolutions = _cascade_resolutions(args.init, problem.grid)
        interp = "rbf" if args.init == "rbf" else "multilinear"

        def family(nx, nt):
            if name:
                return builtin_problem(name, nx, nt, lam=args.lam)
            grid = GridSpec(
                problem.grid.x_min, problem.grid.x_max,
                problem.grid.t_min, problem.grid.t_max, n_x=nx, n_t=nt,
            )
            return ProblemSpec(
                grid=grid, operator=problem.operator, boundary=problem.boundary,
                lam=problem.lam,
            )

        results = cascade(
            family, resolutions, policy, config=config, interp=interp, seed=args.seed
        )
        result = results[-1]
        if reference is not None:
            result.mae_vs_reference = mae(result.field, reference)
        payload = result.to_json(history_stride=args.history_stride)
        payload["cascade"] = cascade_to_json(results)

    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return EXIT_OK


def _cascade_resolutions(init: str, grid: GridSpec) -> list[tuple[int, int]]:
    n_x, n_t = grid.n_x, grid.n_t
    if init in ("interp", "rbf"):
        coarse = (max(3, (n_x + 1) // 2), max(3, (n_t + 1) // 2))
        if coarse[0] >= n_x or coarse[1] >= n_t:
            raise UsageError("grid too small for a two-level warm start")
        return [coarse, (n_x, n_t)]
    # full cascade: 10, 15, ... up to the target resolution
    levels = []
    step = 5
    cur = 10
    while cur < min(n_x, n_t):
        levels.append((cur, cur))
        cur += step
    levels = [lv for lv in levels if lv[0] < n_x and lv[1] < n_t]
    levels.append((n_x, n_t))
    if len(levels) < 2:
        raise UsageError("grid too small for a cascade; need more than 10 points")
    return levels


def _cmd_experiment(args) -> int:
    from .harness import ExperimentSpec, run_experiment, write_csv, write_summary

    with open(args.config) as fh:
        spec = ExperimentSpec.from_json(json.load(fh))
    if args.runs is not None:
        spec.runs = args.runs
    rows, summary = run_experiment(spec)
    out = args.out or spec.output or "experiment"
    write_csv(rows, out + ".csv")
    write_summary(summary, out + ".json")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_reference(args) -> int:
    n_x, n_t = _parse_grid(args.grid)
    if args.problem == "wave":
        field = wave_exact_field(GridSpec(0.0, 1.0, 0.0, 1.0, n_x=n_x, n_t=n_t))
    else:
        field = heat_oracle(GridSpec(-8.0, 8.0, 0.0, 10.0, n_x=n_x, n_t=n_t))
    field.to_csv(args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    ok = True

    # analytic vs finite-difference gradient on small random cases
    worst = 0.0
    for name in ("wave", "heat"):
        for policy in (SchemePolicy(2, 2), SchemePolicy(2, 4)):
            problem = builtin_problem(name, 8, 8)
            field = random_field(problem.grid, seed=1)
            g = gradient(problem, field, policy).values
            g_fd = finite_difference_gradient(problem, field, policy).values
            rel = np.max(np.abs(g - g_fd) / (1.0 + np.abs(g)))
            worst = max(worst, float(rel))
    grad_ok = worst <= 1e-5
    ok &= grad_ok
    print(f"{'PASS' if grad_ok else 'FAIL'} gradient check: max rel err {worst:.2e}")

    # empirical order of the repeated-application second derivative
    policy = SchemePolicy(2, 2)
    errors = []
    for n in (21, 41, 81, 161):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=n, n_t=3)
        x = spec.x_coords()
        f = Field(spec, np.tile(np.sin(np.pi * x)[:, None], (1, 3)))
        d2 = derivative(f, "x", 2, policy).values[2:-2, 1]
        exact = -np.pi**2 * np.sin(np.pi * x[2:-2])
        errors.append(np.max(np.abs(d2 - exact)))
    rates = [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
    rate = rates[-1]
    stencil_ok = 1.9 <= rate <= 2.1
    ok &= stencil_ok
    print(f"{'PASS' if stencil_ok else 'FAIL'} stencil order check: rate {rate:.3f}")

    # heat oracle self-convergence
    try:
        heat_oracle(GridSpec(-8.0, 8.0, 0.0, 10.0, n_x=10, n_t=10))
        print("PASS oracle self-convergence")
    except OracleError as exc:
        ok = False
        print(f"FAIL oracle self-convergence: {exc}")

    return EXIT_OK if ok else EXIT_SOLVER_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdeopt")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one problem")
    solve.add_argument("--problem", choices=["wave", "heat"], default="wave")
    solve.add_argument("--config", help="problem spec JSON (overrides --problem)")
    solve.add_argument("--grid", default="10x10", help="NXxNT")
    solve.add_argument("--scheme", default="2,2", help="interior,boundary orders")
    solve.add_argument("--init", choices=["random", "interp", "rbf", "cascade"], default="random")
    solve.add_argument("--lambda", dest="lam", type=float, default=10.0)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--history-stride", type=int, default=100)
    solve.add_argument("--out")
    solve.set_defaults(func=_cmd_solve)

    experiment = sub.add_parser("experiment", help="run an experiment spec")
    experiment.add_argument("--config", required=True)
    experiment.add_argument("--runs", type=int, default=None)
    experiment.add_argument("--out")
    experiment.set_defaults(func=_cmd_experiment)

    reference = sub.add_parser("reference", help="emit a reference field CSV")
    reference.add_argument("--problem", choices=["wave", "heat"], required=True)
    reference.add_argument("--grid", default="10x10")
    reference.add_argument("--out", required=True)
    reference.set_defaults(func=_cmd_reference)

    validate = sub.add_parser("validate", help="run the invariant suite")
    validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # noqa: BLE001 - solver failures map to exit 1
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR


def entrypoint() -> None:
    sys.exit(main())
