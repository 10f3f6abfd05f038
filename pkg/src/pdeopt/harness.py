"""Experiment runner: repeated solves with statistics and CSV/JSON output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.stats import t as t_dist

from .grid import Field, GridSpec, random_field
from .operators import ProblemSpec, builtin_problem
from .optimizer import OptimizerConfig, SolveResult, minimize
from .reference import heat_oracle, wave_exact_field
from .stencil import SchemePolicy
from .warmstart import cascade

CSV_COLUMNS = [
    "run_id",
    "n_x",
    "n_t",
    "interior_order",
    "boundary_order",
    "init",
    "seed",
    "iterations",
    "converged",
    "mae",
    "interior_loss",
    "boundary_loss",
    "wall_time_s",
]

INITS = ("random", "multilinear", "rbf", "cascade")


@dataclass
class ExperimentSpec:
    problem: str  # builtin name: "wave" or "heat"
    resolutions: Sequence[tuple[int, int]]
    policies: Sequence[SchemePolicy]
    inits: Sequence[str] = ("random",)
    runs: int = 30
    base_seed: int = 0
    lam: float = 10.0
    optimizer: OptimizerConfig = dc_field(default_factory=OptimizerConfig)
    output: str | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        pairs = [r if isinstance(r, (tuple, list)) else (r, r) for r in self.resolutions]
        self.resolutions = [tuple(int(v) for v in p) for p in pairs]
        if not self.resolutions:
            raise ValueError("resolutions must be non-empty")
        for prev, cur in zip(self.resolutions, self.resolutions[1:]):
            if cur[0] <= prev[0] or cur[1] <= prev[1]:
                raise ValueError("resolutions must be strictly increasing")
        for init in self.inits:
            if init not in INITS:
                raise ValueError(f"unknown init {init!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentSpec":
        opt = obj.get("optimizer", {})
        return cls(
            problem=obj["problem"],
            resolutions=obj["resolutions"],
            policies=[SchemePolicy(*p) for p in obj.get("policies", [[2, 2]])],
            inits=obj.get("inits", ["random"]),
            runs=int(obj.get("runs", 30)),
            base_seed=int(obj.get("base_seed", 0)),
            lam=float(obj.get("lambda", 10.0)),
            optimizer=OptimizerConfig(**opt),
            output=obj.get("output"),
        )


class _ReferenceCache:
    def __init__(self, problem_name: str):
        self.problem_name = problem_name
        self._cache: dict[tuple[int, int], Field] = {}

    def get(self, spec: GridSpec) -> Field:
        key = spec.shape
        if key not in self._cache:
            if self.problem_name == "wave":
                self._cache[key] = wave_exact_field(spec)
            else:
                self._cache[key] = heat_oracle(spec)
        return self._cache[key]


def _row(run_id, spec, policy, init, seed, result: SolveResult | None, error=None) -> dict:
    if result is None:
        return {
            "run_id": run_id,
            "n_x": spec[0],
            "n_t": spec[1],
            "interior_order": policy.interior_order,
            "boundary_order": policy.boundary_order,
            "init": init,
            "seed": seed,
            "iterations": "",
            "converged": f"error: {error}",
            "mae": "",
            "interior_loss": "",
            "boundary_loss": "",
            "wall_time_s": "",
        }
    final = result.final_loss
    return {
        "run_id": run_id,
        "n_x": result.field.spec.n_x,
        "n_t": result.field.spec.n_t,
        "interior_order": policy.interior_order,
        "boundary_order": policy.boundary_order,
        "init": init,
        "seed": seed,
        "iterations": result.iterations,
        "converged": result.converged,
        "mae": result.mae_vs_reference,
        "interior_loss": final.interior,
        "boundary_loss": final.boundary,
        "wall_time_s": result.wall_time,
    }


def run_experiment(spec: ExperimentSpec) -> tuple[list[dict], dict]:
    """Execute the experiment; returns (per-run rows, summary)."""
    refs = _ReferenceCache(spec.problem)

    def family(n_x: int, n_t: int) -> ProblemSpec:
        return builtin_problem(spec.problem, n_x, n_t, lam=spec.lam)

    rows: list[dict] = []
    run_id = 0
    for policy in spec.policies:
        for init in spec.inits:
            for run in range(spec.runs):
                seed = spec.base_seed + run
                if init == "random":
                    for res in spec.resolutions:
                        try:
                            problem = family(*res)
                            start = random_field(problem.grid, seed=seed)
                            result = minimize(
                                problem,
                                start,
                                policy,
                                config=spec.optimizer,
                                reference=refs.get(problem.grid),
                            )
                            rows.append(_row(run_id, res, policy, init, seed, result))
                        except Exception as exc:  # noqa: BLE001 - recorded per run
                            rows.append(_row(run_id, res, policy, init, seed, None, exc))
                        run_id += 1
                else:
                    interp = "multilinear" if init == "cascade" else init
                    try:
                        results = cascade(
                            family,
                            spec.resolutions,
                            policy,
                            config=spec.optimizer,
                            interp=interp,
                            seed=seed,
                            reference_family=refs.get,
                        )
                        for res, result in zip(spec.resolutions, results):
                            rows.append(_row(run_id, res, policy, init, seed, result))
                            run_id += 1
                    except Exception as exc:  # noqa: BLE001 - recorded per run
                        rows.append(
                            _row(run_id, spec.resolutions[-1], policy, init, seed, None, exc)
                        )
                        run_id += 1
    return rows, summarize(rows, spec.runs)


def summarize(rows: Sequence[dict], runs: int) -> dict:
    """Mean and 95% confidence interval (t-distribution) per configuration."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (
            row["n_x"],
            row["n_t"],
            row["interior_order"],
            row["boundary_order"],
            row["init"],
        )
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        members = [r for r in groups[key] if r["mae"] != ""]
        maes = np.array([float(r["mae"]) for r in members])
        entry = {
            "n_x": key[0],
            "n_t": key[1],
            "interior_order": key[2],
            "boundary_order": key[3],
            "init": key[4],
            "n_runs": len(members),
            "n_failed": len(groups[key]) - len(members),
        }
        if len(members) == 0:
            entry.update({"mae_mean": None, "mae_ci95": None, "ci_undefined": True})
        else:
            entry["mae_mean"] = float(maes.mean())
            entry["iterations_mean"] = float(np.mean([float(r["iterations"]) for r in members]))
            entry["wall_time_mean_s"] = float(
                np.mean([float(r["wall_time_s"]) for r in members])
            )
            if len(members) < 2:
                entry["mae_ci95"] = None
                entry["ci_undefined"] = True
            else:
                sem = maes.std(ddof=1) / math.sqrt(len(maes))
                half = float(t_dist.ppf(0.975, len(maes) - 1) * sem)
                entry["mae_ci95"] = half
                entry["ci_undefined"] = False
        out.append(entry)
    return {"groups": out}


def write_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("run_id", "n_x", "n_t", "interior_order", "boundary_order"):
            row[key] = int(row[key])
    return rows


def write_summary(summary: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
