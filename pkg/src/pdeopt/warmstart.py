"""Coarse-to-fine initial fields: interpolation and cascaded solves."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import interpn
from scipy.spatial.distance import cdist

from .grid import Field, GridError, GridSpec, random_field
from .operators import ProblemSpec
from .optimizer import OptimizerConfig, SolveResult, minimize
from .stencil import SchemePolicy


class CascadeError(RuntimeError):
    """A solve inside a cascade failed; carries the failing level index."""

    def __init__(self, level: int, cause: Exception):
        super().__init__(f"cascade level {level} failed: {cause}")
        self.level = level
        self.__cause__ = cause


def _check_domains(coarse: Field, fine_spec: GridSpec) -> None:
    if not coarse.spec.same_domain(fine_spec):
        raise GridError("coarse and fine grids cover different domains")


def interp_multilinear(coarse: Field, fine_spec: GridSpec) -> Field:
    """Bilinear tensor-grid interpolation of a coarse field onto a finer grid."""
    _check_domains(coarse, fine_spec)
    xc, tc = coarse.spec.x_coords(), coarse.spec.t_coords()
    xf, tf = fine_spec.meshgrid()
    values = interpn((xc, tc), coarse.values, np.stack([xf, tf], axis=-1), method="linear")
    return Field(fine_spec, values)


def interp_rbf(coarse: Field, fine_spec: GridSpec, smooth: float = 10.0) -> Field:
    """Radial-basis interpolation with linear kernel phi(r) = r.

    Weights solve (A - smooth * I) w = y over all coarse nodes, the classic
    smoothed-RBF formulation; smooth = 0 interpolates exactly.
    """
    _check_domains(coarse, fine_spec)
    if smooth < 0:
        raise ValueError("smooth must be >= 0")
    xc, tc = coarse.spec.meshgrid()
    nodes = np.column_stack([xc.ravel(), tc.ravel()])
    a = cdist(nodes, nodes)
    a[np.diag_indices_from(a)] -= smooth
    try:
        weights = np.linalg.solve(a, coarse.values.ravel())
    except np.linalg.LinAlgError as exc:
        raise GridError(f"singular RBF system (smooth={smooth}): {exc}") from exc
    xf, tf = fine_spec.meshgrid()
    fine_nodes = np.column_stack([xf.ravel(), tf.ravel()])
    values = cdist(fine_nodes, nodes) @ weights
    return Field(fine_spec, values.reshape(fine_spec.shape))


INTERPOLATORS: dict[str, Callable[[Field, GridSpec], Field]] = {
    "multilinear": interp_multilinear,
    "rbf": interp_rbf,
}


def cascade(
    problem_family: Callable[[int, int], ProblemSpec],
    resolutions: Sequence[tuple[int, int]],
    policy: SchemePolicy,
    config: OptimizerConfig | None = None,
    interp: str = "multilinear",
    seed: int = 0,
    smooth: float = 10.0,
    reference_family: Callable[[GridSpec], Field] | None = None,
) -> list[SolveResult]:
    """Solve at increasing resolutions, warm-starting each level from the last.

    The first level starts from a random field; level k > 0 starts from the
    interpolated solution of level k - 1.
    """
    if not resolutions:
        raise ValueError("need at least one resolution")
    pairs = [r if isinstance(r, tuple) else (r, r) for r in resolutions]
    for prev, cur in zip(pairs, pairs[1:]):
        if cur[0] <= prev[0] or cur[1] <= prev[1]:
            raise ValueError("resolutions must be strictly increasing")
    if interp not in INTERPOLATORS:
        raise ValueError(f"unknown interpolator {interp!r}")

    results: list[SolveResult] = []
    prev_field: Field | None = None
    for level, (n_x, n_t) in enumerate(pairs):
        try:
            problem = problem_family(n_x, n_t)
            if prev_field is None:
                init = random_field(problem.grid, seed=seed, lo=0.0, hi=1.0)
            elif interp == "rbf":
                init = interp_rbf(prev_field, problem.grid, smooth=smooth)
            else:
                init = interp_multilinear(prev_field, problem.grid)
            reference = reference_family(problem.grid) if reference_family else None
            result = minimize(problem, init, policy, config=config, reference=reference)
        except Exception as exc:  # noqa: BLE001 - re-raised with level attached
            raise CascadeError(level, exc) from exc
        results.append(result)
        prev_field = result.field
    return results


def cascade_to_json(results: Sequence[SolveResult]) -> list[dict]:
    """Per-level summaries with cumulative wall time."""
    out = []
    cumulative = 0.0
    for level, res in enumerate(results):
        cumulative += res.wall_time
        out.append(
            {
                "level": level,
                "n_x": res.field.spec.n_x,
                "n_t": res.field.spec.n_t,
                "iterations": res.iterations,
                "converged": res.converged,
                "final_loss": res.final_loss.to_json(),
                "wall_time": res.wall_time,
                "cumulative_time": cumulative,
                "mae_vs_reference": res.mae_vs_reference,
            }
        )
    return out
