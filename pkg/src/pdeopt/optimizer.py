"""Limited-memory quasi-Newton minimization of the residual objective.

The solver runs L-BFGS (two-loop recursion, gamma-scaled initial Hessian)
on the flattened field vector with a backtracking sufficient-decrease line
search. A plain gradient-descent fallback is available behind a config
flag for debugging. Results are deterministic for identical inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Field, mae as field_mae
from .loss import CompiledObjective, LossBreakdown
from .operators import ProblemSpec
from .stencil import SchemePolicy


class OptimizationError(RuntimeError):
    """Raised when the objective is non-finite at the starting field."""


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int | None = None  # None -> 10 * number of grid points
    grad_tol: float = 1e-6  # stop when max|grad| <= grad_tol
    rel_loss_tol: float = 1e-9  # plateau threshold over plateau_window iterations
    plateau_window: int = 10
    history_length: int = 10  # quasi-Newton memory
    armijo_c: float = 1e-4  # sufficient-decrease constant
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    use_gradient_descent: bool = False

    def __post_init__(self):
        if self.grad_tol <= 0 or self.rel_loss_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")


@dataclass
class SolveResult:
    field: Field
    loss_history: list[LossBreakdown]
    iterations: int
    converged: str  # "gradient" | "plateau" | "budget"
    wall_time: float
    mae_vs_reference: float | None = None
    message: str | None = None

    @property
    def final_loss(self) -> LossBreakdown:
        return self.loss_history[-1]

    def to_json(self, history_stride: int = 1) -> dict:
        history = self.loss_history[::history_stride]
        if self.loss_history and history[-1] is not self.loss_history[-1]:
            history = history + [self.loss_history[-1]]
        return {
            "field": self.field.values.tolist(),
            "loss_history": [b.to_json() for b in history],
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "mae_vs_reference": self.mae_vs_reference,
            "message": self.message,
        }


def minimize(
    problem: ProblemSpec,
    init: Field,
    policy: SchemePolicy,
    config: OptimizerConfig | None = None,
    reference: Field | None = None,
) -> SolveResult:
    """Minimize the penalized residual objective starting from `init`."""
    config = config or OptimizerConfig()
    if init.spec.shape != problem.grid.shape:
        raise OptimizationError("initial field shape does not match problem grid")
    objective = CompiledObjective(problem, policy)
    max_iter = config.max_iterations
    if max_iter is None:
        max_iter = 10 * problem.grid.n_points

    t_start = time.perf_counter()
    u = init.values.ravel().copy()
    breakdown, grad = objective.loss_and_grad(u)
    if not np.isfinite(breakdown.total):
        raise OptimizationError("objective is non-finite at the initial field")
    history = [breakdown]
    totals = [breakdown.total]

    mem_s: list[np.ndarray] = []
    mem_y: list[np.ndarray] = []
    mem_rho: list[float] = []
    converged = "budget"
    message = None
    iterations = 0
    ls_failures = 0
    memory_was_reset = False

    while iterations < max_iter:
        if np.max(np.abs(grad)) <= config.grad_tol:
            converged = "gradient"
            break

        direction = _direction(grad, mem_s, mem_y, mem_rho, config)
        slope = float(grad @ direction)
        if slope >= 0.0:
            # not a descent direction; fall back to steepest descent
            direction = -grad
            slope = float(grad @ direction)

        step = 1.0 if mem_s or config.use_gradient_descent else 1.0 / max(1.0, np.max(np.abs(grad)))
        accepted = False
        f0 = breakdown.total
        for _ in range(config.max_backtracks):
            u_trial = u + step * direction
            trial = objective.loss(u_trial)
            if np.isfinite(trial.total) and trial.total <= f0 + config.armijo_c * step * slope:
                accepted = True
                break
            step *= config.backtrack_factor

        if not accepted:
            ls_failures += 1
            if ls_failures >= 3:
                if not memory_was_reset and mem_s:
                    mem_s.clear()
                    mem_y.clear()
                    mem_rho.clear()
                    memory_was_reset = True
                    ls_failures = 0
                    continue
                converged = "plateau"
                message = "line search failed repeatedly; stopped at best iterate"
                break
            continue
        ls_failures = 0

        new_breakdown, new_grad = objective.loss_and_grad(u_trial)
        s = u_trial - u
        y = new_grad - grad
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            mem_s.append(s)
            mem_y.append(y)
            mem_rho.append(1.0 / sy)
            if len(mem_s) > config.history_length:
                mem_s.pop(0)
                mem_y.pop(0)
                mem_rho.pop(0)

        u = u_trial
        breakdown, grad = new_breakdown, new_grad
        history.append(breakdown)
        totals.append(breakdown.total)
        iterations += 1

        if len(totals) > config.plateau_window:
            prev = totals[-1 - config.plateau_window]
            if abs(prev - totals[-1]) / max(1.0, abs(totals[-1])) <= config.rel_loss_tol:
                converged = "plateau"
                break

    final = Field(problem.grid, u.reshape(problem.grid.shape))
    result = SolveResult(
        field=final,
        loss_history=history,
        iterations=iterations,
        converged=converged,
        wall_time=time.perf_counter() - t_start,
        message=message,
    )
    if reference is not None:
        result.mae_vs_reference = field_mae(final, reference)
    return result


def _direction(grad, mem_s, mem_y, mem_rho, config) -> np.ndarray:
    if config.use_gradient_descent or not mem_s:
        return -grad
    q = grad.copy()
    k = len(mem_s)
    alpha = np.empty(k)
    for i in range(k - 1, -1, -1):
        alpha[i] = mem_rho[i] * (mem_s[i] @ q)
        q -= alpha[i] * mem_y[i]
    # gamma scaling of the initial inverse Hessian
    gamma = (mem_s[-1] @ mem_y[-1]) / (mem_y[-1] @ mem_y[-1])
    q *= gamma
    for i in range(k):
        beta = mem_rho[i] * (mem_y[i] @ q)
        q += (alpha[i] - beta) * mem_s[i]
    return -q
