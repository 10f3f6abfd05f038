"""Ground-truth solutions used to grade the optimizer.

The wave benchmark has a closed-form separation-of-variables solution. The
heat benchmark is graded against an independent Crank-Nicolson oracle run
on a much finer mesh and restricted to the requested grid; the oracle is
only accepted after a self-convergence check (doubling its internal
resolution must barely change the restricted values).
"""

from __future__ import annotations

import hashlib
import os

import numpy as np
from scipy.linalg import solve_banded

from .grid import Field, GridError, GridSpec

HEAT_DOMAIN = (-8.0, 8.0, 0.0, 10.0)


class OracleError(RuntimeError):
    """The numeric oracle failed its self-convergence gate."""


def wave_exact(x, t):
    """sin(pi x) * (cos(pi t / 2) + sin(pi t / 2)); solves the wave benchmark."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.sin(np.pi * x) * (np.cos(np.pi * t / 2.0) + np.sin(np.pi * t / 2.0))


def wave_exact_field(spec: GridSpec) -> Field:
    x, t = spec.meshgrid()
    return Field(spec, wave_exact(x, t))


def _crank_nicolson_heat(n_x: int, n_t: int) -> np.ndarray:
    """March u_t = u_xx with the heat benchmark data; returns (n_x, n_t) values."""
    x_min, x_max, t_min, t_max = HEAT_DOMAIN
    x = np.linspace(x_min, x_max, n_x)
    t = np.linspace(t_min, t_max, n_t)
    h = (x_max - x_min) / (n_x - 1)
    k = (t_max - t_min) / (n_t - 1)
    mu = k / (2.0 * h * h)

    left = np.sin(np.pi * t / 10.0)
    right = np.sin(np.pi * t / 10.0)
    u = np.empty((n_x, n_t))
    u[:, 0] = np.sin(np.pi * x / 8.0)
    u[0, :] = left
    u[-1, :] = right

    m = n_x - 2  # interior unknowns
    # banded form of (I - mu * tridiag(1, -2, 1))
    ab = np.zeros((3, m))
    ab[0, 1:] = -mu
    ab[1, :] = 1.0 + 2.0 * mu
    ab[2, :-1] = -mu

    v = u[1:-1, 0].copy()
    for step in range(1, n_t):
        rhs = (1.0 - 2.0 * mu) * v
        rhs[1:] += mu * v[:-1]
        rhs[:-1] += mu * v[1:]
        rhs[0] += mu * (u[0, step - 1] + u[0, step])
        rhs[-1] += mu * (u[-1, step - 1] + u[-1, step])
        v = solve_banded((1, 1), ab, rhs)
        u[1:-1, step] = v
    return u


def _restricted(spec: GridSpec, refine: int) -> np.ndarray:
    n_x_ref = refine * (spec.n_x - 1) + 1
    n_t_ref = refine * (spec.n_t - 1) + 1
    full = _crank_nicolson_heat(n_x_ref, n_t_ref)
    return full[::refine, ::refine]


def heat_oracle(spec: GridSpec, refine: int = 8, gate_tol: float = 1e-4) -> Field:
    """Crank-Nicolson reference for the heat benchmark on `spec`'s nodes.

    Runs on a mesh `refine` times finer in both axes, restricted to the
    requested nodes. Rejected (OracleError) unless doubling the internal
    resolution changes the restricted field by at most `gate_tol` MAE.
    """
    if (spec.x_min, spec.x_max, spec.t_min, spec.t_max) != HEAT_DOMAIN:
        raise GridError(f"heat oracle is defined on {HEAT_DOMAIN}")
    if refine < 4:
        raise ValueError("reference mesh must be at least 4x finer")
    coarse = _restricted(spec, refine)
    fine = _restricted(spec, 2 * refine)
    drift = float(np.abs(coarse - fine).mean())
    if drift > gate_tol:
        raise OracleError(
            f"oracle not converged: refinement changed values by {drift:.3e} MAE"
        )
    return Field(spec, fine)


def spec_cache_key(spec: GridSpec, refine: int) -> str:
    payload = repr((spec, refine)).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def heat_oracle_cached(spec: GridSpec, cache_dir: str, refine: int = 8) -> Field:
    """heat_oracle with a CSV cache keyed by the grid spec."""
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"heat_oracle_{spec_cache_key(spec, refine)}.csv")
    if os.path.exists(path):
        return Field.from_csv(spec, path)
    field = heat_oracle(spec, refine=refine)
    field.to_csv(path)
    return field
