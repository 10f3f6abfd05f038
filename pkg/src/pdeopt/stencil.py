"""First-derivative finite-difference schemes and their composition.

Two families are provided: second-order one-sided/central differences and
the three-point fourth-order-family one-sided schemes (with the central
variant defined as the average of the two one-sided ones). Higher
derivatives are obtained by repeated application of the first-derivative
operator, which trades accuracy for generality.

Edge fallback: wherever a requested stencil would reach outside the grid,
the one-sided stencil of the same order pointing inward is used instead
(forward at the low edge, backward at the high edge).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Field, GridError, GridSpec

DIRECTIONS = ("forward", "backward", "central")
ORDERS = (2, 4)
AXES = ("x", "t")


class GridTooSmallError(GridError):
    """The grid has too few points along an axis for the requested stencil."""


# offset -> weight, to be scaled by 1/h
_ONE_SIDED = {
    ("forward", 2): {0: -1.0, 1: 1.0},
    ("backward", 2): {-1: -1.0, 0: 1.0},
    ("forward", 4): {0: -1.5, 1: 2.0, 2: -0.5},
    ("backward", 4): {-2: 0.5, -1: -2.0, 0: 1.5},
}


def stencil_weights(direction: str, approx_order: int) -> dict[int, float]:
    """Offset -> weight map (unscaled by 1/h) for one first-derivative stencil."""
    if direction == "central":
        fw = _ONE_SIDED[("forward", approx_order)]
        bw = _ONE_SIDED[("backward", approx_order)]
        out: dict[int, float] = {}
        for off in sorted(set(fw) | set(bw)):
            w = 0.5 * (fw.get(off, 0.0) + bw.get(off, 0.0))
            if w != 0.0:
                out[off] = w
        return out
    return dict(_ONE_SIDED[(direction, approx_order)])


@dataclass(frozen=True)
class StencilKind:
    """A first-derivative scheme: direction plus approximation order."""

    direction: str
    approx_order: int = 2

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.approx_order not in ORDERS:
            raise ValueError(f"approximation order must be 2 or 4, got {self.approx_order}")


@dataclass(frozen=True)
class SchemePolicy:
    """Which scheme order applies at interior points and at boundary bands."""

    interior_order: int = 2
    boundary_order: int = 2

    def __post_init__(self):
        if self.interior_order not in ORDERS or self.boundary_order not in ORDERS:
            raise ValueError("scheme orders must be 2 or 4")

    @property
    def boundary_width(self) -> int:
        """Band width per edge: 1 point for order 2, 2 points for order 4."""
        return 1 if self.boundary_order == 2 else 2

    @property
    def effective_width(self) -> int:
        # The interior central stencil must fit at every interior point, so
        # the band is widened when the interior scheme reaches further than
        # the boundary scheme (only the (4, 2) combination).
        return max(self.boundary_width, 1 if self.interior_order == 2 else 2)


@dataclass(frozen=True)
class PointBands:
    """Partition of axis indices into low band, interior, and high band."""

    low: tuple[int, ...]
    interior: tuple[int, ...]
    high: tuple[int, ...]


def classify_points(spec: GridSpec, policy: SchemePolicy, axis: str) -> PointBands:
    """Partition the indices of one axis according to the policy's band width."""
    n = _axis_size(spec, axis)
    w = policy.boundary_width
    return PointBands(
        low=tuple(range(w)),
        interior=tuple(range(w, n - w)),
        high=tuple(range(n - w, n)),
    )


def _axis_size(spec: GridSpec, axis: str) -> int:
    if axis == "x":
        return spec.n_x
    if axis == "t":
        return spec.n_t
    raise ValueError(f"unknown axis {axis!r}")


def _axis_step(spec: GridSpec, axis: str) -> float:
    return spec.h_x if axis == "x" else spec.h_t


def _place_row(rows, cols, vals, i, weights, scale):
    for off, w in weights.items():
        rows.append(i)
        cols.append(i + off)
        vals.append(w * scale)


def first_derivative_matrix(n: int, h: float, kind: StencilKind) -> sp.csr_matrix:
    """n x n matrix applying `kind` where it fits, with edge fallback."""
    min_n = 5 if (kind.direction == "central" and kind.approx_order == 4) else 3
    if n < min_n:
        raise GridTooSmallError(f"need at least {min_n} points for {kind}, got {n}")
    # candidates in priority order: the requested stencil, its mirrored
    # fallbacks, then (for order 4 on very small grids) the order-2 family
    candidates = [
        stencil_weights(kind.direction, kind.approx_order),
        stencil_weights("forward", kind.approx_order),
        stencil_weights("backward", kind.approx_order),
    ]
    if kind.approx_order == 4:
        candidates += [
            stencil_weights(kind.direction, 2),
            stencil_weights("forward", 2),
            stencil_weights("backward", 2),
        ]
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i in range(n):
        w = next(c for c in candidates if i + min(c) >= 0 and i + max(c) <= n - 1)
        _place_row(rows, cols, vals, i, w, 1.0 / h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def derivative_matrix_1d(n: int, h: float, policy: SchemePolicy) -> sp.csr_matrix:
    """n x n first-derivative matrix: one-sided bands, central interior."""
    w = policy.effective_width
    if n < 2 * w + 1:
        raise GridTooSmallError(
            f"need at least {2 * w + 1} points for policy {policy}, got {n}"
        )
    fwd = stencil_weights("forward", policy.boundary_order)
    bwd = stencil_weights("backward", policy.boundary_order)
    cen = stencil_weights("central", policy.interior_order)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i in range(n):
        if i < w:
            weights = fwd
        elif i >= n - w:
            weights = bwd
        else:
            weights = cen
        _place_row(rows, cols, vals, i, weights, 1.0 / h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _apply_along_axis(values: np.ndarray, mat: sp.csr_matrix, axis: str) -> np.ndarray:
    if axis == "x":
        return mat @ values
    return (mat @ values.T).T


def first_derivative(field: Field, axis: str, kind: StencilKind) -> Field:
    """First derivative of the field along one axis with one stencil kind."""
    n = _axis_size(field.spec, axis)
    h = _axis_step(field.spec, axis)
    mat = first_derivative_matrix(n, h, kind)
    return Field(field.spec, _apply_along_axis(field.values, mat, axis))


def derivative(field: Field, axis: str, order: int, policy: SchemePolicy) -> Field:
    """Derivative of the given order by repeated first-derivative application."""
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    n = _axis_size(field.spec, axis)
    h = _axis_step(field.spec, axis)
    mat = derivative_matrix_1d(n, h, policy)
    values = field.values
    for _ in range(order):
        values = _apply_along_axis(values, mat, axis)
    return Field(field.spec, values)
