"""Uniform 2-D rectangular meshes and real-valued mesh functions.

Storage convention: field values are stored row-major with axis 0 = x and
axis 1 = t, so ``values[i, j]`` is the value at ``(x_i, t_j)``.

Randomness uses numpy's PCG64 generator (``numpy.random.default_rng``),
which is seedable and platform-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid specification or a grid/field mismatch."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular mesh on [x_min, x_max] x [t_min, t_max]."""

    x_min: float
    x_max: float
    t_min: float
    t_max: float
    n_x: int
    n_t: int

    def __post_init__(self):
        if self.n_x < 3 or self.n_t < 3:
            raise GridError(
                f"need at least 3 points per axis, got n_x={self.n_x}, n_t={self.n_t}"
            )
        if not (self.x_max > self.x_min) or not (self.t_max > self.t_min):
            raise GridError("degenerate domain bounds")

    @property
    def h_x(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def h_t(self) -> float:
        return (self.t_max - self.t_min) / (self.n_t - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_t)

    @property
    def n_points(self) -> int:
        return self.n_x * self.n_t

    def x_coords(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    def t_coords(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_t)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_coords(), self.t_coords(), indexing="ij")

    def same_domain(self, other: "GridSpec") -> bool:
        return (
            self.x_min == other.x_min
            and self.x_max == other.x_max
            and self.t_min == other.t_min
            and self.t_max == other.t_max
        )


def build_grid(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate arrays (x, t) for a grid spec."""
    return spec.x_coords(), spec.t_coords()


class Field:
    """Immutable real-valued mesh function bound to a :class:`GridSpec`."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != spec.shape:
            raise GridError(
                f"field shape {values.shape} does not match grid shape {spec.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def __repr__(self):
        return f"Field(shape={self.spec.shape})"

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.spec, values)

    def to_csv(self, path) -> None:
        """One row per x-index, comma-separated t-values, round-trip precision."""
        with open(path, "w") as fh:
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, spec: GridSpec, path) -> "Field":
        values = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(spec, values)


def random_field(spec: GridSpec, seed: int, lo: float = 0.0, hi: float = 1.0) -> Field:
    """I.i.d. uniform field on [lo, hi); identical seed gives identical field."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    rng = np.random.default_rng(seed)
    return Field(spec, rng.uniform(lo, hi, size=spec.shape))


def mae(a: Field, b: Field) -> float:
    """Mean absolute difference over all grid points."""
    if a.spec.shape != b.spec.shape:
        raise GridError(f"shape mismatch: {a.spec.shape} vs {b.spec.shape}")
    return float(np.abs(a.values - b.values).mean())
