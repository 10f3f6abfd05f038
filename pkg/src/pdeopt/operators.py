"""Differential and boundary operators encoded as data.

An operator is a sum of terms; each term is a coefficient times a product
of derivative factors of the field, raised to an integer power. A factor
holds derivative orders along each axis and is applied x-then-t. The empty
factor list denotes the field itself.

Coefficients and right-hand sides are named grid functions so that
operator specifications round-trip through JSON exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Field, GridError, GridSpec
from .stencil import SchemePolicy, derivative

EDGES = ("x_min", "x_max", "t_min", "t_max")


class OperatorError(ValueError):
    """Malformed operator/boundary specification."""


# ---------------------------------------------------------------------------
# named grid functions


@dataclass(frozen=True)
class GridFunction:
    """A named built-in function of (x, t) with fixed parameters."""

    name: str
    params: tuple[tuple[str, object], ...] = ()

    @classmethod
    def make(cls, name: str, **params) -> "GridFunction":
        if name not in _BUILTIN_FNS:
            raise OperatorError(f"unknown grid function {name!r}")
        return cls(name, tuple(sorted(params.items())))

    @classmethod
    def zero(cls) -> "GridFunction":
        return cls.make("zero")

    @classmethod
    def constant(cls, value: float) -> "GridFunction":
        return cls.make("constant", value=float(value))

    @classmethod
    def sin_scaled(cls, axis: str, scale: float) -> "GridFunction":
        if axis not in ("x", "t"):
            raise OperatorError(f"unknown axis {axis!r}")
        return cls.make("sin_scaled", axis=axis, scale=float(scale))

    def evaluate(self, spec: GridSpec) -> np.ndarray:
        x, t = spec.meshgrid()
        values = _BUILTIN_FNS[self.name](x, t, dict(self.params))
        values = np.broadcast_to(np.asarray(values, dtype=float), spec.shape)
        if not np.all(np.isfinite(values)):
            raise OperatorError(f"grid function {self.name!r} produced non-finite values")
        return np.ascontiguousarray(values)

    def to_json(self) -> dict:
        return {"fn": self.name, **dict(self.params)}

    @classmethod
    def from_json(cls, obj) -> "GridFunction":
        if isinstance(obj, (int, float)):
            return cls.constant(float(obj))
        params = {k: v for k, v in obj.items() if k != "fn"}
        return cls.make(obj["fn"], **params)


_BUILTIN_FNS = {
    "zero": lambda x, t, p: np.zeros_like(x),
    "constant": lambda x, t, p: np.full_like(x, float(p["value"])),
    "sin_scaled": lambda x, t, p: np.sin(float(p["scale"]) * (x if p["axis"] == "x" else t)),
}


# ---------------------------------------------------------------------------
# operator encoding


@dataclass(frozen=True)
class DiffFactor:
    """One derivative factor: d^dx/dx^dx then d^dt/dt^dt applied to the field."""

    dx: int = 0
    dt: int = 0

    def __post_init__(self):
        if self.dx < 0 or self.dt < 0 or self.dx + self.dt < 1:
            raise OperatorError(f"invalid derivative orders dx={self.dx}, dt={self.dt}")

    @classmethod
    def parse(cls, obj) -> "DiffFactor":
        """Accept [axis, order] pairs or {'x': a, 't': b} mixed factors."""
        if isinstance(obj, dict):
            return cls(dx=int(obj.get("x", 0)), dt=int(obj.get("t", 0)))
        axis, order = obj
        if axis == "x":
            return cls(dx=int(order))
        if axis == "t":
            return cls(dt=int(order))
        raise OperatorError(f"unknown axis {axis!r}")

    def to_json(self):
        if self.dx and self.dt:
            return {"x": self.dx, "t": self.dt}
        if self.dx:
            return ["x", self.dx]
        return ["t", self.dt]


def _as_coefficient(coeff) -> "float | GridFunction":
    if isinstance(coeff, GridFunction):
        return coeff
    coeff = float(coeff)
    if not math.isfinite(coeff):
        raise OperatorError("non-finite coefficient")
    return coeff


@dataclass(frozen=True)
class DiffTerm:
    """coefficient * (product of derivative factors) ** power."""

    coefficient: "float | GridFunction" = 1.0
    factors: tuple[DiffFactor, ...] = ()
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "coefficient", _as_coefficient(self.coefficient))
        factors = tuple(
            f if isinstance(f, DiffFactor) else DiffFactor.parse(f) for f in self.factors
        )
        # product order is immaterial; canonicalize for stable summation keys
        object.__setattr__(self, "factors", tuple(sorted(factors, key=lambda f: (f.dx, f.dt))))
        if self.power < 1:
            raise OperatorError(f"term power must be >= 1, got {self.power}")

    def coefficient_values(self, spec: GridSpec) -> np.ndarray:
        if isinstance(self.coefficient, GridFunction):
            return self.coefficient.evaluate(spec)
        return np.full(spec.shape, self.coefficient)

    def sort_key(self):
        coeff = (
            self.coefficient.to_json()
            if isinstance(self.coefficient, GridFunction)
            else self.coefficient
        )
        return json.dumps([[(f.dx, f.dt) for f in self.factors], self.power, coeff])

    def to_json(self) -> dict:
        coeff = self.coefficient
        if isinstance(coeff, GridFunction):
            coeff = coeff.to_json()
        return {
            "coeff": coeff,
            "factors": [f.to_json() for f in self.factors],
            "power": self.power,
        }

    @classmethod
    def from_json(cls, obj) -> "DiffTerm":
        coeff = obj.get("coeff", 1.0)
        if isinstance(coeff, dict):
            coeff = GridFunction.from_json(coeff)
        return cls(
            coefficient=coeff,
            factors=tuple(DiffFactor.parse(f) for f in obj.get("factors", [])),
            power=int(obj.get("power", 1)),
        )


def identity_term() -> DiffTerm:
    return DiffTerm(coefficient=1.0, factors=(), power=1)


@dataclass(frozen=True)
class OperatorSpec:
    """Sum of differential terms with a right-hand side."""

    terms: tuple[DiffTerm, ...]
    rhs: GridFunction = dc_field(default_factory=GridFunction.zero)

    def __post_init__(self):
        if not self.terms:
            raise OperatorError("operator needs at least one term")
        # canonical summation order: sorted on a stable key
        object.__setattr__(self, "terms", tuple(sorted(self.terms, key=DiffTerm.sort_key)))

    def max_orders(self) -> tuple[int, int]:
        dx = max((f.dx for t in self.terms for f in t.factors), default=0)
        dt = max((f.dt for t in self.terms for f in t.factors), default=0)
        return dx, dt

    def to_json(self) -> dict:
        return {"terms": [t.to_json() for t in self.terms], "rhs": self.rhs.to_json()}

    @classmethod
    def from_json(cls, obj) -> "OperatorSpec":
        return cls(
            terms=tuple(DiffTerm.from_json(t) for t in obj["terms"]),
            rhs=GridFunction.from_json(obj.get("rhs", {"fn": "zero"})),
        )


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition applied on one grid edge: (operator u)(edge) = target(edge).

    ``terms=None`` means a Dirichlet condition (identity operator).
    """

    edge: str
    target: GridFunction
    terms: tuple[DiffTerm, ...] | None = None

    def __post_init__(self):
        if self.edge not in EDGES:
            raise OperatorError(f"unknown edge {self.edge!r}")
        if self.terms is not None and not self.terms:
            raise OperatorError("boundary operator needs at least one term")
        if self.terms is not None:
            object.__setattr__(
                self, "terms", tuple(sorted(self.terms, key=DiffTerm.sort_key))
            )

    @property
    def is_dirichlet(self) -> bool:
        return self.terms is None

    def operator_terms(self) -> tuple[DiffTerm, ...]:
        return (identity_term(),) if self.terms is None else self.terms

    def to_json(self) -> dict:
        out = {"edge": self.edge, "target": self.target.to_json()}
        if self.terms is None:
            out["kind"] = "dirichlet"
        else:
            out["kind"] = "operator"
            out["terms"] = [t.to_json() for t in self.terms]
        return out

    @classmethod
    def from_json(cls, obj) -> "BoundaryCondition":
        kind = obj.get("kind", "dirichlet")
        terms = None
        if kind == "operator":
            terms = tuple(DiffTerm.from_json(t) for t in obj["terms"])
        elif kind != "dirichlet":
            raise OperatorError(f"unknown boundary kind {kind!r}")
        return cls(edge=obj["edge"], target=GridFunction.from_json(obj["target"]), terms=terms)


@dataclass(frozen=True)
class ProblemSpec:
    """A boundary-value problem bound to a grid, with a penalty weight."""

    grid: GridSpec
    operator: OperatorSpec
    boundary: tuple[BoundaryCondition, ...]
    lam: float = 10.0
    interior_includes_boundary: bool = True

    def __post_init__(self):
        if self.lam <= 0:
            raise OperatorError(f"penalty weight must be positive, got {self.lam}")
        object.__setattr__(self, "boundary", tuple(self.boundary))

    def to_json(self) -> dict:
        g = self.grid
        return {
            "grid": {"x": [g.x_min, g.x_max, g.n_x], "t": [g.t_min, g.t_max, g.n_t]},
            "operator": self.operator.to_json(),
            "boundary": [bc.to_json() for bc in self.boundary],
            "lambda": self.lam,
            "interior_includes_boundary": self.interior_includes_boundary,
        }

    @classmethod
    def from_json(cls, obj) -> "ProblemSpec":
        gx = obj["grid"]["x"]
        gt = obj["grid"]["t"]
        return cls(
            grid=GridSpec(gx[0], gx[1], gt[0], gt[1], n_x=int(gx[2]), n_t=int(gt[2])),
            operator=OperatorSpec.from_json(obj["operator"]),
            boundary=tuple(BoundaryCondition.from_json(b) for b in obj.get("boundary", [])),
            lam=float(obj.get("lambda", 10.0)),
            interior_includes_boundary=bool(obj.get("interior_includes_boundary", True)),
        )


def edge_indices(spec: GridSpec, edge: str) -> np.ndarray:
    """Flattened (row-major, axis 0 = x) indices of one grid edge."""
    if edge == "x_min":
        return np.arange(spec.n_t)
    if edge == "x_max":
        return (spec.n_x - 1) * spec.n_t + np.arange(spec.n_t)
    if edge == "t_min":
        return np.arange(spec.n_x) * spec.n_t
    if edge == "t_max":
        return np.arange(spec.n_x) * spec.n_t + (spec.n_t - 1)
    raise OperatorError(f"unknown edge {edge!r}")


def _factor_values(factor: DiffFactor, field: Field, policy: SchemePolicy) -> np.ndarray:
    out = field
    if factor.dx:
        out = derivative(out, "x", factor.dx, policy)
    if factor.dt:
        out = derivative(out, "t", factor.dt, policy)
    return out.values


def _terms_values(
    terms: tuple[DiffTerm, ...], field: Field, policy: SchemePolicy
) -> np.ndarray:
    spec = field.spec
    total = np.zeros(spec.shape)
    for term in terms:
        prod = np.ones(spec.shape)
        for factor in term.factors:
            prod = prod * _factor_values(factor, field, policy)
        if not term.factors:
            prod = field.values.copy()
        total += term.coefficient_values(spec) * prod**term.power
    return total


def evaluate_operator(op: OperatorSpec, field: Field, policy: SchemePolicy) -> Field:
    """Pointwise values of the (approximate) differential operator on a field."""
    return Field(field.spec, _terms_values(op.terms, field, policy))


def evaluate_boundary(
    bc: BoundaryCondition, field: Field, policy: SchemePolicy
) -> np.ndarray:
    """Residuals (B u - g) over the condition's edge, in edge order."""
    spec = field.spec
    idx = edge_indices(spec, bc.edge)
    bu = _terms_values(bc.operator_terms(), field, policy).ravel()[idx]
    g = bc.target.evaluate(spec).ravel()[idx]
    return bu - g


# ---------------------------------------------------------------------------
# built-in benchmark problems


def wave_problem(n_x: int = 10, n_t: int = 10, lam: float = 10.0) -> ProblemSpec:
    """u_tt - (1/4) u_xx = 0 on [0,1]^2 with sin(pi x) time-slab conditions."""
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=n_x, n_t=n_t)
    op = OperatorSpec(
        terms=(
            DiffTerm(coefficient=1.0, factors=(DiffFactor(dt=2),)),
            DiffTerm(coefficient=-0.25, factors=(DiffFactor(dx=2),)),
        )
    )
    sin_x = GridFunction.sin_scaled("x", math.pi)
    zero = GridFunction.zero()
    bcs = (
        BoundaryCondition("x_min", zero),
        BoundaryCondition("x_max", zero),
        BoundaryCondition("t_min", sin_x),
        BoundaryCondition("t_max", sin_x),
    )
    return ProblemSpec(grid=grid, operator=op, boundary=bcs, lam=lam)


def heat_problem(n_x: int = 10, n_t: int = 10, lam: float = 10.0) -> ProblemSpec:
    """u_t - u_xx = 0 on [-8,8] x [0,10] with sinusoidal boundary data."""
    grid = GridSpec(-8.0, 8.0, 0.0, 10.0, n_x=n_x, n_t=n_t)
    op = OperatorSpec(
        terms=(
            DiffTerm(coefficient=1.0, factors=(DiffFactor(dt=1),)),
            DiffTerm(coefficient=-1.0, factors=(DiffFactor(dx=2),)),
        )
    )
    sin_t = GridFunction.sin_scaled("t", math.pi / 10.0)
    sin_x = GridFunction.sin_scaled("x", math.pi / 8.0)
    bcs = (
        BoundaryCondition("x_min", sin_t),
        BoundaryCondition("x_max", sin_t),
        BoundaryCondition("t_min", sin_x),
    )
    return ProblemSpec(grid=grid, operator=op, boundary=bcs, lam=lam)


def builtin_problem(name: str, n_x: int = 10, n_t: int = 10, lam: float = 10.0) -> ProblemSpec:
    try:
        maker = {"wave": wave_problem, "heat": heat_problem}[name]
    except KeyError:
        raise OperatorError(f"unknown builtin problem {name!r}") from None
    return maker(n_x=n_x, n_t=n_t, lam=lam)


def builtin_problems(n_x: int = 10, n_t: int = 10, lam: float = 10.0) -> dict[str, ProblemSpec]:
    return {
        "wave": wave_problem(n_x, n_t, lam),
        "heat": heat_problem(n_x, n_t, lam),
    }
