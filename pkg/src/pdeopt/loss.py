"""Penalized sum-of-squares residual objective and its analytic gradient.

The objective is

    sum over grid points of (L u - f)^2  +  lam * sum over boundary points
    of (B u - g)^2

where L and B are finite-difference approximations of the differential and
boundary operators. Derivative factors are compiled once per
(problem, policy, grid) into sparse matrices acting on the flattened field,
so repeated loss/gradient evaluations inside the optimizer are cheap.

The gradient is exact for the discrete objective, including power terms,
via the chain rule through the stencil weights. A central finite-difference
gradient is provided as an independent test oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Field, GridError
from .operators import DiffTerm, ProblemSpec, edge_indices
from .stencil import SchemePolicy, derivative_matrix_1d


@dataclass(frozen=True)
class LossBreakdown:
    """Interior and boundary residual sums; total = interior + lam * boundary."""

    interior: float
    boundary: float
    total: float

    def to_json(self) -> dict:
        return {"interior": self.interior, "boundary": self.boundary, "total": self.total}


class _CompiledTerm:
    """One operator term with factor matrices acting on the flattened field."""

    __slots__ = ("coeff", "mats", "mats_t", "power")

    def __init__(self, coeff: np.ndarray, mats: list[sp.csr_matrix], power: int):
        self.coeff = coeff
        self.mats = mats
        self.mats_t = [m.T.tocsr() if m is not None else None for m in mats]
        self.power = power

    def factor_values(self, u: np.ndarray) -> list[np.ndarray]:
        return [u if m is None else m @ u for m in self.mats]

    def value(self, factors: list[np.ndarray]) -> np.ndarray:
        prod = factors[0].copy()
        for f in factors[1:]:
            prod *= f
        if self.power == 1:
            return self.coeff * prod, prod
        return self.coeff * prod**self.power, prod

    def add_gradient(
        self, grad: np.ndarray, weight: np.ndarray, factors: list[np.ndarray], prod: np.ndarray
    ) -> None:
        """Accumulate d(sum weight * term) / du into grad."""
        base = self.coeff * self.power * weight
        if self.power > 1:
            base = base * prod ** (self.power - 1)
        k = len(factors)
        if k == 1:
            w = base
            mt = self.mats_t[0]
            grad += w if mt is None else mt @ w
            return
        # leave-one-out products via prefix/suffix accumulation
        prefix = np.ones_like(prod)
        suffix = [None] * k
        acc = np.ones_like(prod)
        for j in range(k - 1, -1, -1):
            suffix[j] = acc
            acc = acc * factors[j]
        for j in range(k):
            w = base * prefix * suffix[j]
            mt = self.mats_t[j]
            grad += w if mt is None else mt @ w
            prefix = prefix * factors[j]


class _CompiledResidual:
    """A sum of compiled terms minus a target, optionally restricted/masked."""

    __slots__ = ("terms", "target", "indices", "mask")

    def __init__(self, terms, target, indices=None, mask=None):
        self.terms = terms
        self.target = target
        self.indices = indices
        self.mask = mask

    def evaluate(self, u: np.ndarray):
        value = np.zeros_like(u)
        cache = []
        for term in self.terms:
            factors = term.factor_values(u)
            tval, prod = term.value(factors)
            value += tval
            cache.append((factors, prod))
        if self.indices is None:
            residual = value - self.target
            if self.mask is not None:
                residual = residual * self.mask
        else:
            residual = value[self.indices] - self.target
        return residual, cache

    def add_gradient(self, grad: np.ndarray, scale: float, residual, cache, n: int) -> None:
        weight = np.zeros(n)
        if self.indices is None:
            weight[:] = 2.0 * scale * residual
            if self.mask is not None:
                weight *= self.mask
        else:
            weight[self.indices] = 2.0 * scale * residual
        for term, (factors, prod) in zip(self.terms, cache):
            term.add_gradient(grad, weight, factors, prod)


class CompiledObjective:
    """The discrete objective of one problem under one scheme policy."""

    def __init__(self, problem: ProblemSpec, policy: SchemePolicy):
        self.problem = problem
        self.policy = policy
        spec = problem.grid
        self.n = spec.n_points
        mx = derivative_matrix_1d(spec.n_x, spec.h_x, policy)
        mt = derivative_matrix_1d(spec.n_t, spec.h_t, policy)
        ix = sp.identity(spec.n_x, format="csr")
        it = sp.identity(spec.n_t, format="csr")
        cache: dict[tuple[int, int], sp.csr_matrix | None] = {(0, 0): None}

        def factor_matrix(dx: int, dt: int):
            key = (dx, dt)
            if key not in cache:
                ax = ix
                for _ in range(dx):
                    ax = mx @ ax
                at = it
                for _ in range(dt):
                    at = mt @ at
                cache[key] = sp.kron(ax, at, format="csr")
            return cache[key]

        def compile_terms(terms: tuple[DiffTerm, ...]) -> list[_CompiledTerm]:
            out = []
            for term in terms:
                coeff = term.coefficient_values(spec).ravel()
                mats = [factor_matrix(f.dx, f.dt) for f in term.factors]
                if not mats:
                    mats = [None]
                out.append(_CompiledTerm(coeff, mats, term.power))
            return out

        mask = None
        if not problem.interior_includes_boundary:
            w = policy.boundary_width
            m2 = np.zeros(spec.shape)
            m2[w : spec.n_x - w, w : spec.n_t - w] = 1.0
            mask = m2.ravel()
        self.interior = _CompiledResidual(
            compile_terms(problem.operator.terms),
            problem.operator.rhs.evaluate(spec).ravel(),
            mask=mask,
        )
        self.boundary = []
        for bc in problem.boundary:
            idx = edge_indices(spec, bc.edge)
            target = bc.target.evaluate(spec).ravel()[idx]
            self.boundary.append(
                _CompiledResidual(compile_terms(bc.operator_terms()), target, indices=idx)
            )

    def _check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float).ravel()
        if u.size != self.n:
            raise GridError(f"expected {self.n} values, got {u.size}")
        return u

    def loss(self, u: np.ndarray) -> LossBreakdown:
        u = self._check(u)
        r, _ = self.interior.evaluate(u)
        interior = float(r @ r)
        boundary = 0.0
        for res in self.boundary:
            rb, _ = res.evaluate(u)
            boundary += float(rb @ rb)
        return LossBreakdown(interior, boundary, interior + self.problem.lam * boundary)

    def loss_and_grad(self, u: np.ndarray) -> tuple[LossBreakdown, np.ndarray]:
        u = self._check(u)
        grad = np.zeros(self.n)
        r, cache = self.interior.evaluate(u)
        interior = float(r @ r)
        self.interior.add_gradient(grad, 1.0, r, cache, self.n)
        boundary = 0.0
        lam = self.problem.lam
        for res in self.boundary:
            rb, bcache = res.evaluate(u)
            boundary += float(rb @ rb)
            res.add_gradient(grad, lam, rb, bcache, self.n)
        bd = LossBreakdown(interior, boundary, interior + lam * boundary)
        return bd, grad


def loss(problem: ProblemSpec, field: Field, policy: SchemePolicy) -> LossBreakdown:
    """Objective value of a field for a problem under a scheme policy."""
    if field.spec.shape != problem.grid.shape:
        raise GridError("field shape does not match problem grid")
    return CompiledObjective(problem, policy).loss(field.values.ravel())


def gradient(problem: ProblemSpec, field: Field, policy: SchemePolicy) -> Field:
    """Exact gradient of the total objective with respect to the field values."""
    if field.spec.shape != problem.grid.shape:
        raise GridError("field shape does not match problem grid")
    _, g = CompiledObjective(problem, policy).loss_and_grad(field.values.ravel())
    return Field(field.spec, g.reshape(field.spec.shape))


def finite_difference_gradient(
    problem: ProblemSpec, field: Field, policy: SchemePolicy, eps: float = 1e-6
) -> Field:
    """Central finite-difference gradient; independent oracle for tests."""
    obj = CompiledObjective(problem, policy)
    u = field.values.ravel().copy()
    g = np.zeros_like(u)
    for i in range(u.size):
        ui = u[i]
        u[i] = ui + eps
        fp = obj.loss(u).total
        u[i] = ui - eps
        fm = obj.loss(u).total
        u[i] = ui
        g[i] = (fp - fm) / (2.0 * eps)
    return Field(field.spec, g.reshape(field.spec.shape))
