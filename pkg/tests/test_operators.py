import numpy as np
import pytest

from pdeopt.grid import Field, GridSpec, random_field
from pdeopt.operators import (
    BoundaryCondition,
    DiffFactor,
    DiffTerm,
    GridFunction,
    OperatorError,
    OperatorSpec,
    ProblemSpec,
    builtin_problems,
    edge_indices,
    evaluate_boundary,
    evaluate_operator,
    heat_problem,
    wave_problem,
)
from pdeopt.reference import wave_exact
from pdeopt.stencil import SchemePolicy

POLICY = SchemePolicy(2, 2)


def x_ramp_field(spec):
    x, _ = spec.meshgrid()
    return Field(spec, x)


class TestEvaluateOperator:
    def test_first_derivative_of_linear(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=9, n_t=6)
        op = OperatorSpec(terms=(DiffTerm(1.0, (DiffFactor(dx=1),)),))
        out = evaluate_operator(op, x_ramp_field(spec), POLICY)
        np.testing.assert_allclose(out.values, 1.0, atol=1e-12)

    def test_power_encoding(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=9, n_t=6)
        op = OperatorSpec(terms=(DiffTerm(1.0, (DiffFactor(dx=1),), power=2),))
        out = evaluate_operator(op, x_ramp_field(spec), POLICY)
        np.testing.assert_allclose(out.values, 1.0, atol=1e-12)

    def test_wave_residual_shrinks_under_refinement(self):
        # substitute the closed-form wave solution; interior residual is O(h^2)
        op = wave_problem().operator
        maxres = {}
        for n in (20, 40):
            spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=n, n_t=n)
            x, t = spec.meshgrid()
            f = Field(spec, wave_exact(x, t))
            res = evaluate_operator(op, f, POLICY)
            maxres[n] = np.max(np.abs(res.values[2:-2, 2:-2]))
        assert maxres[40] < maxres[20]
        assert 2.5 <= maxres[20] / maxres[40] <= 6.0

    def test_variable_coefficient(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=7, n_t=7)
        coeff = GridFunction.sin_scaled("t", 2.0)
        op = OperatorSpec(terms=(DiffTerm(coeff, (DiffFactor(dx=1),)),))
        out = evaluate_operator(op, x_ramp_field(spec), POLICY)
        _, t = spec.meshgrid()
        np.testing.assert_allclose(out.values, np.sin(2.0 * t), atol=1e-12)

    def test_mixed_derivative_factor(self):
        # u = x * t so d2u/dxdt = 1
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=8, n_t=8)
        x, t = spec.meshgrid()
        f = Field(spec, x * t)
        op = OperatorSpec(terms=(DiffTerm(1.0, (DiffFactor(dx=1, dt=1),)),))
        out = evaluate_operator(op, f, POLICY)
        np.testing.assert_allclose(out.values, 1.0, atol=1e-10)

    def test_linearity_for_power_one(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=8, n_t=9)
        rng = np.random.default_rng(2)
        u = Field(spec, rng.normal(size=spec.shape))
        v = Field(spec, rng.normal(size=spec.shape))
        op = wave_problem().operator
        combo = Field(spec, 1.5 * u.values + 0.5 * v.values)
        lhs = evaluate_operator(op, combo, POLICY).values
        rhs = (
            1.5 * evaluate_operator(op, u, POLICY).values
            + 0.5 * evaluate_operator(op, v, POLICY).values
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)

    def test_term_order_canonicalized(self):
        t1 = DiffTerm(1.0, (DiffFactor(dt=2),))
        t2 = DiffTerm(-0.25, (DiffFactor(dx=2),))
        a = OperatorSpec(terms=(t1, t2))
        b = OperatorSpec(terms=(t2, t1))
        assert a.terms == b.terms
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=7, n_t=7)
        f = random_field(spec, seed=9)
        assert np.array_equal(
            evaluate_operator(a, f, POLICY).values, evaluate_operator(b, f, POLICY).values
        )


class TestEvaluateBoundary:
    def test_dirichlet_zero(self):
        prob = wave_problem(8, 8)
        f = Field(prob.grid, np.zeros(prob.grid.shape))
        res = evaluate_boundary(prob.boundary[0], f, POLICY)
        np.testing.assert_array_equal(res, 0.0)

    def test_exact_solution_satisfies_dirichlet_rows(self):
        prob = wave_problem(20, 20)
        x, t = prob.grid.meshgrid()
        f = Field(prob.grid, wave_exact(x, t))
        for bc in prob.boundary:
            res = evaluate_boundary(bc, f, POLICY)
            assert np.max(np.abs(res)) <= 1e-12

    def test_neumann_on_constant_field(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=8, n_t=8)
        f = Field(spec, np.full(spec.shape, 3.7))
        bc = BoundaryCondition(
            "x_min",
            GridFunction.zero(),
            terms=(DiffTerm(1.0, (DiffFactor(dx=1),)),),
        )
        res = evaluate_boundary(bc, f, POLICY)
        np.testing.assert_allclose(res, 0.0, atol=1e-12)

    def test_edge_indices_cover_boundary(self):
        spec = GridSpec(0.0, 1.0, 0.0, 1.0, n_x=5, n_t=6)
        all_idx = np.concatenate([edge_indices(spec, e) for e in ("x_min", "x_max", "t_min", "t_max")])
        mask = np.zeros(spec.n_points, dtype=bool)
        mask[all_idx] = True
        grid_mask = mask.reshape(spec.shape)
        assert grid_mask[0, :].all() and grid_mask[-1, :].all()
        assert grid_mask[:, 0].all() and grid_mask[:, -1].all()
        assert not grid_mask[1:-1, 1:-1].any()


class TestBuiltinProblems:
    def test_wave_domain(self):
        g = builtin_problems()["wave"].grid
        assert (g.x_min, g.x_max, g.t_min, g.t_max) == (0.0, 1.0, 0.0, 1.0)

    def test_heat_domain(self):
        g = builtin_problems()["heat"].grid
        assert (g.x_min, g.x_max, g.t_min, g.t_max) == (-8.0, 8.0, 0.0, 10.0)

    def test_heat_initial_condition_value(self):
        prob = heat_problem(5, 5)  # x = -8, -4, 0, 4, 8
        bc = next(b for b in prob.boundary if b.edge == "t_min")
        target = bc.target.evaluate(prob.grid)
        assert target[3, 0] == pytest.approx(1.0)  # sin(pi * 4 / 8)


class TestJsonRoundTrip:
    def test_problem_round_trip_bit_identical_evaluation(self):
        for name, prob in builtin_problems(9, 8).items():
            parsed = ProblemSpec.from_json(prob.to_json())
            f = random_field(prob.grid, seed=11)
            a = evaluate_operator(prob.operator, f, POLICY).values
            b = evaluate_operator(parsed.operator, f, POLICY).values
            assert np.array_equal(a, b), name
            for bc_a, bc_b in zip(prob.boundary, parsed.boundary):
                assert np.array_equal(
                    evaluate_boundary(bc_a, f, POLICY), evaluate_boundary(bc_b, f, POLICY)
                )

    def test_operator_with_power_round_trip(self):
        op = OperatorSpec(
            terms=(
                DiffTerm(2.0, (DiffFactor(dx=1), DiffFactor(dt=1)), power=2),
                DiffTerm(GridFunction.sin_scaled("x", 3.0), (DiffFactor(dx=2),)),
            )
        )
        parsed = OperatorSpec.from_json(op.to_json())
        assert parsed == op

    def test_factor_json_forms(self):
        assert DiffFactor.parse(["x", 2]) == DiffFactor(dx=2)
        assert DiffFactor.parse({"x": 1, "t": 1}) == DiffFactor(dx=1, dt=1)


class TestValidation:
    def test_empty_terms_rejected(self):
        with pytest.raises(OperatorError):
            OperatorSpec(terms=())

    def test_bad_power(self):
        with pytest.raises(OperatorError):
            DiffTerm(1.0, (DiffFactor(dx=1),), power=0)

    def test_bad_edge(self):
        with pytest.raises(OperatorError):
            BoundaryCondition("left", GridFunction.zero())

    def test_bad_lambda(self):
        prob = wave_problem()
        with pytest.raises(OperatorError):
            ProblemSpec(prob.grid, prob.operator, prob.boundary, lam=0.0)

    def test_unknown_grid_function(self):
        with pytest.raises(OperatorError):
            GridFunction.make("tanh_bump")
