import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndde.dde_core import VectorFieldSpec, euler_solve, linear_delay_field, make_grid
from ndde.errors import DomainError, PreconditionError, ValidationError
from ndde.neural_dde import identity_spec, ndde_forward
from ndde.small_delay import (
    INV_E,
    characteristic_roots,
    closed_form_pieces,
    discrete_special_rate,
    extend_field_weakly_nonlinear,
    lambert_w,
    linear_dde_closed_form,
    linear_dde_series,
    measure_attraction,
    smallness_check,
    special_ode_field_linear,
    special_solution_linear,
)


class TestLambertW:
    def test_special_values(self):
        assert lambert_w(0, 0.0) == 0.0
        assert lambert_w(0, math.e) == pytest.approx(1.0, abs=1e-15)
        assert lambert_w(-1, -INV_E) == -1.0
        assert lambert_w(0, -INV_E) == -1.0

    def test_reference_values(self):
        assert lambert_w(0, -0.2) == pytest.approx(-0.259171, abs=1e-6)
        assert lambert_w(-1, -0.2) == pytest.approx(-2.542641, abs=1e-6)

    @settings(max_examples=300, deadline=None)
    @given(x=st.floats(-INV_E, 1e6, allow_nan=False))
    def test_branch0_matches_oracle(self, x):
        w = lambert_w(0, x)
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-14 * max(1.0, abs(x))
        ref = float(mpmath.lambertw(mpmath.mpf(x), 0).real)
        # near the branch point the root is ill-conditioned in x
        assert abs(w - ref) <= 1e-7 + 1e-13 * abs(ref)

    @settings(max_examples=300, deadline=None)
    @given(x=st.floats(-INV_E, -1e-300, allow_nan=False))
    def test_branch_minus1_matches_oracle(self, x):
        w = lambert_w(-1, x)
        assert w <= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-14 * max(1.0, abs(x))
        ref = float(mpmath.lambertw(mpmath.mpf(x), -1).real)
        assert abs(w - ref) <= 1e-7 + 1e-13 * abs(ref)

    def test_near_branch_point(self):
        for eps in (1e-16, 1e-12, 1e-8, 1e-4):
            x = -INV_E + eps
            for b in (0, -1):
                w = lambert_w(b, x)
                assert abs(w * math.exp(w) - x) <= 1e-14

    @pytest.mark.parametrize("branch,x", [(0, -0.5), (-1, 0.1), (-1, 0.0), (1, 0.5),
                                          (0, math.nan), (0, math.inf)])
    def test_domain_errors(self, branch, x):
        with pytest.raises(DomainError):
            lambert_w(branch, x)


class TestCharacteristicRoots:
    def test_zero_coefficient(self):
        r = characteristic_roots(0.0, 0.5)
        assert r.lambda1 == 0.0 and r.lambda2 is None

    def test_reference_case(self):
        r = characteristic_roots(-1.0, 0.3)
        ref = float(mpmath.lambertw(-0.3, 0).real) / 0.3
        assert r.lambda1 == pytest.approx(ref, abs=1e-13)
        assert r.lambda1 == pytest.approx(-1.631341, abs=1e-6)
        assert 1.0 < abs(r.lambda1) < math.e
        assert r.lambda2 < -1 / 0.3
        assert max(r.residuals()) <= 1e-12

    def test_residuals_on_grid(self):
        for K0 in np.linspace(-3, 3, 13):
            for tau in np.linspace(0.01, 1.0, 12):
                if not -INV_E < K0 * tau < INV_E:
                    continue
                r = characteristic_roots(K0, tau)
                assert max(r.residuals()) <= 1e-12 * max(1.0, abs(K0))
                assert -1 / tau < r.lambda1 < 1 / tau
                if r.lambda2 is not None:
                    assert r.lambda2 < -1 / tau

    def test_errors(self):
        with pytest.raises(DomainError):
            characteristic_roots(-2.0, 1.0)
        with pytest.raises(ValidationError):
            characteristic_roots(-1.0, 0.0)


class TestClosedForm:
    def test_history_and_first_interval(self):
        assert linear_dde_closed_form(-1.0, 0.25, 3.0, -0.1) == 3.0
        assert linear_dde_closed_form(-2.0, 1.0, 1.0, 1.0) == -1.0

    def test_third_interval_against_integrator(self):
        exact = linear_dde_closed_form(-1.0, 0.25, 1.0, 0.6)
        traj = euler_solve(linear_delay_field(-1.0, 0.25), 1.0, make_grid(0.6, 2400, 0.25))
        assert abs(traj.final[0] - exact) <= 1e-3
        assert len(closed_form_pieces(-1.0, 0.25, 1.0, 3)[-1]) == 4

    def test_matches_series(self):
        for t in np.linspace(0.0, 2.0, 41):
            assert linear_dde_closed_form(0.7, 0.3, 2.0, t) == pytest.approx(
                linear_dde_series(0.7, 0.3, 2.0, t), rel=1e-12, abs=1e-12)

    def test_continuity_at_breakpoints(self):
        K0, tau = -1.3, 0.4
        pieces = closed_form_pieces(K0, tau, 1.0, 6)
        for k in range(1, 6):
            left = np.polynomial.polynomial.polyval(tau, pieces[k - 1])
            right = pieces[k][0]
            assert abs(left - right) < 1e-12

    def test_errors(self):
        with pytest.raises(ValidationError):
            linear_dde_closed_form(-1.0, 0.25, 1.0, -1.0)


class TestSpecialSolution:
    def test_trivial_cases(self):
        assert special_solution_linear(-1.0, 0.25, 0.0, 0.0, 3.0) == 0.0
        assert special_solution_linear(0.0, 0.25, 0.0, 2.0, 3.0) == 2.0

    def test_reference_value(self):
        lam1 = float(mpmath.lambertw(-0.25, 0).real) / 0.25
        assert lam1 == pytest.approx(-1.429612, abs=1e-6)
        assert special_solution_linear(-1.0, 0.25, 0.5, 1.0, 1.5) == pytest.approx(
            math.exp(lam1), rel=1e-14)

    def test_reduced_ode(self):
        assert special_ode_field_linear(0.0, 0.3) == 0.0
        K0, tau = -1.0, 0.25
        lam1 = special_ode_field_linear(K0, tau)
        assert abs(K0 * math.exp(-lam1 * tau) - lam1) <= 1e-12
        assert abs(lam1) <= abs(K0) * math.e
        errors = []
        for L in (100, 200, 400):
            y = (1.0 + lam1 / L) ** L
            errors.append(abs(y - math.exp(lam1)))
        assert errors[0] / errors[1] == pytest.approx(2.0, abs=0.25)

    def test_discrete_rate_tends_to_lambda1(self):
        lam1 = characteristic_roots(-1.0, 0.25).lambda1
        gaps = [abs(discrete_special_rate(-1.0, 0.25, 0.25 / R) - lam1) for R in (100, 200, 400)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[0] / gaps[1] == pytest.approx(2.0, abs=0.25)


class TestAttraction:
    def test_special_history_stays_on_special_solution(self):
        rep = measure_attraction(-1.0, 0.25, 1.0, 5.0, 20000, init="special")
        assert np.max(rep.gap) <= 1e-10
        assert not rep.rate_reliable

    def test_constant_history(self):
        rep = measure_attraction(-1.0, 0.25, 1.0, 5.0, 20000)
        assert math.isfinite(rep.C_u_estimate)
        assert rep.fitted_rate <= -4.0 * 0.95
        assert rep.envelope_ratio <= 1.05
        assert rep.fitted_rate == pytest.approx(rep.lambda2, rel=0.01)
        assert rep.ybar0_reliable

    def test_positive_coefficient(self):
        rep = measure_attraction(0.5, 0.2, 1.0, 5.0, 5000)
        assert math.isfinite(rep.C_u_estimate)
        assert rep.gap[-1] < rep.gap[: len(rep.gap) // 10].max()

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            measure_attraction(-2.0, 0.5, 1.0, 5.0, 1000)
        with pytest.raises(ValidationError):
            measure_attraction(-1.0, 0.25, 1.0, 5.0, 1000, init="bogus")


class TestSmallness:
    def test_examples(self):
        rep = smallness_check(1.0, 0.3)
        assert rep.ok and rep.margin == pytest.approx(1 - 0.3 * math.e)
        assert smallness_check(5.0, 0.0).margin == 1.0
        assert not smallness_check(1.0, math.pi / 2).ok

    def test_negative_input(self):
        with pytest.raises(ValidationError):
            smallness_check(-1.0, 0.1)


def test_oscillating_special_solutions():
    K0 = -1.0
    tau = math.pi / 2
    T = 2 * tau
    c_true = 0.37
    Rs = (1000, 2000, 4000)
    sols = []
    for R in Rs:
        L = 2 * R
        grid = make_grid(T, L, tau)
        hist = lambda s: [math.cos(K0 * s) + c_true * math.sin(K0 * s)]  # noqa: E731
        ys = euler_solve(linear_delay_field(K0, tau), hist, grid).forward_states()[:, 0]
        sols.append(ys[:: L // 20])
    y1, y2, y4 = sols
    # two Richardson sweeps remove the first- and second-order error terms
    r1, r2 = 2 * y2 - y1, 2 * y4 - y2
    extrapolated = (4 * r2 - r1) / 3
    t = np.linspace(0, T, 21)
    basis_cos, basis_sin = np.cos(K0 * t), np.sin(K0 * t)
    c_fit = float(np.dot(basis_sin, extrapolated - basis_cos) / np.dot(basis_sin, basis_sin))
    residual = np.max(np.abs(extrapolated - basis_cos - c_fit * basis_sin))
    assert residual < 1e-6
    assert c_fit == pytest.approx(c_true, abs=1e-6)
    assert not smallness_check(abs(K0), tau).ok


class TestExtension:
    def test_autonomous_unchanged(self):
        f = linear_delay_field(-1.0, 0.5)
        g = extend_field_weakly_nonlinear(f, 1.0)
        assert g.K == f.K and g.kernel is f.kernel

    def test_time_drift_clamped(self):
        def rhs(t, view):
            return np.array([0.5 * t])

        f = VectorFieldSpec(rhs=rhs, m=1, tau=0.0, K=0.0, A=0.5)
        g = extend_field_weakly_nonlinear(f, 1.0)
        assert g.rhs(2.0, None)[0] == f.rhs(1.0, None)[0]
        assert g.rhs(-1.0, None)[0] == 0.0
        assert g.rhs(0.4, None)[0] == f.rhs(0.4, None)[0]

    def test_forward_pass_identical(self):
        def rhs(t, view):
            return np.tanh(view(-0.2)) * math.sin(3 * t)

        f = VectorFieldSpec(rhs=rhs, m=1, tau=0.2, K=1.0, A=0.0)
        g = extend_field_weakly_nonlinear(f, 1.0)
        for x in np.linspace(-2, 2, 9):
            assert np.array_equal(ndde_forward(identity_spec(f, 1.0), [x], 50),
                                  ndde_forward(identity_spec(g, 1.0), [x], 50))


def test_boundary_flagged_unreliable():
    tau = 0.5
    near = -math.exp(-1.0) / tau * (1 - 1e-8)
    assert not characteristic_roots(near, tau).reliable
    assert characteristic_roots(-1.0, 0.25).reliable
    assert not smallness_check(1.0, math.exp(-1.0) * (1 - 1e-8)).reliable
    rep = smallness_check(1.0, 0.25)
    assert rep.ok and rep.reliable
