import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndde.dde_core import euler_solve, linear_delay_field, make_grid
from ndde.errors import PreconditionError, ValidationError
from ndde.linalg import inf_norm, null_vector, rank, rref
from ndde.morse import (
    classify_critical_point,
    estimate_C2,
    normal_form_eval,
    rank_deficient_witness,
    separation_constants,
)

HAND = dict(K=1.0, A=0.0, T=1.0, M=1.0, r0=1.0, r1=0.25, eps=0.1, w=1.0, w_tilde=1.0, C2=0.5)


class TestNormalForm:
    def test_examples(self):
        assert normal_form_eval(0.0, 0, 1, [0.3]) == pytest.approx(0.09)
        assert normal_form_eval(2.5, 1, 3, np.zeros(3)) == 2.5
        assert normal_form_eval(1.0, 1, 2, [0.5, 0.5]) == 1.0

    def test_minimum_on_ball(self):
        rng = np.random.default_rng(0)
        r0, n, psi_p = 0.7, 3, 0.4
        inner = rng.normal(size=(1000, n))
        inner *= (r0 * rng.uniform(size=(1000, 1)) ** (1 / n)) / np.linalg.norm(inner, axis=1,
                                                                                  keepdims=True)
        sphere = rng.normal(size=(1000, n))
        sphere *= r0 / np.linalg.norm(sphere, axis=1, keepdims=True)
        inside = [normal_form_eval(psi_p, 0, n, u) for u in inner]
        border = [normal_form_eval(psi_p, 0, n, u) for u in sphere]
        assert min(inside) >= psi_p
        assert np.allclose(border, psi_p + r0 ** 2, atol=1e-14)
        assert max(inside) <= psi_p + r0 ** 2 + 1e-14

    def test_errors(self):
        with pytest.raises(ValidationError):
            normal_form_eval(0.0, 3, 2, [0.0, 0.0])
        with pytest.raises(ValidationError):
            normal_form_eval(0.0, 0, 2, [0.0])


class TestClassify:
    @pytest.mark.parametrize("h", [1e-3, 1e-4])
    def test_canonical_quadratics(self, h):
        rep = classify_critical_point(lambda x: x[0] ** 2, [0.0], h)
        assert (rep.index, rep.nondegenerate, rep.kind) == (0, True, "minimum")
        rep = classify_critical_point(lambda x: -(x[0] ** 2 + x[1] ** 2), [0.0, 0.0], h)
        assert (rep.index, rep.kind) == (2, "maximum")
        rep = classify_critical_point(lambda x: x[0] ** 2 - x[1] ** 2, [0.0, 0.0], h)
        assert (rep.index, rep.kind) == (1, "saddle")
        assert rep.hessian_eigen_signs == (-1, 1)

    def test_not_critical_and_degenerate(self):
        rep = classify_critical_point(lambda x: x[0], [0.0])
        assert not rep.is_critical and rep.kind == "not critical"
        rep = classify_critical_point(lambda x: x[0] ** 4, [0.0], r0=0.5)
        assert rep.is_critical and not rep.nondegenerate and rep.kind == "degenerate"
        assert rep.r0 == 0.5

    def test_shifted_quadmin(self):
        p = np.array([0.3, -1.2, 2.0])
        rep = classify_critical_point(lambda x: float(np.sum((x - p) ** 2)), p)
        assert rep.index == 0 and rep.nondegenerate
        assert np.allclose(rep.eigenvalues, 2.0, atol=1e-4)


class TestSeparationConstants:
    def test_hand_example(self):
        c = separation_constants(**HAND)
        assert c.C1 == pytest.approx(math.e, rel=1e-15)
        assert c.delta_star == pytest.approx(0.4)
        assert c.kappa == pytest.approx(0.4 / math.exp(math.e), rel=1e-14)
        assert c.beta == pytest.approx(math.log(1.0 / c.kappa), rel=1e-14)
        assert c.tau1 == pytest.approx(c.kappa / (2 * math.e * c.beta), rel=1e-14)
        assert c.tau3 == pytest.approx(1.0 / math.log(2.5), rel=1e-14)
        assert c.tau0 == c.tau1 and c.binding == "tau1"
        assert c.tau0 < 1 / math.e
        assert c.smallness_product < 1.0
        assert c.delta1 == pytest.approx(c.C1 * c.beta * c.tau0)
        assert c.delta2 == pytest.approx(0.5 * math.exp(-c.beta))
        assert c.kappa <= HAND["r1"] and c.beta >= 0 and c.delta_star > 0

    def test_independent_recomputation(self):
        K, A, T, M, r0, r1, eps, w, wt, C2 = (0.7, 0.2, 2.0, 1.5, 1.2, 0.3, 0.2, 1.0, 2.0, 0.9)
        c = separation_constants(K, A, T, M, r0, r1, eps, w, wt, C2)
        ds = (r0 * r0 - 2 * eps) / 2
        kappa = min(ds / (wt * math.exp(K * math.e * T)), r1)
        beta = math.log(2 * C2 / kappa)
        C1 = (K * M + A) * math.exp(K * T)
        tau3 = T / math.log(2 * C2 / (r0 * r0 - 2 * eps - ds))
        tau0 = min(kappa / (2 * C1 * beta), 1 / (K * math.e), T / beta, tau3)
        assert c.tau0 == pytest.approx(tau0, rel=1e-14)
        assert c.inputs["w_tilde"] == 2.0

    def test_monotone_in_K(self):
        prev = math.inf
        for K in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
            t0 = separation_constants(**{**HAND, "K": K}).tau0
            assert t0 < prev
            prev = t0

    def test_eps_limit_degenerates(self):
        vals = []
        for gap in (1e-2, 1e-4, 1e-6):
            eps = (1.0 - gap) / 2
            c = separation_constants(**{**HAND, "eps": eps})
            vals.append((c.delta_star, c.tau3))
        assert vals[0][0] > vals[1][0] > vals[2][0] > 0
        assert vals[0][1] > vals[1][1] > vals[2][1] > 0

    def test_degenerate_tau3_is_infinite(self):
        c = separation_constants(**{**HAND, "C2": 0.125, "r1": 0.25})
        assert math.isinf(c.tau3)
        assert json.loads(c.to_json())["tau3"] == "inf"

    @pytest.mark.parametrize("K", np.linspace(0.05, 10.0, 20))
    def test_smallness_on_grid(self, K):
        for eps in np.linspace(0.0, 0.49, 20):
            c = separation_constants(**{**HAND, "K": K, "eps": eps})
            assert K * c.tau0 * math.e <= 1.0
            if c.binding != "1/(Ke)":
                assert K * c.tau0 * math.e < 1.0

    def test_errors(self):
        with pytest.raises(PreconditionError):
            separation_constants(**{**HAND, "eps": 0.5})
        with pytest.raises(PreconditionError):
            separation_constants(**{**HAND, "C2": 0.1})
        with pytest.raises(PreconditionError):
            separation_constants(**{**HAND, "K": 0.0})
        with pytest.raises(ValidationError):
            separation_constants(**{**HAND, "T": math.nan})

    def test_map_displacement_bound(self):
        K, M = 1.0, 1.0
        c = separation_constants(**{**HAND, "K": K, "M": M})
        tau = c.tau0
        t_star = c.beta * tau
        rng = np.random.default_rng(3)
        R = 20
        L = max(1, round(t_star / tau * R))
        grid = make_grid(L * tau / R, L, tau)
        for y1 in rng.uniform(-M, M, 20):
            traj = euler_solve(linear_delay_field(-K, tau), y1, grid)
            moved = np.max(np.abs(traj.forward_states() - y1))
            assert moved <= c.delta1 + 10 * grid.delta

    def test_estimate_C2_floor(self):
        assert estimate_C2(-1.0, 0.25, 10.0, [1.0], 2.0, 800) == 5.0
        big = estimate_C2(-1.0, 0.25, 0.01, [1.0, -2.0], 2.0, 800)
        assert big > 0.005


class TestWitness:
    def test_rank_one(self):
        s = rank_deficient_witness([[1.0, 1.0], [1.0, 1.0]], [0.0, 0.0], 1.0)
        assert abs(abs(s[0]) - 1 / math.sqrt(2)) < 1e-15 and s[0] == pytest.approx(-s[1])

    def test_full_rank(self):
        assert rank_deficient_witness(np.eye(3), np.zeros(3), 1.0) is None

    def test_zero_matrix(self):
        p = np.array([1.0, 0.0])
        s = rank_deficient_witness(np.zeros((2, 2)), p, 2.0)
        assert np.linalg.norm(s - p) == pytest.approx(2.0, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_random_deficient(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        k = int(rng.integers(0, n))
        W = rng.normal(size=(n, k)) @ rng.normal(size=(k, n)) if k else np.zeros((n, n))
        p = rng.normal(size=n)
        r0 = float(rng.uniform(0.05, 5.0))
        s = rank_deficient_witness(W, p, r0)
        assert s is not None
        assert np.max(np.abs(W @ s - W @ p)) <= 1e-10
        assert abs(np.linalg.norm(s - p) - r0) <= 1e-12


class TestLinalg:
    def test_inf_norm(self):
        assert inf_norm([[1, -2], [3, 0.5]]) == 3.5

    def test_rref_and_rank(self):
        R, pivots = rref([[2.0, 4.0], [1.0, 2.0]])
        assert pivots == [0] and np.allclose(R[0], [1.0, 2.0])
        assert rank(np.eye(4)) == 4 and rank(np.zeros((3, 3))) == 0
        assert rank([[1.0, 0.0], [0.0, 1e-15]]) == 1

    def test_null_vector(self):
        x = null_vector([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        assert np.allclose(np.array([[1.0, 2.0, 3.0]]) @ x, 0.0)
        assert null_vector(np.eye(2)) is None

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_rank_matches_numpy(self, seed):
        rng = np.random.default_rng(seed)
        n, m = (int(v) for v in rng.integers(1, 6, 2))
        k = int(rng.integers(0, min(n, m) + 1))
        M = rng.normal(size=(n, k)) @ rng.normal(size=(k, m))
        assert rank(M) == np.linalg.matrix_rank(M)
