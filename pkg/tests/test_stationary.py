import warnings

import numpy as np
import pytest

from mg1cr import MG1Model
from mg1cr.cr import cr_solve_gmin
from mg1cr.exceptions import (
    DegenerateBoundaryError,
    InvalidArgumentError,
    PreconditionError,
    TruncationWarning,
)
from mg1cr.stationary import (
    StationaryResult,
    boundary_pi0,
    drift,
    group_inverse,
    is_irreducible,
    queue_metrics,
    star_matrices,
    stationary_levels,
    truncated_chain_residual,
)
from models import random_ergodic_model
from oracles import dense_chain, dense_stationary, horner_star


def solve_all(model, **kw):
    rep = drift(model)
    g = cr_solve_gmin(model, 1e-12)[0].g
    pi0 = boundary_pi0(model, g, rep)
    return g, pi0, stationary_levels(model, g, pi0, **kw)


class TestDrift:
    def test_s1(self, s1):
        rep = drift(s1)
        assert rep.alpha == pytest.approx([1.0])
        assert rep.varrho == pytest.approx(-0.3)
        assert rep.ergodic

    def test_null_recurrent(self):
        rep = drift(MG1Model.qbd(0.5, 0.0, 0.5, 0.5))
        assert rep.varrho == pytest.approx(0.0, abs=1e-15) and not rep.ergodic

    def test_doubly_stochastic(self):
        a = np.array([[[0.2, 0.1], [0.1, 0.2]], [[0.1, 0.3], [0.3, 0.1]], [[0.2, 0.1], [0.1, 0.2]]])
        model = MG1Model.from_blocks(a, [a.sum(axis=0)])
        assert np.allclose(drift(model).alpha, [0.5, 0.5])

    def test_reducible(self):
        a = np.array([np.diag([0.5, 0.5]), np.zeros((2, 2)), np.diag([0.5, 0.5])])
        model = MG1Model.from_blocks(a, [np.eye(2) * 0.5, np.eye(2) * 0.5])
        with pytest.raises(PreconditionError, match="reducible"):
            drift(model)

    def test_irreducible_pattern(self):
        assert is_irreducible([[0, 1], [1, 0]])
        assert not is_irreducible([[1, 0], [0, 1]])


class TestStar:
    def test_zero_g(self, s1):
        a_star, b_star = star_matrices(s1, [[0.0]])
        assert np.allclose(a_star.coeffs.ravel(), [0.1, 0.3])
        assert np.allclose(b_star.coeffs.ravel(), [0.7, 0.3])

    def test_against_powers(self):
        model = random_ergodic_model(np.random.default_rng(2), 2, 6)
        g = cr_solve_gmin(model)[0].g
        a_star, b_star = star_matrices(model, g)
        assert np.allclose(a_star.coeffs, horner_star(model.a.coeffs[1:], g), atol=1e-12)
        assert np.allclose(b_star.coeffs, horner_star(model.b.coeffs, g), atol=1e-12)


class TestGroupInverse:
    def test_zero(self):
        assert np.allclose(group_inverse([[0.0]], [1.0]), 0.0)

    def test_swap(self):
        s = np.eye(2) - np.array([[0.0, 1.0], [1.0, 0.0]])
        expect = np.array([[0.25, -0.25], [-0.25, 0.25]])
        assert np.allclose(group_inverse(s, [0.5, 0.5]), expect, atol=1e-14)

    def test_identities(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = rng.random((3, 3)) + 0.05
            a /= a.sum(axis=1, keepdims=True)
            w, v = np.linalg.eig(a.T)
            alpha = np.real(v[:, np.argmin(abs(w - 1))])
            alpha /= alpha.sum()
            s = np.eye(3) - a
            x = group_inverse(s, alpha)
            assert np.abs(s @ x @ s - s).max() < 1e-9
            assert np.abs(x @ s @ x - x).max() < 1e-9
            assert np.abs(s @ x - x @ s).max() < 1e-9


class TestBoundary:
    def test_s1(self, s1):
        assert boundary_pi0(s1, [[1.0]], drift(s1)) == pytest.approx([0.5])

    def test_scalar_closed_form(self):
        # B = A_0 + A_1 + ... so I - B = 0 at M=1: pi0 = -varrho / (b - varrho).
        model = MG1Model.from_blocks([[[0.5]], [[0.2]], [[0.2]], [[0.1]]],
                                     [[[0.6]], [[0.3]], [[0.1]]])
        rep = drift(model)
        g = cr_solve_gmin(model)[0].g
        expect = -rep.varrho / (rep.b_vec[0] - rep.varrho)
        assert boundary_pi0(model, g, rep)[0] == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_dense_chain(self, seed):
        model = random_ergodic_model(np.random.default_rng(seed), 3, 4, max_drift=-0.1)
        _, pi0, _ = solve_all(model)
        dense = dense_stationary(model, 200)
        assert np.abs(pi0 - dense[0]).max() <= 1e-6

    def test_nonergodic(self):
        model = MG1Model.qbd(0.3, 0.1, 0.6, 0.4)
        with pytest.raises(PreconditionError):
            boundary_pi0(model, [[0.5]], drift(model))

    def test_degenerate(self):
        # B*_0 = I has a two-dimensional fixed space.
        a = np.array([[[0.3, 0.3], [0.3, 0.3]], [[0.1, 0.0], [0.0, 0.1]], [[0.15, 0.15], [0.15, 0.15]]])
        model = MG1Model.from_blocks(a, [np.eye(2)])
        rep = drift(model)
        g = cr_solve_gmin(model)[0].g
        with pytest.raises(DegenerateBoundaryError):
            boundary_pi0(model, g, rep)


class TestLevels:
    def test_s1_geometric(self, s1):
        _, _, st = solve_all(s1)
        k = np.arange(10)
        assert np.allclose(st.level_mass[:10], 0.5 ** (k + 1), atol=1e-12)
        assert st.pi_levels[0, 0] * 0.3 == pytest.approx(st.pi_levels[1, 0] * 0.6)
        assert st.level_mass.sum() == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("seed", range(4))
    def test_residual_random_m2(self, seed):
        model = random_ergodic_model(np.random.default_rng(100 + seed), 2, 5, max_drift=-0.1)
        _, _, st = solve_all(model, tail_tol=1e-14)
        k = min(len(st.pi_levels), 201)
        # Dense residual against the truncated matrix, entrywise.
        p = dense_chain(model, k - 1)
        pi = st.pi_levels[:k].ravel()
        assert np.abs(pi @ p - pi).max() < 1e-7
        assert st.residual < 1e-7

    def test_matches_dense_levels(self, fixture_models):
        for name, model in fixture_models.items():
            _, _, st = solve_all(model)
            dense = dense_stationary(model, 200)
            k = min(30, len(st.pi_levels))
            assert np.abs(st.pi_levels[:k] - dense[:k]).max() < 1e-8, name

    def test_k_max_warning(self):
        model = MG1Model.qbd(0.3, 0.41, 0.29, 0.71)
        g = cr_solve_gmin(model)[0].g
        pi0 = boundary_pi0(model, g, drift(model))
        with pytest.warns(TruncationWarning):
            st = stationary_levels(model, g, pi0, tail_tol=1e-12, k_max=20)
        assert st.truncated and st.truncation == 20
        assert st.tail_mass_bound > 1e-3

    def test_bad_args(self, s1):
        with pytest.raises(InvalidArgumentError):
            stationary_levels(s1, [[1.0]], [0.5], tail_tol=-1)
        with pytest.raises(InvalidArgumentError):
            stationary_levels(s1, [[1.0]], [0.5], k_max=0)

    def test_residual_helper_zero_for_exact(self, s1):
        pi = 0.5 ** (np.arange(60) + 1.0)
        assert truncated_chain_residual(s1, pi[:, None]) < 1e-15


class TestMetrics:
    def test_s1(self, s1):
        _, _, st = solve_all(s1)
        met = queue_metrics(st)
        assert met.prob_busy == pytest.approx(0.5, abs=1e-12)
        assert met.mean_queue == pytest.approx(1.0, abs=1e-10)
        assert met.mean_sojourn == pytest.approx(10 / 3, abs=1e-9)

    def test_point_mass(self):
        st = StationaryResult(np.array([[1.0]]), 0, 0.0, 0.0)
        met = queue_metrics(st)
        assert met.mean_queue == 0 and len(met.tails) == 0 and met.mean_sojourn is None
        st = StationaryResult(np.array([[1.0], [0.0], [0.0]]), 2, 0.0, 0.0)
        assert np.all(queue_metrics(st).tails == 0)

    def test_tails_nonincreasing(self, fixture_models):
        for model in fixture_models.values():
            met = queue_metrics(solve_all(model)[2])
            assert np.all(np.diff(met.tails) <= 1e-18)

    def test_bad_nu(self, s1):
        st = solve_all(s1)[2]
        with pytest.raises(InvalidArgumentError):
            queue_metrics(st, nu=0.0)
