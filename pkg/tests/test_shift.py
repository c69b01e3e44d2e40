import numpy as np
import pytest

from mg1cr import MG1Model
from mg1cr.cr import CRIterate, cr_iterate, cr_solve_gmin, fixed_point_gmin
from mg1cr.exceptions import InvalidArgumentError, NoConvergenceError, PreconditionError
from mg1cr.shift import (
    cr_solve_shifted,
    error_bound_lin,
    fit_decay,
    hat_tail_norm,
    shift_model,
)
from models import random_ergodic_model, random_suite


def test_shifted_series_s1(s1):
    sm = shift_model(s1)
    assert np.allclose(sm.d_series.coeffs.ravel(), [0.0, 0.4, 0.3])
    assert np.allclose(sm.dhat_series.coeffs.ravel(), [0.4, 0.3])


def test_shifted_annihilates_ones():
    model = random_ergodic_model(np.random.default_rng(1), 3, 5)
    sm = shift_model(model, [0.2, 0.3, 0.5])
    assert np.abs(sm.d_series[-1] @ np.ones(3)).max() < 1e-14
    # Row sums of sum_i D_i: A - A_{-1} Q + sum_{i>=0} (sum_{j>i} A_j) Q.
    ones = np.ones(3)
    a = model.a.coeffs
    expect = a.sum(axis=0) @ ones - a[0] @ ones
    for p in range(1, len(a)):
        expect = expect + a[p + 1:].sum(axis=0) @ ones
    assert np.allclose(sm.d_series.sum_at_one() @ ones, expect)


def test_bad_u():
    model = random_ergodic_model(np.random.default_rng(1), 2, 3)
    with pytest.raises(InvalidArgumentError):
        shift_model(model, [0.5, 0.6])
    with pytest.raises(InvalidArgumentError):
        shift_model(model, [1.0, 0.0])


def test_tail_history_s1(s1):
    # Without the early exit the tail halves then drops quadratically.
    sm = shift_model(s1)
    it = CRIterate(0, sm.d_series, sm.dhat_series, np.array(s1.a_minus1))
    hist = []
    for _ in range(3):
        hist.append(hat_tail_norm(it))
        it = cr_iterate(it, 1e-13, check_stochastic=False)
    assert np.allclose(hist, [0.3, 0.15, 0.0375], atol=1e-14)


def test_solve_s1(s1):
    res, _ = cr_solve_shifted(s1, 1e-8)
    assert abs(res.j[0, 0] - 1.0) <= 1e-12
    assert res.iterations == 1
    assert res.sigma == pytest.approx(2 / 0.6)
    assert res.certified_bound == pytest.approx(1e-8 * res.sigma)


def test_nonergodic():
    with pytest.raises(PreconditionError):
        cr_solve_shifted(MG1Model.qbd(0.3, 0.1, 0.6, 0.4))


def test_max_iter(s1):
    model = random_ergodic_model(np.random.default_rng(2), 3, 6, max_drift=-0.01)
    with pytest.raises(NoConvergenceError):
        cr_solve_shifted(model, 1e-14, max_iter=0)


@pytest.mark.parametrize("seed", [0, 1])
def test_certified_and_dominance(seed):
    for model in random_suite(seed, count=25):
        res, _ = cr_solve_shifted(model, 1e-10)
        plain, _ = cr_solve_gmin(model, 1e-10)
        g = fixed_point_gmin(model)
        assert np.abs(res.j - g).sum(axis=1).max() <= res.certified_bound + 1e-12
        assert res.iterations <= plain.iterations


def test_nonuniform_u_agrees():
    model = random_ergodic_model(np.random.default_rng(4), 3, 4)
    a, _ = cr_solve_shifted(model, 1e-12)
    b, _ = cr_solve_shifted(model, 1e-12, u=[0.6, 0.3, 0.1])
    assert np.allclose(a.j, b.j, atol=1e-10)


class TestBoundLin:
    def test_value(self):
        v = error_bound_lin(1e-16, 1.0, 0.5, 10)
        assert v == pytest.approx(1e-16 * (1 + 10 * np.exp(2 * 0.25 / 0.75)))

    def test_reference_value(self):
        assert error_bound_lin(1e-6, 1.0, 0.5, 3) == pytest.approx(6.843e-6, rel=1e-4)
        assert error_bound_lin(0.0, 1.0, 0.5, 3) == 0.0

    def test_zero_iterations(self):
        assert error_bound_lin(1e-16, 2.0, 0.9, 0) == 1e-16

    @pytest.mark.parametrize("sigma", [0.0, 1.0, 1.5])
    def test_bad_sigma(self, sigma):
        with pytest.raises(InvalidArgumentError):
            error_bound_lin(1e-16, 1.0, sigma, 3)

    def test_bad_theta(self):
        with pytest.raises(InvalidArgumentError):
            error_bound_lin(1e-16, 0.0, 0.5, 3)


def test_fit_decay_recovers_parameters():
    norms = [0.7 * 0.8 ** (2**n) for n in range(5)]
    theta, sigma = fit_decay(norms)
    assert theta == pytest.approx(0.7) and sigma == pytest.approx(0.8)
    assert fit_decay([1.0]) is None
    assert fit_decay([1.0, 2.0, 8.0]) is None


def test_first_shifted_iterate_s1(s1):
    sm = shift_model(s1)
    it = cr_iterate(CRIterate(0, sm.d_series, sm.dhat_series, np.array(s1.a_minus1)), 1e-13,
                    check_stochastic=False)
    assert np.allclose(it.a_series.padded(-1, 3).ravel(), [0.0, 0.4, 0.15], atol=1e-14)
    assert np.allclose(it.ahat_series.padded(0, 2).ravel(), [0.4, 0.15], atol=1e-14)
    assert 0.6 / (1 - it.ahat_series[0][0, 0]) == pytest.approx(1.0, abs=1e-14)


def test_shifted_roots_s1(s1):
    # z - sum_i D_i z^{i+1}: the unit root moves to zero.
    d = shift_model(s1).d_series.coeffs.ravel()
    poly = -np.array([d[2], d[1] - 1, d[0]])
    assert np.allclose(sorted(np.roots(poly).real), [0.0, 2.0], atol=1e-12)
