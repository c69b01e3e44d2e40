"""Cyclic reduction with the unit root shifted to zero.

With ``Q = 1 u^T`` for a positive probability vector ``u``, the shifted
coefficients

    D_{-1} = A_{-1} (I - Q),    D_i = A_i + (sum_{j>i} A_j) Q   (i >= 0)

define a matrix equation whose minimal solution is ``G_min - Q``; the root
of ``det(z I - sum A_i z^{i+1})`` at ``z = 1`` moves to ``z = 0``.
Cyclic reduction on the shifted series converges faster, and the result is
certified by ``|| G_min - J ||_inf <= eps * sigma``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_probability_vector, check_tolerance
from .blocktoeplitz import MatrixSeries, max_norm_series
from .cr import (
    CRDiagnostics,
    CRIterate,
    UNIT_ROUNDOFF,
    _solve,
    cr_iterate,
    error_bound_exp,
    gamma_n,
    residual_gmin,
)
from .exceptions import InvalidArgumentError, NoConvergenceError, PreconditionError
from .stationary import drift

__all__ = [
    "ShiftedModel",
    "ShiftResult",
    "shift_model",
    "cr_solve_shifted",
    "error_bound_lin",
    "fit_decay",
    "hat_tail_norm",
]


@dataclass(frozen=True, eq=False)
class ShiftedModel:
    """Shifted coefficient series of ``base``.

    ``dhat_series`` starts at index 0 and holds ``D_i`` for ``i >= 0``,
    which is the hat series the reduction starts from.
    """

    base: object
    u: np.ndarray
    d_series: MatrixSeries
    dhat_series: MatrixSeries

    @property
    def q_matrix(self):
        return np.outer(np.ones(self.base.m), self.u)


@dataclass
class ShiftResult:
    j: np.ndarray
    sigma: float
    iterations: int
    metric_history: list
    residual: float = float("nan")
    certified_bound: float = float("nan")


def shift_model(model, u=None):
    """Build the shifted series for ``model``; ``u`` defaults to uniform."""
    m = model.m
    u = check_probability_vector(u, m, "u", strict=True)
    q = np.outer(np.ones(m), u)
    a = model.a.coeffs
    d = np.empty_like(a)
    d[0] = a[0] @ (np.eye(m) - q)
    # tail[i] = sum_{j > i} A_j, for A-index i = position - 1.
    tail = np.cumsum(a[::-1], axis=0)[::-1]
    for p in range(1, len(a)):
        above = tail[p + 1] if p + 1 < len(a) else np.zeros((m, m))
        d[p] = a[p] + above @ q
    shifted = ShiftedModel(model, u, MatrixSeries(-1, d), MatrixSeries(0, d[1:]))
    _check_shift(shifted)
    return shifted


def _check_shift(sm):
    ones = np.ones(sm.base.m)
    if np.abs(sm.d_series[-1] @ ones).max() > 1e-12:
        raise InvalidArgumentError("shifted A_{-1} does not annihilate the ones vector")
    # Row sums two ways: summed shifted series vs the closed form.
    lhs = sm.d_series.sum_at_one() @ ones
    a_sum = sm.base.a_sum()
    am1 = sm.base.a_minus1
    q = sm.q_matrix
    rhs = a_sum @ ones - am1 @ q @ ones
    rhs = rhs + sum(
        (sm.base.a.coeffs[p + 1:].sum(axis=0) @ q @ ones) for p in range(1, len(sm.base.a) - 1))
    if np.abs(lhs - rhs).max() > 1e-12:
        raise InvalidArgumentError("shifted series row sums disagree between evaluation orders")


def hat_tail_norm(it):
    """``sum_{i>=1} || Dh_i ||_inf``."""
    c = it.ahat_series.coeffs[1:]
    return float(sum(np.abs(x).sum(axis=1).max() for x in c))


def error_bound_lin(upsilon, theta, sigma_rate, n):
    """``upsilon (1 + n exp(2 theta sigma^2 / (1 - sigma^2)))``."""
    if not 0 < sigma_rate < 1:
        raise InvalidArgumentError(f"sigma_rate must lie in (0, 1), got {sigma_rate}")
    if not theta > 0:
        raise InvalidArgumentError(f"theta must be positive, got {theta}")
    if upsilon < 0 or n < 0:
        raise InvalidArgumentError("upsilon and n must be nonnegative")
    s2 = sigma_rate * sigma_rate
    return upsilon * (1.0 + n * np.exp(2.0 * theta * s2 / (1.0 - s2)))


def fit_decay(norms):
    """Fit ``norms[n] ~ theta * sigma**(2**n)`` by least squares in log space.

    Returns ``(theta, sigma)`` or ``None`` when fewer than two usable points
    exist or the fitted rate is not in ``(0, 1)``.
    """
    pts = [(2.0**n, np.log(v)) for n, v in enumerate(norms) if v > 0 and np.isfinite(v)]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    slope, icpt = np.polyfit(x, y, 1)
    sigma = float(np.exp(slope))
    if not 0 < sigma < 1:
        return None
    return float(np.exp(icpt)), sigma


def cr_solve_shifted(model, eps=1e-10, max_iter=64, u=None, upsilon=UNIT_ROUNDOFF,
                     inner_eps=None):
    """Cyclic reduction on the shifted series.

    Iterates until ``sum_{i>=1} || Dh_i^{(n)} ||_inf <= eps`` (or until two
    consecutive approximations agree to ``eps``) and returns
    ``J = (I - Dh_0^{(n)})^{-1} A_{-1}`` with the unshifted ``A_{-1}``, and
    ``sigma = 2 || (I - Dh_0^{(n)})^{-1} ||_inf``.

    Returns
    -------
    ShiftResult, CRDiagnostics
    """
    eps = check_tolerance(eps, "eps")
    max_iter = check_positive_int(max_iter, "max_iter", minimum=0)
    inner = min(eps, 1e-15) if inner_eps is None else check_tolerance(inner_eps, "inner_eps")
    rep = drift(model)
    if not rep.ergodic:
        raise PreconditionError(
            f"model is not ergodic: drift varrho = {rep.varrho:+.6g} (must be < 0)")
    m = model.m
    sm = shift_model(model, u)
    it = CRIterate(0, sm.d_series, sm.dhat_series, np.array(model.a_minus1))
    diag = CRDiagnostics(upsilon=upsilon)
    history = []
    i_m = np.eye(m)
    j_prev = None
    while True:
        r = hat_tail_norm(it)
        history.append(r)
        if r <= eps:
            break
        # The tail test is conservative when the shifted solution is tiny;
        # an unchanged J after a quadratically convergent step is final too.
        j = _solve(i_m - it.ahat_series[0], model.a_minus1, "I - Dh_0")
        if j_prev is not None and np.abs(j - j_prev).sum(axis=1).max() <= eps:
            break
        j_prev = j
        if it.n >= max_iter:
            raise NoConvergenceError(
                f"shifted cyclic reduction did not converge in {max_iter} iterations "
                f"(last metric {r:.3g})", history)
        diag.gamma_per_iter.append(gamma_n(it))
        it, v = cr_iterate(it, inner, check_stochastic=False, return_v=True)
        diag.v_norm_per_iter.append(max_norm_series(v))
        diag.q_per_iter.append(it.q)
    s = i_m - it.ahat_series[0]
    j = _solve(s, model.a_minus1, "I - Dh_0")
    sigma = 2.0 * float(np.abs(np.linalg.inv(s)).sum(axis=1).max())
    if diag.gamma_per_iter:
        diag.bound_exp = error_bound_exp(upsilon, max(diag.gamma_per_iter), it.n)
    else:
        diag.bound_exp = upsilon
    res = ShiftResult(j, sigma, it.n, history, residual_gmin(model, j), eps * sigma)
    return res, diag
