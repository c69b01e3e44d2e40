"""Cyclic reduction for the minimal nonnegative solution of ``X = sum A_i X^{i+1}``.

One reduction step applies an even-odd permutation of the block levels to
the (infinite) block Hessenberg system and eliminates the odd levels by a
Schur complement.  The reduced system has the same structure, so it is
described again by an A-series (the Toeplitz rows) and a hat series (the
first block row).  Among the power series of the current step,

    alpha(z) = sum z^i A_{2i}           (A_0, A_2, ...)
    beta(z)  = sum z^i A_{2i-1}         (A_{-1}, A_1, ...)
    alphah(z) = sum z^i Ah_{2i}         (Ah_0, Ah_2, ...)
    betah(z)  = sum z^i Ah_{2i+1}       (Ah_1, Ah_3, ...)

the new coefficients are

    A'(z) = z alpha(z) + beta(z) (I - alpha(z))^{-1} beta(z)        (start -1)
    Ah'(z) = alphah(z) + betah(z) (I - alpha(z))^{-1} beta(z)       (start 0)

and ``(I - Ah_0)^{-1} A_{-1}`` converges quadratically to ``G_min``.  The hat
series is stored nonnegative (``Ah_i = A_i`` initially); the first block
row of the reduced system is ``[I - Ah_0, -Ah_1, ...]``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_tolerance
from .blocktoeplitz import (
    MatrixSeries,
    lt_toeplitz_inverse_head,
    max_norm_series,
    series_mul,
    truncate_series,
)
from .exceptions import (
    InvalidArgumentError,
    NoConvergenceError,
    NumericalBreakdownError,
    PreconditionError,
    SingularMatrixError,
)

__all__ = [
    "CRIterate",
    "GminResult",
    "CRDiagnostics",
    "initial_iterate",
    "cr_iterate",
    "cr_solve_gmin",
    "fixed_point_gmin",
    "residual_gmin",
    "gamma_n",
    "w_matrix",
    "error_bound_exp",
    "stop_metric",
    "UNIT_ROUNDOFF",
]

UNIT_ROUNDOFF = np.finfo(float).eps / 2

# Output of a reduction step may drift from stochastic by at most this much
# before we call it a breakdown.
_STOCHASTIC_BREAKDOWN = 1e-6


@dataclass(frozen=True)
class CRIterate:
    """State of cyclic reduction after ``n`` steps.

    Attributes
    ----------
    n : int
    a_series : MatrixSeries
        ``A^{(n)}_i``, start ``-1``.
    ahat_series : MatrixSeries
        ``Ah^{(n)}_i``, start ``0``, nonnegative convention.
    a_minus1 : ndarray
        ``A_{-1}`` of the original model, needed to form ``G``.
    q : int
        Number of blocks used by the last inner Toeplitz inversion.
    d_prime : int
        ``max(ceil(len(alpha)), q)`` of the last step.
    """

    n: int
    a_series: MatrixSeries
    ahat_series: MatrixSeries
    a_minus1: np.ndarray
    q: int = 0
    d_prime: int = 0

    @property
    def m(self):
        return self.a_series.m

    def alpha(self):
        return MatrixSeries(0, self.a_series.coeffs[1::2]) if len(self.a_series) > 1 \
            else MatrixSeries.zeros(self.m)

    def beta(self):
        return MatrixSeries(0, self.a_series.coeffs[0::2])

    def alpha_hat(self):
        return MatrixSeries(0, self.ahat_series.coeffs[0::2])

    def beta_hat(self):
        if len(self.ahat_series) < 2:
            return None
        return MatrixSeries(0, self.ahat_series.coeffs[1::2])

    def g_estimate(self):
        """``(I - Ah_0)^{-1} A_{-1}``."""
        return _solve(np.eye(self.m) - self.ahat_series[0], self.a_minus1, "I - Ah_0")


@dataclass
class GminResult:
    g: np.ndarray
    iterations: int
    residual_history: list
    stop_metric: float
    residual: float = float("nan")
    metric: str = "stochastic-defect"


@dataclass
class CRDiagnostics:
    gamma_per_iter: list = field(default_factory=list)
    bound_exp: float = 0.0
    v_norm_per_iter: list = field(default_factory=list)
    w_rowsum_defect_per_iter: list = field(default_factory=list)
    q_per_iter: list = field(default_factory=list)
    upsilon: float = UNIT_ROUNDOFF
    stochastic_defect_per_iter: list = field(default_factory=list)


def _solve(a, b, what):
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"{what} is singular") from None
    if not np.all(np.isfinite(x)) or np.linalg.cond(a) > 1e14:
        raise SingularMatrixError(f"{what} is numerically singular")
    return x


def _rowsum_defect(mat):
    return float(np.max(np.abs(mat.sum(axis=1) - 1.0)))


def initial_iterate(model):
    """Iterate ``n = 0``: ``A^{(0)} = A`` and ``Ah^{(0)}_i = A_i`` for ``i >= 0``."""
    a = model.a
    ahat = MatrixSeries(0, a.coeffs[1:])
    return CRIterate(0, a, ahat, np.array(a[-1]))


def stop_metric(it):
    """``|| 1 - (A_{-1} + Ah_0) 1 ||_inf``."""
    return _rowsum_defect(it.a_minus1 + it.ahat_series[0])


def w_matrix(it):
    """``(I - alpha(1))^{-1} beta(1)``, stochastic for unshifted iterates."""
    i_m = np.eye(it.m)
    return _solve(i_m - it.alpha().sum_at_one(), it.beta().sum_at_one(), "I - alpha(1)")


def gamma_n(it):
    """``2 (1 + || beta(1) (I - alpha(1))^{-1} ||_inf)``."""
    i_m = np.eye(it.m)
    lhs = (i_m - it.alpha().sum_at_one()).T
    v1 = _solve(lhs, it.beta().sum_at_one().T, "I - alpha(1)").T
    return 2.0 * (1.0 + float(np.abs(v1).sum(axis=1).max()))


def _step(it, inner_eps):
    m = it.m
    alpha = it.alpha()
    beta = it.beta()
    t = -alpha.coeffs.copy()
    t[0] += np.eye(m)
    q, k_blocks = lt_toeplitz_inverse_head(np.transpose(t, (0, 2, 1)), inner_eps)
    k = MatrixSeries(0, k_blocks)
    v = series_mul(beta, k)
    y = series_mul(v, beta)
    a_next = MatrixSeries(-1, y.coeffs) + MatrixSeries(0, alpha.coeffs)
    bh = it.beta_hat()
    ahat_next = it.alpha_hat()
    if bh is not None:
        ahat_next = ahat_next + series_mul(series_mul(bh, k), beta)
    d_prime = max(-(-len(it.a_series) // 2), q)
    return a_next, ahat_next, q, d_prime, v


def cr_iterate(it, eps=1e-10, check_stochastic=True, return_v=False):
    """One cyclic reduction step.

    Parameters
    ----------
    it : CRIterate
    eps : float
        Tolerance for the inner Toeplitz inversion and for truncating the
        output series.
    check_stochastic : bool
        Raise :class:`NumericalBreakdownError` if the output row sums leave
        ``1 +- 1e-6``.  Must be off for shifted (signed) series.
    return_v : bool
        Also return ``V = beta K``.
    """
    eps = check_tolerance(eps, "eps", allow_zero=True)
    a_next, ahat_next, q, d_prime, v = _step(it, eps)
    a_next = truncate_series(a_next, eps)
    ahat_next = truncate_series(ahat_next, eps)
    out = CRIterate(it.n + 1, a_next, ahat_next, it.a_minus1, q, d_prime)
    if check_stochastic:
        d1 = _rowsum_defect(a_next.sum_at_one())
        d2 = _rowsum_defect(it.a_minus1 + ahat_next.sum_at_one())
        if max(d1, d2) > _STOCHASTIC_BREAKDOWN:
            raise NumericalBreakdownError(
                f"reduction step {out.n} lost stochasticity (row-sum defect {max(d1, d2):.3g})")
    if return_v:
        return out, v
    return out


def error_bound_exp(upsilon, gamma, n):
    """``upsilon (gamma^{n+1} - 1) / (gamma - 1)``."""
    if not gamma > 1:
        raise InvalidArgumentError(f"gamma must exceed 1, got {gamma}")
    if upsilon < 0 or n < 0:
        raise InvalidArgumentError("upsilon and n must be nonnegative")
    return upsilon * (gamma ** (n + 1) - 1.0) / (gamma - 1.0)


def _power_sum(model, x):
    """``sum_i A_i x^{i+1}`` by Horner from the top coefficient."""
    coeffs = model.a.coeffs
    h = coeffs[-1].copy()
    for c in coeffs[-2::-1]:
        h = c + h @ x
    return h


def fixed_point_gmin(model, tol=1e-14, max_iter=1_000_000, trace=False):
    """Natural fixed-point iteration ``X <- sum A_i X^{i+1}`` from ``X = 0``.

    The iterates are nondecreasing and converge to ``G_min``.  Linear
    convergence only; meant as a reference solution.

    Returns
    -------
    ndarray, or (ndarray, list of ndarray) when ``trace`` is set.
    """
    x = np.zeros((model.m, model.m))
    iterates = [x]
    for _ in range(max_iter):
        x_new = _power_sum(model, x)
        if trace:
            iterates.append(x_new)
        if np.abs(x_new - x).sum(axis=1).max() <= tol:
            return (x_new, iterates) if trace else x_new
        x = x_new
    raise NoConvergenceError(f"fixed-point iteration did not reach {tol:g} in {max_iter} steps")


def residual_gmin(model, g):
    """``|| G - sum A_i G^{i+1} ||_inf``."""
    g = np.asarray(g, dtype=float).reshape(model.m, model.m)
    return float(np.abs(g - _power_sum(model, g)).sum(axis=1).max())


def cr_solve_gmin(model, eps=1e-10, max_iter=64, check_ergodicity=True,
                  upsilon=UNIT_ROUNDOFF, inner_eps=None):
    """Approximate ``G_min`` by cyclic reduction.

    Parameters
    ----------
    model : MG1Model
    eps : float
        Stop when ``|| 1 - (A_{-1} + Ah_0) 1 ||_inf <= eps``.
    max_iter : int
    check_ergodicity : bool
        Refuse models with nonnegative drift.  When disabled and the model
        is not positive recurrent, the row-sum test cannot reach zero, so the
        loop stops on ``|| G_n - G_{n-1} ||_inf <= eps`` instead.  The same
        increment test also ends an ergodic run whose row-sum defect has
        stalled at the truncation floor.
    upsilon : float
        Per-step local error used by the exponential bound diagnostic.
    inner_eps : float, optional
        Tolerance for inner inversions and series truncation; defaults to
        ``min(eps, 1e-15)``.

    Returns
    -------
    GminResult, CRDiagnostics
    """
    # Imported here: stationary uses the model only, not the solver.
    from .stationary import drift

    eps = check_tolerance(eps, "eps")
    max_iter = check_positive_int(max_iter, "max_iter", minimum=0)
    inner = min(eps, 1e-15) if inner_eps is None else check_tolerance(inner_eps, "inner_eps")
    m = model.m
    diag = CRDiagnostics(upsilon=upsilon)

    if not np.any(model.a_minus1):
        diag.bound_exp = 0.0
        g = np.zeros((m, m))
        return GminResult(g, 0, [], 0.0, residual_gmin(model, g)), diag

    metric = "stochastic-defect"
    if check_ergodicity:
        rep = drift(model)
        if not rep.ergodic:
            raise PreconditionError(
                f"model is not ergodic: drift varrho = {rep.varrho:+.6g} (must be < 0)")
    else:
        try:
            if not drift(model).ergodic:
                metric = "increment"
        except PreconditionError:
            metric = "increment"

    it = initial_iterate(model)
    history = []
    g_prev = np.zeros((m, m))
    while True:
        g = it.g_estimate()
        diag.stochastic_defect_per_iter.append(stop_metric(it))
        if metric == "increment":
            r = float(np.abs(g - g_prev).sum(axis=1).max())
        else:
            r = stop_metric(it)
        history.append(r)
        if r <= eps:
            break
        # Past convergence the defect sits at the accumulated truncation
        # error while further steps only amplify rounding.
        # Row-sum defects grow by about a factor two per step, so the floor is
        # of order 2^n times the inner tolerance.
        floor = 2.0 ** (it.n + 4) * inner
        if (it.n >= 2 and r <= floor and r > 0.5 * history[-2]
                and np.abs(g - g_prev).sum(axis=1).max() <= eps):
            break
        if it.n >= max_iter:
            raise NoConvergenceError(
                f"cyclic reduction did not converge in {max_iter} iterations "
                f"(last metric {r:.3g})", history)
        diag.gamma_per_iter.append(gamma_n(it))
        diag.w_rowsum_defect_per_iter.append(_rowsum_defect(w_matrix(it)))
        it, v = cr_iterate(it, inner, check_stochastic=True, return_v=True)
        diag.v_norm_per_iter.append(max_norm_series(v))
        diag.q_per_iter.append(it.q)
        g_prev = g

    if diag.gamma_per_iter:
        diag.bound_exp = error_bound_exp(upsilon, max(diag.gamma_per_iter), it.n)
    else:
        diag.bound_exp = upsilon
    res = GminResult(g, it.n, history, history[-1], residual_gmin(model, g), metric)
    return res, diag
