"""Stationary distribution of an M/G/1-type chain once ``G_min`` is known.

The level vectors follow the stable recursion

    pi_i = (pi_0 B*_i + sum_{k=1}^{i-1} pi_k A*_{i-k}) (I - A*_0)^{-1}

with ``A*_i = sum_{k>=i} A_k G^{k-i}``, and ``pi_0`` is the left fixed
vector of ``B*_0`` scaled by a closed-form normalization built from the
drift vectors and the group inverse of ``I - A``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import check_positive_int, check_tolerance
from .blocktoeplitz import MatrixSeries
from .exceptions import (
    DegenerateBoundaryError,
    InvalidArgumentError,
    NumericalBreakdownError,
    PreconditionError,
    TruncationWarning,
)

__all__ = [
    "DriftReport",
    "StationaryResult",
    "QueueMetrics",
    "is_irreducible",
    "left_fixed_vector",
    "drift",
    "star_matrices",
    "group_inverse",
    "boundary_pi0",
    "stationary_levels",
    "queue_metrics",
    "truncated_chain_residual",
]

PATTERN_THRESHOLD = 1e-14


@dataclass
class DriftReport:
    alpha: np.ndarray
    a_vec: np.ndarray
    varrho: float
    b_vec: np.ndarray
    ergodic: bool
    b_finite: bool = True


@dataclass
class StationaryResult:
    """Level probabilities ``pi_levels[i] = pi_i`` for ``i = 0..K``.

    ``tail_mass_bound`` is the probability mass the truncated recursion
    failed to account for before renormalization.
    """

    pi_levels: np.ndarray
    truncation: int
    tail_mass_bound: float
    residual: float
    nu: float | None = None
    truncated: bool = False

    @property
    def level_mass(self):
        return self.pi_levels.sum(axis=1)

    @property
    def pi0(self):
        return self.pi_levels[0]


@dataclass
class QueueMetrics:
    tails: np.ndarray
    mean_queue: float
    mean_queue_truncation_bound: float
    mean_sojourn: float | None = None
    prob_busy: float = field(init=False)

    def __post_init__(self):
        self.prob_busy = float(self.tails[0]) if len(self.tails) else 0.0


def is_irreducible(mat, threshold=PATTERN_THRESHOLD):
    """Strong connectivity of the pattern ``mat > threshold``."""
    graph = csr_matrix(np.asarray(mat) > threshold)
    n, _ = connected_components(graph, directed=True, connection="strong")
    return n == 1


def left_fixed_vector(p):
    """Row vector ``x`` with ``x p = x`` and ``x 1 = 1``.

    One equation of ``x (p - I) = 0`` is replaced by the normalization.
    """
    m = p.shape[0]
    lhs = p.T - np.eye(m)
    lhs[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        raise NumericalBreakdownError("fixed-vector system is singular") from None


def drift(model):
    """Perron vector of ``A = sum A_i`` and the mean drift ``alpha . a``.

    Raises
    ------
    PreconditionError
        If ``A`` is reducible.
    """
    a_sum = model.a_sum()
    if not is_irreducible(a_sum):
        raise PreconditionError("sum of A_i is reducible")
    alpha = left_fixed_vector(a_sum)
    idx = np.arange(-1, model.d - 1)
    a_vec = np.einsum("k,kij->i", idx.astype(float), model.a.coeffs)
    b_vec = np.einsum("k,kij->i", np.arange(len(model.b), dtype=float), model.b.coeffs)
    varrho = float(alpha @ a_vec)
    return DriftReport(alpha, a_vec, varrho, b_vec, varrho < 0)


def _star(series, g):
    coeffs = series.coeffs
    out = np.empty_like(coeffs)
    out[-1] = coeffs[-1]
    for i in range(len(coeffs) - 2, -1, -1):
        out[i] = coeffs[i] + out[i + 1] @ g
    return out


def star_matrices(model, g):
    """``A*_i = sum_{k>=i} A_k G^{k-i}`` and ``B*_i`` likewise, ``i >= 0``."""
    g = np.asarray(g, dtype=float)
    a_star = MatrixSeries(0, _star(MatrixSeries(0, model.a.coeffs[1:]), g))
    b_star = MatrixSeries(0, _star(model.b, g))
    s = np.eye(model.m) - a_star[0]
    if np.linalg.cond(s) > 1e14:
        raise NumericalBreakdownError("I - A*_0 is singular")
    return a_star, b_star


def group_inverse(s, alpha, check=True):
    """Group inverse of ``s = I - A`` for irreducible stochastic ``A``.

    Uses ``X = (s + 1 alpha)^{-1} (I - 1 alpha)``.
    """
    s = np.asarray(s, dtype=float)
    m = s.shape[0]
    proj = np.outer(np.ones(m), alpha)
    try:
        x = np.linalg.solve(s + proj, np.eye(m) - proj)
    except np.linalg.LinAlgError:
        raise NumericalBreakdownError("fundamental matrix is singular") from None
    if check:
        scale = 1.0 + np.abs(x).max()
        tol = 1e-9 * scale**2
        if (np.abs(s @ x @ s - s).max() > tol or np.abs(x @ s @ x - x).max() > tol
                or np.abs(s @ x - x @ s).max() > tol):
            raise NumericalBreakdownError("group-inverse identities fail")
    return x


def boundary_pi0(model, g, drift_rep, eig_tol=1e-9):
    """Boundary vector ``pi_0``.

    ``pi_0`` spans the left fixed space of ``B*_0`` and is scaled so that

        pi_0 (b - varrho 1 - (I - B)(I - A)^# a) = -varrho.

    The scaling follows from differentiating ``pi(z)(zI - A(z)) =
    pi_0 (z B(z) - A(z))`` at ``z = 1``; the sign of the group-inverse term
    matters only when ``B = sum B_i`` differs from ``A``.
    """
    if not drift_rep.ergodic:
        raise PreconditionError(f"model is not ergodic: drift varrho = {drift_rep.varrho:+.6g}")
    _, b_star = star_matrices(model, g)
    b0 = b_star[0]
    m = model.m
    sv = np.linalg.svd(b0 - np.eye(m), compute_uv=False)
    if np.sum(sv <= eig_tol * max(1.0, np.abs(b0).max())) != 1:
        raise DegenerateBoundaryError(
            "eigenvalue 1 of B*_0 does not have a one-dimensional left eigenspace")
    lhs = np.vstack([b0.T - np.eye(m), np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    x = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    a_sum = model.a_sum()
    ga = group_inverse(np.eye(m) - a_sum, drift_rep.alpha)
    w = drift_rep.b_vec - drift_rep.varrho - (np.eye(m) - model.b_sum()) @ ga @ drift_rep.a_vec
    denom = float(x @ w)
    if not np.isfinite(denom) or abs(denom) < 1e-300:
        raise DegenerateBoundaryError("boundary normalization is degenerate")
    return x * (-drift_rep.varrho / denom)


def truncated_chain_residual(model, pi_levels):
    """``|| pi (P_K - I) ||_inf`` for the leading ``K+1`` levels of ``P``.

    Computed level-by-level from the band, never forming ``P_K``.
    """
    pi_levels = np.asarray(pi_levels, dtype=float)
    k1 = len(pi_levels)
    out = np.zeros_like(pi_levels)
    for j, bj in enumerate(model.b.coeffs):
        if j < k1:
            out[j] += pi_levels[0] @ bj
    # Row i >= 1 holds A_{j-i} at block column j.
    for off, aj in zip(range(-1, model.d - 1), model.a.coeffs):
        lo = max(1, -off)
        hi = min(k1, k1 - off)
        if hi > lo:
            out[lo + off:hi + off] += pi_levels[lo:hi] @ aj
    return float(np.abs(out - pi_levels).max())


def stationary_levels(model, g, pi0, tail_tol=1e-12, k_max=10_000):
    """Level probabilities by the stable recursion.

    Stops once the masses of the last ``w`` levels (``w`` = band width of the
    star matrices) fall below ``tail_tol * (1 - g_defect)``, or at ``k_max``
    with a :class:`~mg1cr.exceptions.TruncationWarning`.  The result is
    renormalized to total mass one.
    """
    tail_tol = check_tolerance(tail_tol, "tail_tol")
    k_max = check_positive_int(k_max, "k_max")
    a_star, b_star = star_matrices(model, g)
    m = model.m
    inv = np.linalg.inv(np.eye(m) - a_star[0])
    g_defect = float(np.max(np.abs(np.asarray(g).sum(axis=1) - 1.0)))
    threshold = tail_tol * max(1.0 - g_defect, 0.0)
    width = max(len(a_star) - 1, len(b_star) - 1, 1)
    na = len(a_star)

    pis = [np.asarray(pi0, dtype=float)]
    truncated = False
    i = 0
    while True:
        i += 1
        acc = pis[0] @ b_star[i]
        for k in range(max(1, i - na + 1), i):
            acc = acc + pis[k] @ a_star.coeffs[i - k]
        pis.append(acc @ inv)
        if i >= width and all(p.sum() < threshold for p in pis[-width:]):
            break
        if i >= k_max:
            truncated = True
            break
    pi_levels = np.clip(np.array(pis), 0.0, None)
    total = pi_levels.sum()
    defect = abs(1.0 - total)
    if truncated:
        warnings.warn(
            f"level recursion stopped at k_max={k_max} with mass "
            f"{pi_levels[-1].sum():.3g} in the last level", TruncationWarning, stacklevel=2)
    pi_levels = pi_levels / total
    res = truncated_chain_residual(model, pi_levels)
    return StationaryResult(pi_levels, len(pi_levels) - 1, defect, res, model.nu, truncated)


def queue_metrics(res, nu=None):
    """Tail probabilities ``P[Q > k]``, ``E[Q]`` and (with ``nu``) ``E[T] = E[Q] / nu``."""
    if nu is None:
        nu = res.nu
    if nu is not None:
        nu = float(nu)
        if not (np.isfinite(nu) and nu > 0):
            raise InvalidArgumentError(f"nu must be positive, got {nu}")
    mass = res.level_mass
    tails = np.cumsum(mass[::-1])[::-1][1:]
    tails = np.clip(tails, 0.0, None)
    levels = np.arange(len(mass))
    mean_q = float(levels @ mass)
    bound = float(res.tail_mass_bound * (res.truncation + 1))
    sojourn = mean_q / nu if nu is not None else None
    return QueueMetrics(tails, mean_q, bound, sojourn)
