"""Dense block kernels for truncated matrix power series.

A :class:`MatrixSeries` is the finite section ``S(z) = sum_i z**i S_i`` of a
matrix power (or Laurent) series with ``M x M`` real coefficients.  Products
are computed by zero padding to a power of two, transforming blockwise with
the FFT and multiplying pointwise in the transform domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    InvalidArgumentError,
    NoConvergenceError,
    NumericalBreakdownError,
    SingularMatrixError,
)

__all__ = [
    "MatrixSeries",
    "block_dft",
    "series_mul",
    "lt_toeplitz_inverse_head",
    "max_norm_series",
    "truncate_series",
    "next_pow2",
    "DEFAULT_MAX_Q",
]

DEFAULT_MAX_Q = 2**14

# Tolerance for discarding the imaginary part after an inverse transform.
_IMAG_TOL = 1e-9


def next_pow2(n):
    """Smallest power of two ``>= n`` (``n >= 1``)."""
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"next_pow2 needs n >= 1, got {n}")
    return 1 << (n - 1).bit_length()


def _as_blocks(blocks, name="blocks"):
    arr = np.asarray(blocks, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise InvalidArgumentError(
            f"{name} must be a stack of square blocks, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class MatrixSeries:
    """Truncated matrix power series ``sum_{i=start}^{end} z**i S_i``.

    Parameters
    ----------
    start : int
        Index of the first stored coefficient (``-1`` for the A-series of an
        M/G/1 model, ``0`` for ordinary power series).
    coeffs : array_like, shape (L, M, M)
        Coefficients ``S_start, ..., S_{start+L-1}``.  Stored as a read-only
        float array.
    """

    start: int
    coeffs: np.ndarray

    def __post_init__(self):
        arr = _as_blocks(self.coeffs, "coeffs").copy()
        if arr.shape[0] == 0:
            raise InvalidArgumentError("a MatrixSeries needs at least one coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "start", int(self.start))

    @classmethod
    def zeros(cls, m, start=0, length=1):
        return cls(start, np.zeros((length, m, m)))

    @classmethod
    def identity(cls, m, start=0):
        return cls(start, np.eye(m)[None])

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        return self.start + len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        """Coefficient at absolute index ``i``; zero outside the stored range."""
        k = i - self.start
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return np.zeros((self.m, self.m))

    def indices(self):
        return range(self.start, self.degree + 1)

    def sum_at_one(self):
        """``S(1)``, the sum of all coefficients."""
        return self.coeffs.sum(axis=0)

    def evaluate(self, z):
        z = complex(z)
        powers = z ** np.arange(self.start, self.degree + 1)
        return np.tensordot(powers, self.coeffs, axes=1)

    def padded(self, start, length):
        """Dense coefficient array over ``start .. start+length-1``."""
        out = np.zeros((length, self.m, self.m))
        for i in self.indices():
            k = i - start
            if 0 <= k < length:
                out[k] = self[i]
        return out

    def __add__(self, other):
        if other.m != self.m:
            raise InvalidArgumentError("block-order mismatch in series addition")
        lo = min(self.start, other.start)
        hi = max(self.degree, other.degree)
        n = hi - lo + 1
        return MatrixSeries(lo, self.padded(lo, n) + other.padded(lo, n))

    def __neg__(self):
        return MatrixSeries(self.start, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def allclose(self, other, atol=1e-12):
        lo = min(self.start, other.start)
        n = max(self.degree, other.degree) - lo + 1
        return bool(np.allclose(self.padded(lo, n), other.padded(lo, n), rtol=0, atol=atol))

    def __repr__(self):
        return f"MatrixSeries(start={self.start}, len={len(self)}, m={self.m})"


def block_dft(points, inverse=False):
    """Blockwise length-N discrete Fourier transform.

    The forward transform is ``y_j = sum_k x_k exp(-2 pi i jk / N)``; the
    inverse carries the ``1/N`` factor so that ``inverse(forward(x)) == x``.

    Parameters
    ----------
    points : array_like, shape (N, M, M)
    inverse : bool

    Returns
    -------
    ndarray of complex, shape (N, M, M)
    """
    arr = np.asarray(points)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape[0] == 0:
        raise InvalidArgumentError("block_dft needs at least one block")
    if inverse:
        return np.fft.ifft(arr, axis=0)
    return np.fft.fft(arr, axis=0)


def _realize(z):
    scale = 1.0 + np.max(np.abs(z.real), initial=0.0)
    if np.max(np.abs(z.imag), initial=0.0) >= _IMAG_TOL * scale:
        raise NumericalBreakdownError(
            "transform produced a non-negligible imaginary part on real data")
    return np.ascontiguousarray(z.real)


def _conv(a, b):
    """Block convolution of coefficient stacks, ``a``'s blocks on the left."""
    n_out = len(a) + len(b) - 1
    # Minimum power of two strictly greater than the product degree.
    n_fft = next_pow2(n_out)
    fa = np.fft.fft(a, n=n_fft, axis=0)
    fb = np.fft.fft(b, n=n_fft, axis=0)
    prod = np.fft.ifft(fa @ fb, axis=0)[:n_out]
    return _realize(prod)


def series_mul(a, b):
    """Product ``a(z) b(z)`` of two matrix series (block order preserved).

    Coefficient ``k`` of the result is ``sum_{i+j=k} a_i @ b_j`` and the start
    indices add.
    """
    if a.m != b.m:
        raise InvalidArgumentError(f"block-order mismatch: {a.m} vs {b.m}")
    return MatrixSeries(a.start + b.start, _conv(a.coeffs, b.coeffs))


def _inv(mat, what):
    try:
        out = np.linalg.inv(mat)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"{what} is singular") from None
    if not np.all(np.isfinite(out)) or np.linalg.cond(mat) > 1e14:
        raise SingularMatrixError(f"{what} is numerically singular")
    return out


def lt_toeplitz_inverse_head(c, eps, max_q=DEFAULT_MAX_Q):
    """Leading blocks of the inverse of an infinite block triangular Toeplitz matrix.

    ``c`` holds the transposed first-row blocks ``C_0 .. C_{k-1}`` of the
    upper triangular block Toeplitz matrix (equivalently the first block
    column of its lower triangular transpose).  The first column
    ``Y_0, Y_1, ...`` of the inverse of the lower triangular matrix is built
    by doubling: given ``y_q`` for ``T_q``,

        y_2q = [y_q; -L(y_q) S_q y_q]

    where ``S_q`` is the bottom-left ``q x q`` block of ``T_2q`` and
    ``L(y_q) = T_q^{-1}``.  Doubling stops once every entry of
    ``|W - sum_i Y_i|`` is ``<= eps`` with ``W = (sum_i C_i)^{-1}``, or once
    a doubling step no longer changes the partial sum at working precision.

    Parameters
    ----------
    c : array_like, shape (k, M, M)
    eps : float
    max_q : int
        Cap on the number of blocks; exceeding it raises.

    Returns
    -------
    q : int
        Number of blocks returned (a power of two).
    k_blocks : ndarray, shape (q, M, M)
        ``K_i = Y_i^T``, the first ``q`` blocks of the first block row of the
        inverse of the upper triangular operator.
    """
    c = _as_blocks(c, "c")
    m = c.shape[1]
    y0 = _inv(c[0], "C_0")
    w = _inv(c.sum(axis=0), "sum of C_i")
    y = y0[None]
    q = 1
    total = y0.copy()
    while True:
        if np.all(np.abs(w - total) <= eps):
            break
        if 2 * q > max_q:
            raise NoConvergenceError(
                f"triangular Toeplitz inversion needs more than {max_q} blocks")
        # w_blk = S_q y_q: coefficients q .. 2q-1 of C(z) Y_q(z).
        cy = _conv(c, y)
        w_blk = np.zeros((q, m, m))
        hi = min(len(cy), 2 * q)
        if hi > q:
            w_blk[: hi - q] = cy[q:hi]
        u = -_conv(y, w_blk)[:q]
        y = np.concatenate([y, u])
        q *= 2
        step = np.abs(u).sum(axis=0)
        total = total + u.sum(axis=0)
        # Once past the band, a doubling that moves nothing at working
        # precision means eps is below round-off for this W.
        if q >= len(c) and np.max(step) <= 4 * np.finfo(float).eps * max(1.0, np.max(np.abs(total))):
            break
    return q, np.ascontiguousarray(np.transpose(y, (0, 2, 1)))


def max_norm_series(s):
    """Max norm ``|| sum_i |S_i| ||_inf`` of a truncated series."""
    return float(np.abs(s.coeffs).sum(axis=0).sum(axis=1).max())


def truncate_series(s, eps):
    """Drop the longest suffix whose elementwise cumulative |.|-sum is below ``eps``.

    The coefficient at the start index is always kept.
    """
    if eps <= 0 or len(s) == 1:
        return s
    tail = np.cumsum(np.abs(s.coeffs[::-1]), axis=0)[::-1]
    below = np.all(tail < eps, axis=(1, 2))
    keep = len(s)
    while keep > 1 and below[keep - 1]:
        keep -= 1
    if keep == len(s):
        return s
    return MatrixSeries(s.start, s.coeffs[:keep])
