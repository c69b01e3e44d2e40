"""The M/G/1-type model container.

The transition matrix of an M/G/1-type chain is upper block Hessenberg: the
first block row holds ``B_0, B_1, ...`` and every later row ``i`` holds
``A_{j-i}`` in block column ``j`` (so ``A_{-1}`` sits on the subdiagonal).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_block_stack, check_square, check_tolerance
from .blocktoeplitz import MatrixSeries
from .exceptions import ValidationError

__all__ = ["MG1Model", "DEFAULT_VALIDATION_TOL"]

DEFAULT_VALIDATION_TOL = 1e-8


def _check_stochastic(stack, label, first_index, tol):
    neg = np.argwhere(stack < 0)
    if len(neg):
        k, i, j = neg[0]
        raise ValidationError(
            f"negative entry {stack[k, i, j]:.6g} in {label}_{k + first_index} at ({i}, {j})")
    sums = stack.sum(axis=(0, 2))
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if len(bad):
        r = int(bad[0])
        raise ValidationError(
            f"row {r} of sum_i {label}_i sums to {sums[r]:.12g}, "
            f"off by {abs(sums[r] - 1.0):.3g} (tolerance {tol:g})")


@dataclass(frozen=True, eq=False)
class MG1Model:
    """Validated block coefficients of an M/G/1-type chain.

    Parameters
    ----------
    a : MatrixSeries
        ``A_{-1}, A_0, ..., A_{d-2}`` with ``start == -1``.
    b : MatrixSeries
        ``B_0, ..., B_{d'-1}`` with ``start == 0``.
    tol : float
        Tolerance on the row sums of ``sum A_i`` and ``sum B_i``.
    nu : float, optional
        Arrival rate, used only for the sojourn-time metric.
    kind : {"mg1", "qbd"}
        Container tag, kept for serialization.
    """

    a: MatrixSeries
    b: MatrixSeries
    tol: float = DEFAULT_VALIDATION_TOL
    nu: float | None = None
    kind: str = "mg1"

    def __post_init__(self):
        if self.a.start != -1:
            raise ValidationError(f"A-series must start at index -1, got {self.a.start}")
        if self.b.start != 0:
            raise ValidationError(f"B-series must start at index 0, got {self.b.start}")
        if self.a.m != self.b.m:
            raise ValidationError(f"A and B block orders differ: {self.a.m} vs {self.b.m}")
        if len(self.a) < 2:
            raise ValidationError("A-series needs at least A_{-1} and A_0")
        tol = check_tolerance(self.tol, "tol")
        _check_stochastic(self.a.coeffs, "A", -1, tol)
        _check_stochastic(self.b.coeffs, "B", 0, tol)
        if self.nu is not None and not (np.isfinite(self.nu) and self.nu > 0):
            raise ValidationError(f"nu must be positive, got {self.nu}")
        if self.kind not in ("mg1", "qbd"):
            raise ValidationError(f"unknown model type {self.kind!r}")

    @classmethod
    def from_blocks(cls, a_blocks, b_blocks, tol=DEFAULT_VALIDATION_TOL, nu=None):
        """Build from ``[A_{-1}, A_0, ...]`` and ``[B_0, B_1, ...]``."""
        a = check_block_stack(a_blocks, "A")
        b = check_block_stack(b_blocks, "B", m=a.shape[1])
        return cls(MatrixSeries(-1, a), MatrixSeries(0, b), tol=tol, nu=nu)

    @classmethod
    def qbd(cls, a_minus1, a0, a1, b0, tol=DEFAULT_VALIDATION_TOL, nu=None):
        """Quasi-birth-and-death chain; the boundary row is ``(B_0, A_1)``."""
        a_minus1 = check_square(a_minus1, "A_-1")
        m = a_minus1.shape[0]
        a0 = check_square(a0, "A_0", m)
        a1 = check_square(a1, "A_1", m)
        b0 = check_square(b0, "B_0", m)
        return cls(MatrixSeries(-1, np.stack([a_minus1, a0, a1])),
                   MatrixSeries(0, np.stack([b0, a1])), tol=tol, nu=nu, kind="qbd")

    @property
    def m(self):
        return self.a.m

    @property
    def d(self):
        """Number of stored A coefficients."""
        return len(self.a)

    @property
    def a_minus1(self):
        return self.a[-1]

    def a_sum(self):
        return self.a.sum_at_one()

    def b_sum(self):
        return self.b.sum_at_one()

    def with_nu(self, nu):
        return MG1Model(self.a, self.b, tol=self.tol, nu=nu, kind=self.kind)

    def __repr__(self):
        return f"MG1Model(kind={self.kind!r}, m={self.m}, d={self.d}, nb={len(self.b)})"
