"""Deterministic emulation of a circulant linear-algebra pipeline on state vectors.

A block Toeplitz operator with entry ``T_{r-s}`` in block position
``(r, s)`` has symbol ``f(w) = sum_k T_k e^{ikw}``.  Sampling the symbol at
``w_j = 2 pi j / N`` gives blocks ``F_j`` and the associated block circulant

    C = Phi^H diag(F_0, ..., F_{N-1}) Phi,    Phi = QFT (x) I_M,

with first block row ``c_k = (1/N) sum_j F_j e^{2 pi i jk / N}``.  The
pipeline prepares a state, applies the QFT on the level register,
multiplies or inverts the sampled blocks (the inversion mimics a
controlled-rotation with post-selection, and the post-selection weight is
reported instead of sampled), and transforms back.

One cyclic reduction step is emulated by evaluating the first block row of
``T2 T1^{-1} T3 + T4`` for the two reduced-system rows with circulants of
order ``N`` and comparing against the exact step.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_power_of_two
from .blocktoeplitz import MatrixSeries, max_norm_series, next_pow2, truncate_series
from .cr import CRIterate, cr_iterate
from .exceptions import InvalidArgumentError, SingularSymbolError

__all__ = [
    "BlockSymbol",
    "CirculantOperator",
    "StateVector",
    "ResourceEstimate",
    "EmulationReport",
    "symbol_samples",
    "row_symbol",
    "circulant_from_symbol",
    "qft",
    "iqft",
    "eigen_invert",
    "diag_apply",
    "emulate_cr_iteration_q",
    "default_samples",
    "resource_estimate",
]

SINGULAR_THRESHOLD = 1e-12
# Fidelities below this are round-off and compare as equal.
FIDELITY_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class BlockSymbol:
    """Samples ``F_j = sum_k T_k exp(i k 2 pi j / N)`` of a block symbol."""

    coeffs: MatrixSeries
    n: int
    samples: np.ndarray

    @property
    def m(self):
        return self.coeffs.m

    def min_singular_value(self):
        return float(np.linalg.svd(self.samples, compute_uv=False)[:, -1].min())

    def recompute_error(self):
        """Deviation of the stored samples from a direct evaluation."""
        w = 2 * np.pi * np.arange(self.n) / self.n
        direct = np.array([self.coeffs.evaluate(np.exp(1j * wj)) for wj in w])
        return float(np.abs(direct - self.samples).max())

    @property
    def is_zero(self):
        return not np.any(self.coeffs.coeffs)


@dataclass(frozen=True, eq=False)
class CirculantOperator:
    symbol: BlockSymbol
    c_blocks: np.ndarray

    def dense(self):
        """The ``NM x NM`` matrix with block ``(r, s)`` equal to ``c_{(s-r) mod N}``."""
        n, m = self.symbol.n, self.symbol.m
        out = np.zeros((n * m, n * m), dtype=complex)
        for r in range(n):
            for s in range(n):
                out[r * m:(r + 1) * m, s * m:(s + 1) * m] = self.c_blocks[(s - r) % n]
        return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over ``n_levels * m`` basis states, level-major.

    ``norm_factor * amplitudes`` is the unnormalized vector the state stands
    for.
    """

    amplitudes: np.ndarray
    n_levels: int
    m: int = 1
    norm_factor: float = 1.0
    normalized: bool = True

    @classmethod
    def from_vector(cls, x, m=1):
        x = np.asarray(x, dtype=complex).ravel()
        if x.size == 0 or x.size % m:
            raise InvalidArgumentError(f"state length {x.size} is not a multiple of {m}")
        nrm = float(np.linalg.norm(x))
        if nrm == 0:
            raise InvalidArgumentError("cannot prepare the zero state")
        return cls(x / nrm, x.size // m, m, nrm, True)

    @classmethod
    def basis(cls, n_levels, m, level, phase):
        x = np.zeros(n_levels * m, dtype=complex)
        x[level * m + phase] = 1.0
        return cls(x, n_levels, m)

    @property
    def dim(self):
        return self.n_levels * self.m

    def vector(self):
        return self.norm_factor * self.amplitudes

    def blocks(self):
        return self.amplitudes.reshape(self.n_levels, self.m)


def symbol_samples(coeffs, n):
    """Sample the block symbol of ``coeffs`` at ``2 pi j / n``, ``j = 0..n-1``."""
    n = check_power_of_two(n, "n")
    if len(coeffs) > n:
        raise InvalidArgumentError(f"n = {n} does not exceed the band width {len(coeffs)}")
    padded = np.zeros((n, coeffs.m, coeffs.m))
    for k in coeffs.indices():
        padded[k % n] += coeffs[k]
    samples = n * np.fft.ifft(padded, axis=0)
    return BlockSymbol(coeffs, n, samples)


def row_symbol(series, n):
    """Symbol of the upper triangular block Toeplitz operator with first row ``series``.

    Row 0 holds ``S_c`` in column ``c``, so ``T_k = S_{-k}``.
    """
    rev = MatrixSeries(-series.degree, series.coeffs[::-1])
    return symbol_samples(rev, n)


def circulant_from_symbol(sym):
    """First block row ``c_k = (1/N) sum_j F_j exp(2 pi i jk / N)``."""
    return CirculantOperator(sym, np.fft.ifft(sym.samples, axis=0))


def _check_levels(state):
    if state.n_levels & (state.n_levels - 1):
        raise InvalidArgumentError(
            f"level dimension {state.n_levels} is not a power of two")


def qft(state):
    """Unitary DFT on the level register: ``y_l = N^{-1/2} sum_k x_k e^{2 pi i kl / N}``."""
    _check_levels(state)
    y = np.fft.ifft(state.blocks(), axis=0, norm="ortho")
    return StateVector(y.ravel(), state.n_levels, state.m, state.norm_factor, state.normalized)


def iqft(state):
    """Inverse of :func:`qft`."""
    _check_levels(state)
    y = np.fft.fft(state.blocks(), axis=0, norm="ortho")
    return StateVector(y.ravel(), state.n_levels, state.m, state.norm_factor, state.normalized)


def _check_conformal(state, sym):
    if state.n_levels != sym.n or state.m != sym.m:
        raise InvalidArgumentError(
            f"state ({state.n_levels} x {state.m}) does not match symbol ({sym.n} x {sym.m})")


def _renormalize(y, state, weight=1.0):
    nrm = float(np.linalg.norm(y))
    if nrm == 0:
        raise InvalidArgumentError("pipeline produced the zero state")
    return StateVector((y / nrm).ravel(), state.n_levels, state.m,
                       state.norm_factor * nrm * weight, True)


def eigen_invert(state, sym, m=None):
    """Apply ``F_j^{-1}`` to each level block of a state in the transform domain.

    Parameters
    ----------
    state : StateVector
    sym : BlockSymbol
    m : float, optional
        Rotation constant, at most the smallest singular value over all
        samples; defaults to that minimum.

    Returns
    -------
    StateVector
        Renormalized result; ``norm_factor`` absorbs the dropped scale.
    success_prob : float
        ``sum_j m^2 || F_j^{-1} b_j ||^2`` for the normalized input ``b``.
    """
    _check_conformal(state, sym)
    smin = sym.min_singular_value()
    if smin < SINGULAR_THRESHOLD:
        raise SingularSymbolError(f"symbol sample with singular value {smin:.3g}")
    if m is None:
        m = smin
    if not 0 < m <= smin * (1 + 1e-12):
        raise InvalidArgumentError(f"m = {m} must lie in (0, {smin}]")
    b = state.blocks()
    y = np.linalg.solve(sym.samples, b[..., None])[..., 0]
    prob = float(m * m * np.vdot(y, y).real)
    return _renormalize(y, state), min(prob, 1.0)


def diag_apply(state, sym):
    """Multiply level block ``j`` by ``F_j``."""
    _check_conformal(state, sym)
    y = (sym.samples @ state.blocks()[..., None])[..., 0]
    return _renormalize(y, state)


@dataclass
class EmulationReport:
    fidelity: float
    success_prob: float
    n_samples: int
    a_fidelity: float
    ahat_fidelity: float
    success_probs: list = field(default_factory=list)


def _z_times(series):
    """``z * S(z)`` as a power series starting at 0."""
    return MatrixSeries(series.start + 1, series.coeffs)


def _as_power_series(series, length):
    return MatrixSeries(0, series.padded(0, length))


def _run_channel(f1, f2, f3, f4, n, m):
    """First block row of the circulant ``C2 C1^{-1} C3 + C4``."""
    cols = np.zeros((n, m, m), dtype=complex)
    probs = []
    for p in range(m):
        e = StateVector.basis(n, m, 0, p)
        total = np.zeros(n * m, dtype=complex)
        if not f2.is_zero and not f3.is_zero:
            s = qft(e)
            s = diag_apply(s, f3)
            s, prob = eigen_invert(s, f1)
            probs.append(prob)
            s = diag_apply(s, f2)
            total += iqft(s).vector()
        if not f4.is_zero:
            total += iqft(diag_apply(qft(e), f4)).vector()
        cols[:, :, p] = total.reshape(n, m)
    # Column 0 of a circulant holds c_{-k}; row 0 is c_k.
    row = cols[(-np.arange(n)) % n]
    return row, probs


def default_samples(it):
    deg = max(len(it.a_series), len(it.ahat_series))
    return next_pow2(8 * deg)


def emulate_cr_iteration_q(it, n_samples=None, eps=1e-13, reference=None):
    """Emulate one reduction step with order-``n_samples`` circulants.

    Two channels are run.  For the Toeplitz rows the symbols are
    ``T1 = I - alpha``, ``T2 = -beta``, ``T3 = beta`` and ``T4 = z (I - alpha)``,
    whose product row is ``z (I - A'(z))`` shifted; for the first row,
    ``T2 = -betah`` and ``T4 = I - alphah``.

    Parameters
    ----------
    it : CRIterate
    n_samples : int, optional
        Power of two, at least four times the series length; defaults to the
        smallest power of two above eight times the length.
    eps : float
        Truncation tolerance for the emulated output and the exact reference.
    reference : CRIterate, optional
        Exact next iterate; computed with :func:`cr_iterate` when omitted.

    Returns
    -------
    next_it : CRIterate
    fidelity : float
        Max norm of the difference from the exact step, over both series.
    success_prob : float
        Smallest post-selection weight among the pipeline runs.
    """
    if n_samples is None:
        n_samples = default_samples(it)
    n = check_power_of_two(n_samples, "n_samples")
    deg = max(len(it.a_series), len(it.ahat_series))
    if n < 4 * deg:
        raise InvalidArgumentError(f"n_samples = {n} is below four times the series length {deg}")
    m = it.m
    i_m = MatrixSeries.identity(m)
    alpha, beta = it.alpha(), it.beta()
    bh = it.beta_hat()
    if bh is None:
        bh = MatrixSeries.zeros(m)
    one_minus_alpha = i_m - alpha
    f1 = row_symbol(one_minus_alpha, n)
    f3 = row_symbol(beta, n)

    row_a, probs_a = _run_channel(
        f1, row_symbol(-beta, n), f3, row_symbol(_as_power_series(_z_times(one_minus_alpha),
                                                                  len(alpha) + 1), n), n, m)
    row_h, probs_h = _run_channel(
        f1, row_symbol(-bh, n), f3, row_symbol(i_m - it.alpha_hat(), n), n, m)

    eye = np.eye(m)
    a_coeffs = -row_a.real
    a_coeffs[1] += eye
    h_coeffs = -row_h.real
    h_coeffs[0] += eye
    # Row index c of the first channel holds A'_{c-1}.
    a_next = truncate_series(MatrixSeries(-1, a_coeffs), eps)
    ahat_next = truncate_series(MatrixSeries(0, h_coeffs), eps)
    if reference is None:
        reference = cr_iterate(it, eps, check_stochastic=False)
    fa = max_norm_series(a_next - reference.a_series)
    fh = max_norm_series(ahat_next - reference.ahat_series)
    probs = probs_a + probs_h
    prob = min(probs) if probs else 1.0
    out = CRIterate(it.n + 1, a_next, ahat_next, it.a_minus1, n, n)
    return out, max(fa, fh), prob


@dataclass
class ResourceEstimate:
    n_q: int
    qubits: int
    mu: float
    cost_terms: dict

    def to_dict(self):
        return {"n_q": self.n_q, "qubits": self.qubits, "mu": self.mu,
                "cost_terms": dict(self.cost_terms)}


def resource_estimate(m, d_max, mu=1.0, tau_load=1.0, tau_oracle=1.0, tau_readout=1.0):
    """Qubit count ``N (2 log2 N + 1)`` and the four cost contributions.

    ``N`` is the smallest power of two ``>= d_max * m``.  The cost terms are
    ``mu * tau_load``, ``mu * log2(N)**2``, ``mu * tau_oracle`` and
    ``tau_readout``.
    """
    m = check_positive_int(m, "m")
    d_max = check_positive_int(d_max, "d_max")
    for name, v in (("mu", mu), ("tau_load", tau_load), ("tau_oracle", tau_oracle),
                    ("tau_readout", tau_readout)):
        if not (np.isfinite(v) and v >= 0):
            raise InvalidArgumentError(f"{name} must be nonnegative, got {v}")
    n = next_pow2(d_max * m)
    k = n.bit_length() - 1
    terms = {
        "load": mu * tau_load,
        "qft": mu * k * k,
        "oracle": mu * tau_oracle,
        "readout": float(tau_readout),
    }
    terms["total"] = terms["load"] + terms["qft"] + terms["oracle"] + terms["readout"]
    return ResourceEstimate(n, n * (2 * k + 1), float(mu), terms)
