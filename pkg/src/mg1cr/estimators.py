"""scikit-learn style wrappers.

The "data" these estimators fit is a model, not a sample matrix, so they
follow the estimator conventions (constructor parameters only, ``fit``
returns ``self``, fitted attributes end in ``_``) without aiming at
pipeline or cross-validation compatibility.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from ._validation import check_model
from .cr import cr_iterate, cr_solve_gmin, initial_iterate, stop_metric
from .qpipeline import default_samples, emulate_cr_iteration_q
from .shift import cr_solve_shifted
from .stationary import boundary_pi0, drift, queue_metrics, stationary_levels

__all__ = ["CyclicReduction", "StationaryDistribution", "CirculantEmulator", "NotFittedError"]


class CyclicReduction(BaseEstimator):
    """Estimate ``G_min`` of an M/G/1-type model.

    Parameters
    ----------
    eps : float
    max_iter : int
    shift : bool
        Use the shifted solver.
    u : array_like, optional
        Shift vector, uniform by default.
    check_ergodicity : bool
        Only used by the plain solver.

    Attributes
    ----------
    g_ : ndarray
    n_iter_ : int
    history_ : list of float
    diagnostics_ : CRDiagnostics
    """

    def __init__(self, eps=1e-10, max_iter=64, shift=False, u=None, check_ergodicity=True):
        self.eps = eps
        self.max_iter = max_iter
        self.shift = shift
        self.u = u
        self.check_ergodicity = check_ergodicity

    def fit(self, X, y=None):
        model = check_model(X)
        if self.shift:
            res, diag = cr_solve_shifted(model, self.eps, self.max_iter, u=self.u)
            self.g_, self.history_, self.sigma_ = res.j, res.metric_history, res.sigma
        else:
            res, diag = cr_solve_gmin(model, self.eps, self.max_iter,
                                      check_ergodicity=self.check_ergodicity)
            self.g_, self.history_ = res.g, res.residual_history
        self.n_iter_ = res.iterations
        self.residual_ = res.residual
        self.diagnostics_ = diag
        self.m_ = model.m
        return self

    def transform(self, X=None):
        """Return the fitted ``G``."""
        check_is_fitted(self, "g_")
        return self.g_


class StationaryDistribution(BaseEstimator):
    """Level probabilities of an ergodic M/G/1-type model.

    ``predict(levels)`` returns the total probability of each requested
    level (zero beyond the truncation level).
    """

    def __init__(self, eps=1e-10, max_iter=64, shift=False, tail_tol=1e-12, k_max=10_000,
                 nu=None):
        self.eps = eps
        self.max_iter = max_iter
        self.shift = shift
        self.tail_tol = tail_tol
        self.k_max = k_max
        self.nu = nu

    def fit(self, X, y=None):
        model = check_model(X)
        rep = drift(model)
        cr = CyclicReduction(self.eps, self.max_iter, self.shift).fit(model)
        pi0 = boundary_pi0(model, cr.g_, rep)
        self.result_ = stationary_levels(model, cr.g_, pi0, self.tail_tol, self.k_max)
        nu = self.nu if self.nu is not None else model.nu
        self.metrics_ = queue_metrics(self.result_, nu)
        self.pi_ = self.result_.pi_levels
        self.g_ = cr.g_
        return self

    def predict(self, levels):
        check_is_fitted(self, "pi_")
        levels = np.asarray(levels, dtype=int)
        mass = self.result_.level_mass
        out = np.zeros(levels.shape)
        ok = (levels >= 0) & (levels < len(mass))
        out[ok] = mass[levels[ok]]
        return out

    def transform(self, levels):
        """Phase-resolved probabilities ``pi_i`` for each requested level."""
        check_is_fitted(self, "pi_")
        levels = np.asarray(levels, dtype=int).ravel()
        out = np.zeros((len(levels), self.pi_.shape[1]))
        ok = (levels >= 0) & (levels < len(self.pi_))
        out[ok] = self.pi_[levels[ok]]
        return out


class CirculantEmulator(BaseEstimator):
    """Run cyclic reduction with every step mirrored by the circulant emulator.

    Attributes
    ----------
    fidelities_ : list of float
    success_probs_ : list of float
    g_ : ndarray
    """

    def __init__(self, n_samples=None, eps=1e-10, max_iter=64):
        self.n_samples = n_samples
        self.eps = eps
        self.max_iter = max_iter

    def fit(self, X, y=None):
        model = check_model(X)
        inner = min(self.eps, 1e-15)
        it = initial_iterate(model)
        self.fidelities_, self.success_probs_ = [], []
        while stop_metric(it) > self.eps and it.n < self.max_iter:
            nxt = cr_iterate(it, inner)
            n = self.n_samples or default_samples(it)
            _, fid, prob = emulate_cr_iteration_q(it, n, reference=nxt)
            self.fidelities_.append(fid)
            self.success_probs_.append(prob)
            it = nxt
        self.g_ = it.g_estimate()
        self.n_iter_ = it.n
        return self

    def score(self, X=None, y=None):
        """Negative worst fidelity (higher is better)."""
        check_is_fitted(self, "fidelities_")
        return -max(self.fidelities_, default=0.0)
