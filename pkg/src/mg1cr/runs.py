"""Orchestration of solver runs into plain report dictionaries.

Every report is a nested dict of JSON-compatible values with finite
numbers only, so it can be dumped deterministically.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_probability_vector, check_tolerance
from .blocktoeplitz import next_pow2
from .cr import cr_iterate, cr_solve_gmin, initial_iterate, stop_metric
from .exceptions import InvalidArgumentError, PreconditionError
from .qpipeline import default_samples, emulate_cr_iteration_q, resource_estimate
from .shift import cr_solve_shifted, error_bound_lin, fit_decay
from .stationary import boundary_pi0, drift, queue_metrics, stationary_levels

__all__ = ["RunConfig", "run_solve", "run_stationary", "run_metrics", "run_ergodicity",
           "run_emulate", "run_estimate"]


@dataclass
class RunConfig:
    eps: float = 1e-10
    max_iter: int = 64
    shift: bool = False
    u: object = None
    tail_tol: float = 1e-12
    k_max: int = 10_000
    n_samples: int | None = None
    fmt: str = "json"
    mu: float = 1.0
    tau_load: float = 1.0
    tau_oracle: float = 1.0
    tau_readout: float = 1.0
    d_max: int | None = None
    max_levels_reported: int = 20

    def validate(self, m=None):
        check_tolerance(self.eps, "eps")
        check_tolerance(self.tail_tol, "tail_tol")
        check_positive_int(self.max_iter, "max_iter", minimum=0)
        check_positive_int(self.k_max, "k_max")
        if self.n_samples is not None:
            check_positive_int(self.n_samples, "n_samples")
        if self.fmt not in ("json", "csv", "text"):
            raise InvalidArgumentError(f"unknown format {self.fmt!r}")
        if m is not None and self.u is not None:
            self.u = check_probability_vector(self.u, m, "u")
        return self


def _f(x):
    return float(x)


def _mat(x):
    return [[float(v) for v in row] for row in np.asarray(x, dtype=float)]


def _vec(x):
    return [float(v) for v in np.ravel(x)]


def _model_summary(model):
    return {"type": model.kind, "m": model.m, "a_blocks": model.d, "b_blocks": len(model.b)}


def _drift_summary(rep):
    return {
        "alpha": _vec(rep.alpha),
        "a_vec": _vec(rep.a_vec),
        "b_vec": _vec(rep.b_vec),
        "varrho": _f(rep.varrho),
        "ergodic": bool(rep.ergodic),
    }


def _require_ergodic(rep):
    if not rep.ergodic:
        raise PreconditionError(
            f"model is not ergodic: drift varrho = {rep.varrho:+.6g} (must be < 0)")


def _solve_g(model, cfg):
    if cfg.shift:
        res, diag = cr_solve_shifted(model, cfg.eps, cfg.max_iter, u=cfg.u)
        fit = fit_decay(diag.v_norm_per_iter)
        out = {
            "method": "shifted-cyclic-reduction",
            "g": _mat(res.j),
            "iterations": res.iterations,
            "metric_history": _vec(res.metric_history),
            "residual": _f(res.residual),
            "sigma": _f(res.sigma),
            "certified_bound": _f(res.certified_bound),
        }
        diagnostics = {
            "gamma_per_iter": _vec(diag.gamma_per_iter),
            "v_norm_per_iter": _vec(diag.v_norm_per_iter),
            "bound_exp": _f(diag.bound_exp),
        }
        if fit is not None:
            theta, sigma_rate = fit
            diagnostics["decay_fit"] = {"theta": theta, "sigma_rate": sigma_rate}
            diagnostics["bound_lin"] = _f(
                error_bound_lin(diag.upsilon, theta, sigma_rate, res.iterations))
        return res.j, out, diagnostics
    res, diag = cr_solve_gmin(model, cfg.eps, cfg.max_iter)
    out = {
        "method": "cyclic-reduction",
        "g": _mat(res.g),
        "iterations": res.iterations,
        "metric_history": _vec(res.residual_history),
        "stop_metric": _f(res.stop_metric),
        "residual": _f(res.residual),
    }
    diagnostics = {
        "gamma_per_iter": _vec(diag.gamma_per_iter),
        "v_norm_per_iter": _vec(diag.v_norm_per_iter),
        "w_rowsum_defect_per_iter": _vec(diag.w_rowsum_defect_per_iter),
        "bound_exp": _f(diag.bound_exp),
    }
    return res.g, out, diagnostics


def _stationary(model, g, rep, cfg):
    pi0 = boundary_pi0(model, g, rep)
    return stationary_levels(model, g, pi0, cfg.tail_tol, cfg.k_max)


def _metrics_summary(met, cfg):
    k = min(cfg.max_levels_reported, len(met.tails))
    out = {
        "prob_queue_positive": _f(met.prob_busy),
        "mean_queue": _f(met.mean_queue),
        "mean_queue_truncation_bound": _f(met.mean_queue_truncation_bound),
        "tails": _vec(met.tails[:k]),
    }
    if met.mean_sojourn is not None:
        out["mean_sojourn"] = _f(met.mean_sojourn)
    return out


def _stationary_summary(st, cfg, full=False):
    k = len(st.pi_levels) if full else min(cfg.max_levels_reported, len(st.pi_levels))
    return {
        "pi0": _vec(st.pi0),
        "truncation": int(st.truncation),
        "tail_mass_bound": _f(st.tail_mass_bound),
        "residual": _f(st.residual),
        "truncated": bool(st.truncated),
        "level_mass": _vec(st.level_mass[:k]),
    }


def run_solve(model, cfg):
    """Drift check, G, stationary vector and queue metrics."""
    cfg.validate(model.m)
    rep = drift(model)
    _require_ergodic(rep)
    g, solver, diagnostics = _solve_g(model, cfg)
    st = _stationary(model, g, rep, cfg)
    met = queue_metrics(st, model.nu)
    return {
        "command": "solve",
        "model": _model_summary(model),
        "drift": _drift_summary(rep),
        "solver": solver,
        "stationary": _stationary_summary(st, cfg),
        "metrics": _metrics_summary(met, cfg),
        "diagnostics": diagnostics,
    }


def run_stationary(model, cfg):
    cfg.validate(model.m)
    rep = drift(model)
    _require_ergodic(rep)
    g, solver, _ = _solve_g(model, cfg)
    st = _stationary(model, g, rep, cfg)
    summary = _stationary_summary(st, cfg, full=True)
    summary["pi_levels"] = [_vec(p) for p in st.pi_levels]
    return {
        "command": "stationary",
        "model": _model_summary(model),
        "solver": {"method": solver["method"], "iterations": solver["iterations"]},
        "stationary": summary,
    }


def run_metrics(model, cfg):
    cfg.validate(model.m)
    rep = drift(model)
    _require_ergodic(rep)
    g, solver, _ = _solve_g(model, cfg)
    st = _stationary(model, g, rep, cfg)
    met = queue_metrics(st, model.nu)
    return {
        "command": "metrics",
        "model": _model_summary(model),
        "metrics": _metrics_summary(met, cfg),
    }


def run_ergodicity(model, cfg):
    cfg.validate(model.m)
    rep = drift(model)
    return {"command": "ergodicity", "model": _model_summary(model), "drift": _drift_summary(rep)}


def run_emulate(model, cfg):
    """Plain cyclic reduction with every step also run through the emulator."""
    cfg.validate(model.m)
    rep = drift(model)
    _require_ergodic(rep)
    g, solver, _ = _solve_g(model, RunConfig(eps=cfg.eps, max_iter=cfg.max_iter))
    inner = min(cfg.eps, 1e-15)
    it = initial_iterate(model)
    steps = []
    while stop_metric(it) > cfg.eps and it.n < cfg.max_iter:
        nxt = cr_iterate(it, inner)
        if cfg.n_samples is None:
            n = default_samples(it)
        else:
            # Later steps carry longer series; never go below the minimum order.
            n = max(next_pow2(cfg.n_samples), next_pow2(4 * max(len(it.a_series), len(it.ahat_series))))
        _, fid, prob = emulate_cr_iteration_q(it, n, reference=nxt)
        steps.append({"n": it.n, "n_samples": n, "fidelity": _f(fid), "success_prob": _f(prob)})
        it = nxt
    return {
        "command": "emulate",
        "model": _model_summary(model),
        "solver": solver,
        "emulation": {
            "steps": steps,
            "max_fidelity": max((s["fidelity"] for s in steps), default=0.0),
            "min_success_prob": min((s["success_prob"] for s in steps), default=1.0),
        },
    }


def run_estimate(model, cfg):
    cfg.validate(model.m)
    d_max = cfg.d_max if cfg.d_max is not None else max(model.d, len(model.b))
    est = resource_estimate(model.m, d_max, cfg.mu, cfg.tau_load, cfg.tau_oracle,
                            cfg.tau_readout)
    return {
        "command": "estimate",
        "model": _model_summary(model),
        "estimate": {"d_max": int(d_max), **est.to_dict()},
    }
