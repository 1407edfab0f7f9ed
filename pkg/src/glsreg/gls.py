"""Geodesic least squares estimation.

Each observation contributes the squared Rao geodesic distance between an
observed Gaussian N(y_n, sigma_obs^2) centered on the measurement and the
modeled Gaussian N(mu_mod_n, sigma_mod_n^2) from error propagation. The
observed standard deviation is a free parameter (one per group of
observations), estimated jointly with the regression coefficients; its
freedom to exceed the modeled sigma is what makes the estimator robust to
outliers and misstated error bars.

The decomposition of the total distance into a sum of per-row squared
distances relies on the product property of the geodesic distance for
independent factors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize

from . import kernels, rng
from .models import Dataset, Design, ModelSpec

SIGMA_FLOOR_ABS = 1e-6  # floor for residual-based sigma initialization


@dataclass
class OptimOptions:
    """Optimizer settings; JSON-friendly via ``asdict``/``from_dict``."""

    max_iter: int = 10_000
    ftol: float = 1e-10      # objective decrement tolerance
    xtol: float = 1e-8       # step infinity-norm tolerance
    fd_step: float = 1e-6    # forward-difference step scale
    sigma_floor_scale: float = 1e-8   # lower sigma bound, times response scale
    sigma_ceil_scale: float = 1e3     # upper sigma bound, times response scale
    polish: bool = True      # Nelder-Mead pass after the quasi-Newton stage
    multistart: int = 0      # extra jittered restarts
    jitter: float = 0.2
    seed: int = 0            # stream for multistart jitter

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OptimOptions":
        return cls(**d)


@dataclass(frozen=True)
class GlsParameters:
    """Coefficients plus per-group observed standard deviations."""

    beta: tuple
    sigma_obs: dict

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if any(s <= 0 for s in self.sigma_obs.values()):
            raise ValueError("all sigma_obs must be > 0")


@dataclass
class FitResult:
    params: GlsParameters
    objective: float
    converged: bool
    n_iterations: int
    per_point_gd: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _group_param_map(codes: np.ndarray, labels):
    """Map group codes to sigma-parameter slots.

    Groups with fewer than two observations share one pooled slot, since a
    per-group sigma is not estimable from a single row.
    """
    counts = np.bincount(codes, minlength=len(labels))
    param_names = [g for g, c in zip(labels, counts) if c >= 2]
    slot = {}
    pooled_needed = any(c < 2 for c in counts)
    if pooled_needed:
        pooled_idx = len(param_names)
        param_names = param_names + ["__pooled__"]
    for i, (g, c) in enumerate(zip(labels, counts)):
        slot[g] = param_names.index(g) if c >= 2 else pooled_idx
    code_to_slot = np.array([slot[labels[c]] for c in range(len(labels))])
    return param_names, code_to_slot[codes], code_to_slot


def gls_objective(spec: ModelSpec, params: GlsParameters, data: Dataset) -> float:
    """Sum over rows of squared geodesic distances at the given parameters."""
    design = Design(spec, data)
    theta = design.internal_from_public(np.asarray(params.beta))
    mu, smod = design.mean_sigma(theta)
    missing = [g for g in design.labels if g not in params.sigma_obs]
    if missing:
        raise ValueError(f"sigma_obs missing for groups {missing}")
    sobs_by_code = np.array([params.sigma_obs[g] for g in design.labels])
    return kernels.sum_sq_rao(design.y_eff, sobs_by_code[design.codes], mu, smod)


def matched_sigma_objective(spec: ModelSpec, beta, data: Dataset) -> float:
    """Diagnostic objective with the observed sigma tied to the modeled one.

    Constraining sigma_obs = sigma_mod per row reduces each term to a
    monotone function of the Mahalanobis ratio |y - mu| / sigma_mod.
    """
    design = Design(spec, data)
    theta = design.internal_from_public(np.asarray(beta, dtype=float))
    mu, smod = design.mean_sigma(theta)
    return kernels.sum_sq_rao(design.y_eff, smod, mu, smod)


def mahalanobis_objective(spec: ModelSpec, beta, data: Dataset) -> float:
    """Classical weighted least squares objective, sum((y - mu)^2 / sigma_mod^2)."""
    design = Design(spec, data)
    theta = design.internal_from_public(np.asarray(beta, dtype=float))
    mu, smod = design.mean_sigma(theta)
    return float(np.sum(((design.y_eff - mu) / smod) ** 2))


def _ols_beta_internal(design: Design) -> np.ndarray:
    """Least-squares coefficients in internal layout, used for initialization."""
    from .baselines import _linear_lstsq  # local import to avoid a cycle

    spec = design.spec
    if spec.form == "simple-linear":
        b = _linear_lstsq(design.X, design.y_eff, intercept=False)
        return b
    if spec.form == "affine-linear":
        return _linear_lstsq(design.X, design.y_eff, intercept=True)
    # log-linear and power-law both initialize from log-space least squares
    ly = design.y_eff if spec.form == "log-linear" else np.log(design.y)
    coeffs = _linear_lstsq(design.logX, ly, intercept=True)
    if spec.form == "log-linear":
        return coeffs
    out = coeffs.copy()
    out[0] = math.exp(coeffs[0])
    return out


def _forward_diff_grad(fun, x, f0, step_scale):
    g = np.empty_like(x)
    for i in range(x.size):
        h = step_scale * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        g[i] = (fun(xp) - f0) / h
    return g


def fit_gls(spec: ModelSpec, data: Dataset, init: GlsParameters | None = None,
            options: OptimOptions | None = None) -> FitResult:
    """Minimize the total squared geodesic distance over (beta, sigma_obs).

    Bound-constrained quasi-Newton (L-BFGS-B) with forward-difference
    gradients, followed by a Nelder-Mead polish; sigma parameters are kept
    inside [floor, ceiling] bounds scaled to the response. Initialization
    defaults to ordinary least squares with per-group residual standard
    deviations. Deterministic given ``init`` and ``options``. On optimizer
    failure the best point found is returned with ``converged=False``.
    """
    opts = options or OptimOptions()
    design = Design(spec, data)
    n_coef = spec.coefficient_count
    param_names, row_slots, _ = _group_param_map(design.codes, design.labels)
    n_sigma = len(param_names)
    if design.n < n_coef + n_sigma:
        warnings.warn(
            f"only {design.n} observations for {n_coef + n_sigma} parameters; "
            "fit may be underdetermined", stacklevel=2)

    y_eff = design.y_eff
    scale = float(np.std(y_eff))
    if scale == 0.0:
        scale = max(float(np.mean(np.abs(y_eff))), 1.0)
    lo, hi = opts.sigma_floor_scale * scale, opts.sigma_ceil_scale * scale

    # -- initial point -------------------------------------------------------
    if init is not None:
        theta_b = design.internal_from_public(np.asarray(init.beta, dtype=float))
        sig0 = np.array([init.sigma_obs.get(g, init.sigma_obs.get("__pooled__", scale))
                         for g in param_names])
    else:
        theta_b = _ols_beta_internal(design)
        resid = y_eff - design.mean(theta_b)
        sig0 = np.empty(n_sigma)
        for k, name in enumerate(param_names):
            mask = row_slots == k
            sig0[k] = max(float(np.std(resid[mask])), SIGMA_FLOOR_ABS)
    sig0 = np.clip(sig0, lo, hi)
    x0 = np.concatenate([theta_b, sig0])

    def objective(x):
        mu, smod = design.mean_sigma(x[:n_coef])
        return kernels.sum_sq_rao(y_eff, x[n_coef:][row_slots], mu, smod)

    bounds = [(None, None)] * n_coef + [(lo, hi)] * n_sigma

    def run_lbfgsb(x_start):
        def grad(x):
            return _forward_diff_grad(objective, x, objective(x), opts.fd_step)

        return minimize(objective, x_start, method="L-BFGS-B", jac=grad, bounds=bounds,
                        options=dict(ftol=opts.ftol, gtol=opts.xtol,
                                     maxiter=opts.max_iter))

    best = run_lbfgsb(x0)
    n_iter = int(best.nit)
    converged = bool(best.success)

    if opts.polish or not converged:
        nm = minimize(objective, best.x, method="Nelder-Mead", bounds=bounds,
                      options=dict(fatol=opts.ftol * (1.0 + abs(best.fun)),
                                   xatol=opts.xtol,
                                   maxiter=opts.max_iter, maxfev=4 * opts.max_iter))
        n_iter += int(nm.nit)
        if nm.fun < best.fun:
            best = nm
        # the simplex contracting below tolerance at the incumbent point is
        # itself a convergence certificate
        converged = converged or bool(nm.success)

    if opts.multistart > 0:
        jrng = rng.stream(opts.seed, 0x6A17)
        for _ in range(opts.multistart):
            x_j = x0 * (1.0 + opts.jitter * jrng.uniform(-1.0, 1.0, x0.size))
            x_j[n_coef:] = np.clip(x_j[n_coef:], lo, hi)
            cand = run_lbfgsb(x_j)
            n_iter += int(cand.nit)
            if cand.fun < best.fun:
                best = cand
                converged = bool(cand.success)

    x_hat = np.asarray(best.x, dtype=float)
    beta_pub = design.public_from_internal(x_hat[:n_coef])
    sigma_map = {name: float(v) for name, v in zip(param_names, x_hat[n_coef:])}
    # expose a sigma for every group label (pooled groups share the value)
    full_sigma = {g: sigma_map[g if g in sigma_map else "__pooled__"]
                  for g in design.labels}

    mu, smod = design.mean_sigma(x_hat[:n_coef])
    gd = kernels.rao_distance_many(y_eff, x_hat[n_coef:][row_slots], mu, smod)
    return FitResult(
        params=GlsParameters(beta=tuple(beta_pub), sigma_obs=full_sigma),
        objective=float(best.fun),
        converged=converged,
        n_iterations=n_iter,
        per_point_gd=gd,
        diagnostics={
            "sigma_bounds": (lo, hi),
            "pooled_groups": [g for g in design.labels if g not in sigma_map],
            "mean_sigma_mod": float(np.mean(smod)),
        },
    )
