"""Comparison estimators: OLS, MAP with error propagation, TLS, robust IRLS.

All four return coefficients in the public layout of the model form (the
log-linear intercept is reported as the multiplicative constant b0, not
its log), so results are directly comparable with the geodesic estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .gls import OptimOptions, _forward_diff_grad
from .models import AFFINE, LOGLIN, POWER, SIMPLE, Dataset, Design, ModelSpec

BISQUARE_C = 4.685
MAD_SCALE = 0.6745


@dataclass
class BaselineResult:
    method: str
    beta: tuple
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _linear_lstsq(X, y, intercept):
    A = np.column_stack([np.ones(len(y)), X]) if intercept else np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise np.linalg.LinAlgError(
            f"design matrix is rank deficient (rank {rank} < {A.shape[1]})")
    return beta


def _design_matrix(design: Design):
    """(response, regressors, intercept flag) for the linearizable forms."""
    form = design.spec.form
    if form == SIMPLE:
        return design.y_eff, design.X, False
    if form == AFFINE:
        return design.y_eff, design.X, True
    if form == LOGLIN:
        return design.y_eff, design.logX, True
    raise ValueError(f"{form} form has no linear design")


def _publish(design: Design, coeffs):
    return tuple(float(v) for v in
                 design.public_from_internal(np.asarray(coeffs, dtype=float)))


def fit_ols(spec: ModelSpec, data: Dataset) -> BaselineResult:
    """Ordinary least squares on the model's response space.

    Linearizable forms are solved exactly; the power-law form minimizes the
    same sum of squared residuals with Levenberg-Marquardt, initialized
    from log-space least squares.
    """
    design = Design(spec, data)
    if spec.form != POWER:
        y, X, intercept = _design_matrix(design)
        coeffs = _linear_lstsq(X, y, intercept)
        return BaselineResult("OLS", _publish(design, coeffs), True)

    b0 = _linear_lstsq(design.logX, np.log(design.y), intercept=True)
    b0[0] = math.exp(b0[0])

    def residuals(b):
        return design.y - design.mean(b)

    sol = least_squares(residuals, b0, method="lm", xtol=1e-12, ftol=1e-12,
                        max_nfev=20_000)
    return BaselineResult("OLS", tuple(sol.x), bool(sol.status > 0),
                          diagnostics={"cost": float(sol.cost), "nfev": int(sol.nfev)})


def fit_map(spec: ModelSpec, data: Dataset,
            options: OptimOptions | None = None) -> BaselineResult:
    """Maximum a posteriori with a uniform prior: maximum likelihood where
    the modeled sigma carries the coefficients inside it.

    Minimizes sum_n [ ln sigma_mod_n(beta) + (y_n - mu_n(beta))^2 /
    (2 sigma_mod_n(beta)^2) ]; with all predictor error bars zero this
    reduces to weighted least squares.
    """
    opts = options or OptimOptions()
    design = Design(spec, data)
    if np.all(design.rel_y == 0) and np.all(design.rel_X == 0):
        raise ValueError("MAP requires error bars on at least one variable")
    y = design.y_eff

    def nll(theta):
        mu, smod = design.mean_sigma(theta)
        return float(np.sum(np.log(smod) + 0.5 * ((y - mu) / smod) ** 2))

    from .gls import _ols_beta_internal

    x0 = _ols_beta_internal(design)

    def grad(x):
        return _forward_diff_grad(nll, x, nll(x), opts.fd_step)

    sol = minimize(nll, x0, method="L-BFGS-B", jac=grad,
                   options=dict(ftol=opts.ftol, gtol=opts.xtol, maxiter=opts.max_iter))
    best, converged = sol, bool(sol.success)
    if opts.polish or not converged:
        nm = minimize(nll, best.x, method="Nelder-Mead",
                      options=dict(fatol=opts.ftol * (1.0 + abs(best.fun)),
                                   xatol=opts.xtol,
                                   maxiter=opts.max_iter, maxfev=4 * opts.max_iter))
        if nm.fun < best.fun:
            best = nm
            converged = bool(nm.success) or converged
    return BaselineResult("MAP", _publish(design, best.x), converged,
                          diagnostics={"nll": float(best.fun)})


def fit_tls(spec: ModelSpec, data: Dataset) -> BaselineResult:
    """Total least squares via the singular value decomposition.

    The smallest right singular vector of the augmented data matrix defines
    the fit. Affine and log-linear forms center the columns and recover the
    intercept afterward; the no-intercept simple-linear case works on the
    uncentered [x y]. Not defined for the raw power-law form.
    """
    if spec.form == POWER:
        raise ValueError("TLS is not applicable to the raw power-law form")
    design = Design(spec, data)
    y, X, intercept = _design_matrix(design)
    if intercept:
        xm, ym = X.mean(axis=0), y.mean()
        A = np.column_stack([X - xm, y - ym])
    else:
        A = np.column_stack([X, y])
    _, svals, vt = np.linalg.svd(A, full_matrices=False)
    v = vt[-1]
    degenerate = bool(svals.size > 1 and
                      svals[-2] - svals[-1] <= 1e-12 * max(svals[0], 1.0))
    if abs(v[-1]) < 1e-300:
        raise np.linalg.LinAlgError("TLS solution is vertical (zero response component)")
    slopes = -v[:-1] / v[-1]
    coeffs = np.concatenate([[ym - slopes @ xm], slopes]) if intercept else slopes
    return BaselineResult("TLS", _publish(design, coeffs), True,
                          diagnostics={"singular_values": [float(s) for s in svals],
                                       "degenerate": degenerate})


def fit_rob(spec: ModelSpec, data: Dataset, c: float = BISQUARE_C,
            tol: float = 1e-8, max_iter: int = 400) -> BaselineResult:
    """Iteratively reweighted least squares with Tukey bisquare weights.

    Weights w = (1 - (r/(c*s))^2)^2 for |r| < c*s, else 0, with the scale
    s = median(|r|)/0.6745 re-estimated each iteration. Stops when the
    relative coefficient change drops below ``tol``; non-convergence
    returns the last iterate flagged.
    """
    if spec.form == POWER:
        raise ValueError("robust IRLS is not applicable to the raw power-law form")
    design = Design(spec, data)
    y, X, intercept = _design_matrix(design)
    A = np.column_stack([np.ones(len(y)), X]) if intercept else np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    beta = _linear_lstsq(X, y, intercept)
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        r = y - A @ beta
        s = float(np.median(np.abs(r))) / MAD_SCALE
        if s <= 0.0:
            converged = True  # exact fit: all weights would be 1
            break
        u = r / (c * s)
        w = np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 2, 0.0)
        sw = np.sqrt(w)
        new_beta, _, rank, _ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
        if rank < A.shape[1]:
            raise np.linalg.LinAlgError("weighted design became rank deficient")
        if np.max(np.abs(new_beta - beta)) <= tol * (1.0 + np.max(np.abs(beta))):
            beta = new_beta
            converged = True
            break
        beta = new_beta
    return BaselineResult("ROB", _publish(design, beta), converged,
                          diagnostics={"n_iterations": n_iter, "scale": float(s)})
