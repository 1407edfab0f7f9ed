"""Deterministic synthetic-data generators for the experiment suite.

Every generator is a pure function of its parameters and an integer seed
(drawing from named Philox substreams), and every generated dataset
carries its ground truth in ``Dataset.meta`` (true coefficients, outlier
indices, per-group noise levels, rejection counts) for verification.

Error-bar convention: the stored relative errors encode the *known* noise
standard deviations of the generating process, expressed relative to the
measured values so that the downstream conversion sigma = rel * |value|
recovers them exactly. An outlier corrupts the measurement, not the
quoted error bar.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .models import Dataset, Observation

# Fixed predictor grid for the one-predictor outlier study: ten uneven
# points in [0, 50]. Part of the artifact contract.
OUTLIER_1D_GRID = (2.0, 5.0, 9.0, 14.0, 20.0, 27.0, 33.0, 40.0, 46.0, 50.0)
OUTLIER_1D_BETA = 3.0
OUTLIER_1D_SIGMA_Y = 2.0
OUTLIER_1D_SIGMA_X = 0.5

# Fixed grid for the one-predictor log study: ten log-spaced, jittered
# points in (0, 60]. Part of the artifact contract.
LOG_1D_GRID = (1.5, 2.53, 3.2, 5.54, 7.42, 12.81, 16.15, 28.03, 39.05, 60.0)
LOG_1D_BETA = (0.8, 1.4)
LOG_1D_REL_NOISE = 0.40

# Multi-predictor studies: measurement-level relative noise (quoted error
# bars) and the heavier log-study noise levels.
MULTI_REL_X = (0.04, 0.01, 0.03)
MULTI_REL_Y = 0.15
LOG_MULTI_REL_X = (0.20, 0.05, 0.15)
LOG_MULTI_REL_Y = 0.15
N_OUTLIERS_MULTI = 10
OUTLIER_FACTOR_RANGE = (1.5, 2.5)

# Device-like predictor geometry: global log10 ranges span ~1.5 decades
# per variable; a latent per-group scale places density and field low when
# the surface is large (and vice versa), giving the strong cross-variable
# collinearity of multi-device datasets. Within-group spreads (decades):
# density is scanned widely, field somewhat, surface is nearly fixed.
PREDICTOR_RANGES = ((0.32, 10.0), (0.25, 8.0), (6.3, 200.0))
PREDICTOR_SPREADS = (0.30, 0.15, 0.05)
_PREDICTOR_DIRECTIONS = (-1, -1, +1)

# Surrogate multi-device response: true scaling law, per-device offsets,
# and per-device lognormal noise levels anti-correlated with device size.
SURROGATE_BETA = (0.05, 0.7, 0.8, 0.9)
SURROGATE_OFFSET_RANGE = (0.75, 1.33)
SURROGATE_NOISE_RANGE = (0.15, 0.40)

# Coefficient grid for the multi-predictor studies.
GRID_BETA0 = tuple(np.round(np.arange(1.0, 20.05, 0.1), 1))
GRID_EXPONENTS = tuple(np.round(np.arange(0.1, 2.05, 0.1), 1))


def _positive_noise(gen, truth, rel):
    """Multiplicative Gaussian noise truncated to positive by redrawing.

    Returns the noisy values and the number of rejected draws.
    """
    truth = np.asarray(truth, dtype=float)
    relv = np.broadcast_to(np.asarray(rel, dtype=float), truth.shape).copy()
    out = truth * (1.0 + relv * gen.standard_normal(truth.shape))
    rejections = 0
    bad = np.flatnonzero(out <= 0.0)
    while bad.size:
        rejections += int(bad.size)
        out[bad] = truth[bad] * (1.0 + relv[bad] * gen.standard_normal(bad.size))
        bad = bad[out[bad] <= 0.0]
    return out, rejections


def _safe_abs(v):
    return np.maximum(np.abs(v), 1e-300)


def gen_outlier_1d(seed: int, beta: float = OUTLIER_1D_BETA,
                   sigma_y: float = OUTLIER_1D_SIGMA_Y,
                   sigma_x: float = OUTLIER_1D_SIGMA_X,
                   outlier: bool = True) -> Dataset:
    """Ten-point linear law y = beta*x with additive noise and one outlier.

    The outlier multiplies one of the last three responses by a factor
    uniform in [1.5, 2.5].
    """
    gen = rng.stream(seed, 0)
    xi = np.array(OUTLIER_1D_GRID)
    x = xi + gen.normal(0.0, 1.0, xi.size) * sigma_x
    y = beta * xi + gen.normal(0.0, 1.0, xi.size) * sigma_y
    k = int(gen.integers(7, 10))
    factor = float(gen.uniform(*OUTLIER_FACTOR_RANGE))
    meta = {"true_beta": [beta], "sigma_y": sigma_y, "sigma_x": sigma_x,
            "outlier_indices": [], "outlier_factors": []}
    if outlier:
        y[k] *= factor
        meta["outlier_indices"] = [k]
        meta["outlier_factors"] = [factor]
    rel_y = sigma_y / _safe_abs(y)
    rel_x = sigma_x / _safe_abs(x)
    obs = [Observation(float(y[i]), (float(x[i]),), float(rel_y[i]),
                       (float(rel_x[i]),)) for i in range(xi.size)]
    return Dataset(obs, meta=meta)


def gen_log_1d(seed: int, beta0: float = LOG_1D_BETA[0],
               beta1: float = LOG_1D_BETA[1],
               rel_noise: float = LOG_1D_REL_NOISE) -> Dataset:
    """Ten-point power law y = b0*x^b1 with 40% relative noise on both axes.

    Values are kept strictly positive by redrawing nonpositive noise
    realizations (counted in ``meta['rejections']``); the natural-log
    transform is applied downstream by the log-linear model form.
    """
    gen = rng.stream(seed, 0)
    xi = np.array(LOG_1D_GRID)
    eta = beta0 * xi**beta1
    x, rej_x = _positive_noise(gen, xi, rel_noise)
    y, rej_y = _positive_noise(gen, eta, rel_noise)
    obs = [Observation(float(y[i]), (float(x[i]),), rel_noise, (rel_noise,))
           for i in range(xi.size)]
    return Dataset(obs, meta={"true_beta": [beta0, beta1],
                              "rejections": rej_x + rej_y})


def surrogate_predictors(n_rows: int = 616, n_groups: int = 8, seed: int = 0,
                         spreads=PREDICTOR_SPREADS):
    """Device-like predictor values.

    Returns (X, group_codes) with X of shape (n_rows, 3); rows are grouped
    into ``n_groups`` contiguous blocks of near-equal size.
    """
    if n_rows < n_groups:
        raise ValueError("need at least one row per group")
    gen = rng.stream(seed, 0)
    counts = np.full(n_groups, n_rows // n_groups)
    counts[: n_rows % n_groups] += 1
    codes = np.repeat(np.arange(n_groups), counts)
    size = np.sort(gen.uniform(0.0, 1.0, n_groups))
    jitter = gen.uniform(-0.1, 0.1, (n_groups, 3))
    lo = np.log10([r[0] for r in PREDICTOR_RANGES])
    hi = np.log10([r[1] for r in PREDICTOR_RANGES])
    X = np.empty((n_rows, 3))
    for j, direction in enumerate(_PREDICTOR_DIRECTIONS):
        s = spreads[j]
        t = size if direction > 0 else 1.0 - size
        centers = np.clip(lo[j] + s + (hi[j] - lo[j] - 2 * s) * t + jitter[:, j],
                          lo[j] + s, hi[j] - s)
        for g in range(n_groups):
            mask = codes == g
            X[mask, j] = 10.0 ** gen.uniform(centers[g] - s, centers[g] + s,
                                             int(mask.sum()))
    return X, codes


def load_predictor_csv(source) -> np.ndarray:
    """Read a 3-column predictor file with header ``x1,x2,x3``."""
    import csv

    def _read(fh):
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x1", "x2", "x3"]:
            raise ValueError(f"line 1: predictor header must be ['x1', 'x2', 'x3'], got {header!r}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(rec)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if not rows:
            raise ValueError("predictor file has no data rows")
        return np.asarray(rows)

    if hasattr(source, "read"):
        return _read(source)
    with open(source, "r", newline="", encoding="utf-8") as fh:
        return _read(fh)


def gen_outlier_multi(predictors: np.ndarray, beta, seed: int,
                      n_outliers: int = N_OUTLIERS_MULTI,
                      rel_x=MULTI_REL_X, rel_y: float = MULTI_REL_Y) -> Dataset:
    """Linear law y = b0 + b.x on fixed predictors, with outliers.

    Relative Gaussian noise at the quoted levels on every variable
    (heteroscedastic in absolute terms), then ``n_outliers`` randomly
    chosen responses are multiplied by factors uniform in [1.5, 2.5].
    """
    xi = np.asarray(predictors, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if xi.ndim != 2 or beta.shape != (xi.shape[1] + 1,):
        raise ValueError("predictors must be (n, P) and beta length P+1")
    if n_outliers >= xi.shape[0]:
        raise ValueError("n_outliers must be smaller than the dataset")
    gen = rng.stream(seed, 0)
    relx = np.asarray(rel_x, dtype=float)
    eta = beta[0] + xi @ beta[1:]
    x = xi * (1.0 + relx * gen.standard_normal(xi.shape))
    y = eta * (1.0 + rel_y * gen.standard_normal(eta.shape))
    idx = np.sort(gen.choice(xi.shape[0], size=n_outliers, replace=False))
    factors = gen.uniform(*OUTLIER_FACTOR_RANGE, size=n_outliers)
    y[idx] *= factors
    # error bars quote the known noise sigmas (rel * true value)
    rel_y_rows = rel_y * eta / _safe_abs(y)
    rel_x_rows = relx * xi / _safe_abs(x)
    obs = [Observation(float(y[i]), tuple(x[i]), float(rel_y_rows[i]),
                       tuple(rel_x_rows[i])) for i in range(xi.shape[0])]
    return Dataset(obs, meta={"true_beta": [float(b) for b in beta],
                              "outlier_indices": [int(i) for i in idx],
                              "outlier_factors": [float(f) for f in factors]})


def gen_log_multi(predictors: np.ndarray, beta, seed: int,
                  rel_x=LOG_MULTI_REL_X, rel_y: float = LOG_MULTI_REL_Y) -> Dataset:
    """Power law y = b0 * prod x^b on fixed predictors, heavier noise.

    Relative Gaussian noise truncated positive by redrawing; the log-linear
    model form applies the natural-log transform downstream.
    """
    xi = np.asarray(predictors, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if xi.ndim != 2 or beta.shape != (xi.shape[1] + 1,):
        raise ValueError("predictors must be (n, P) and beta length P+1")
    gen = rng.stream(seed, 0)
    relx = np.asarray(rel_x, dtype=float)
    eta = beta[0] * np.prod(xi ** beta[1:], axis=1)
    rejections = 0
    x = np.empty_like(xi)
    for j in range(xi.shape[1]):
        x[:, j], rj = _positive_noise(gen, xi[:, j], relx[j])
        rejections += rj
    y, ry = _positive_noise(gen, eta, rel_y)
    rejections += ry
    obs = [Observation(float(y[i]), tuple(x[i]), rel_y, tuple(relx))
           for i in range(xi.shape[0])]
    return Dataset(obs, meta={"true_beta": [float(b) for b in beta],
                              "rejections": rejections})


def gen_surrogate_itpa(n_rows: int = 600, n_groups: int = 8, seed: int = 0) -> Dataset:
    """Multi-device power-law dataset standing in for a real database.

    Per-device multiplicative offsets and lognormal response noise with
    per-device levels in [0.15, 0.40], larger for smaller devices; the
    quoted (stored) error bars are the measurement-level values, so the
    extra device variability is only discoverable through the fitted
    observed sigmas.
    """
    gen = rng.stream(seed, 1)
    xi, codes = surrogate_predictors(n_rows, n_groups, seed)
    lo, hi = SURROGATE_OFFSET_RANGE
    offsets = np.exp(gen.uniform(math.log(lo), math.log(hi), n_groups))
    mean_surface = np.array([xi[codes == g, 2].mean() for g in range(n_groups)])
    size_rank = np.argsort(np.argsort(mean_surface))
    lam_lo, lam_hi = SURROGATE_NOISE_RANGE
    lam = lam_hi - (lam_hi - lam_lo) * size_rank / max(n_groups - 1, 1)
    lam = np.clip(lam + gen.uniform(-0.02, 0.02, n_groups), lam_lo, lam_hi)
    beta = np.asarray(SURROGATE_BETA)
    eta = beta[0] * np.prod(xi ** beta[1:], axis=1) * offsets[codes]
    y = eta * np.exp(lam[codes] * gen.standard_normal(n_rows))
    relx = np.asarray(MULTI_REL_X)
    x = np.empty_like(xi)
    rejections = 0
    for j in range(3):
        x[:, j], rj = _positive_noise(gen, xi[:, j], relx[j])
        rejections += rj
    obs = [Observation(float(y[i]), tuple(x[i]), MULTI_REL_Y, tuple(relx),
                       group=f"dev{codes[i]}") for i in range(n_rows)]
    deviations = {"y": float(np.mean(np.abs(y / eta - 1.0)))}
    for j in range(3):
        deviations[f"x{j + 1}"] = float(np.mean(np.abs(x[:, j] / xi[:, j] - 1.0)))
    return Dataset(obs, meta={
        "true_beta": [float(b) for b in beta],
        "group_offsets": {f"dev{g}": float(offsets[g]) for g in range(n_groups)},
        "group_noise": {f"dev{g}": float(lam[g]) for g in range(n_groups)},
        "rejections": rejections,
        "mean_abs_rel_deviation": deviations,
    })


@dataclass(frozen=True)
class ExperimentGenerator:
    """A named, parameterized generator; ``generate(seed)`` yields a Dataset."""

    kind: str
    params: dict = field(default_factory=dict)

    _DISPATCH = {
        "outlier-1d": gen_outlier_1d,
        "outlier-multi": gen_outlier_multi,
        "log-1d": gen_log_1d,
        "log-multi": gen_log_multi,
        "surrogate-itpa": gen_surrogate_itpa,
    }

    def __post_init__(self):
        if self.kind not in self._DISPATCH:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    def generate(self, seed: int) -> Dataset:
        return self._DISPATCH[self.kind](seed=seed, **self.params)


def save_generated(data: Dataset, csv_path):
    """Write a generated dataset plus its metadata JSON sidecar."""
    from .models import write_dataset_csv

    csv_path = str(csv_path)
    write_dataset_csv(data, csv_path)
    sidecar = csv_path[:-4] + ".meta.json" if csv_path.endswith(".csv") \
        else csv_path + ".meta.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(data.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
