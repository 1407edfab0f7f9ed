"""Regression model specifications and datasets.

Four mean-function forms are supported, each paired with a Gaussian
error-propagation rule that yields the modeled distribution of the
response for one observation:

    simple-linear   mu = b1 * x            (single predictor, no intercept)
    affine-linear   mu = b0 + sum b_k x_k
    power-law       mu = b0 * prod x_k^b_k
    log-linear      mu = ln b0 + sum b_k ln x_k   (log-space response)

Observations carry *relative* error bars (fractions). Conversion to
absolute standard deviations multiplies by the measured value, except on
log-space datasets (produced by ``log_transform_dataset``), where the
error fields already hold absolute log-space sigmas (delta method:
sigma_ln z ~= sigma_z / z).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .manifold import GaussianPoint

SIMPLE = "simple-linear"
AFFINE = "affine-linear"
LOGLIN = "log-linear"
POWER = "power-law"
FORMS = (SIMPLE, AFFINE, LOGLIN, POWER)

#: forms whose mean is multiplicative and requires positive data
_POSITIVE_FORMS = (LOGLIN, POWER)


@dataclass(frozen=True)
class ModelSpec:
    """Mean-function form plus predictor count."""

    form: str
    n_predictors: int

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown model form {self.form!r}; expected one of {FORMS}")
        if self.n_predictors < 1:
            raise ValueError("n_predictors must be >= 1")
        if self.form == SIMPLE and self.n_predictors != 1:
            raise ValueError("simple-linear form takes exactly one predictor")

    @property
    def coefficient_count(self) -> int:
        return 1 if self.form == SIMPLE else self.n_predictors + 1


@dataclass(frozen=True)
class Observation:
    """One measurement row: response, predictors, relative error bars."""

    y: float
    x: tuple
    rel_err_y: float
    rel_err_x: tuple
    group: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "rel_err_x", tuple(float(v) for v in self.rel_err_x))
        if len(self.x) != len(self.rel_err_x):
            raise ValueError("x and rel_err_x must have the same length")
        vals = (self.y, self.rel_err_y, *self.x, *self.rel_err_x)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("observation fields must be finite")
        if self.rel_err_y < 0 or any(e < 0 for e in self.rel_err_x):
            raise ValueError("relative errors must be nonnegative")


@dataclass
class Dataset:
    """A list of observations plus bookkeeping.

    ``log_space`` marks datasets produced by ``log_transform_dataset``:
    their y/x are natural logs and the error fields are absolute log-space
    standard deviations rather than fractions.

    ``meta`` carries generator ground truth (true coefficients, outlier
    indices, rejection counts); it is never consulted by estimators.
    """

    observations: list
    log_space: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.observations:
            raise ValueError("dataset must contain at least one observation")
        p = len(self.observations[0].x)
        if any(len(o.x) != p for o in self.observations):
            raise ValueError("all observations must have the same number of predictors")

    def __len__(self):
        return len(self.observations)

    @property
    def n_predictors(self) -> int:
        return len(self.observations[0].x)

    @property
    def groups(self) -> tuple:
        seen = {}
        for o in self.observations:
            seen.setdefault(o.group, None)
        return tuple(seen)

    def as_arrays(self):
        """(y, X, rel_y, rel_X, group_codes, group_labels) as numpy arrays."""
        y = np.array([o.y for o in self.observations])
        X = np.array([o.x for o in self.observations])
        rel_y = np.array([o.rel_err_y for o in self.observations])
        rel_X = np.array([o.rel_err_x for o in self.observations])
        labels = self.groups
        index = {g: i for i, g in enumerate(labels)}
        codes = np.array([index[o.group] for o in self.observations])
        return y, X, rel_y, rel_X, codes, labels


def _check_dims(spec: ModelSpec, beta, x):
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    if beta.shape != (spec.coefficient_count,):
        raise ValueError(
            f"expected {spec.coefficient_count} coefficients for {spec.form}, got {beta.shape}")
    if x.shape != (spec.n_predictors,):
        raise ValueError(f"expected {spec.n_predictors} predictors, got {x.shape}")
    return beta, x


def model_mean(spec: ModelSpec, beta, x) -> float:
    """Deterministic mean of the modeled response for one predictor vector.

    For the log-linear form the returned mean lives in log space.
    """
    beta, x = _check_dims(spec, beta, x)
    if spec.form == SIMPLE:
        return float(beta[0] * x[0])
    if spec.form == AFFINE:
        return float(beta[0] + x @ beta[1:])
    if np.any(x <= 0):
        raise ValueError(f"{spec.form} form requires strictly positive predictors")
    if spec.form == POWER:
        return float(beta[0] * np.prod(x ** beta[1:]))
    if beta[0] <= 0:
        raise ValueError("log-linear form requires beta0 > 0")
    return float(math.log(beta[0]) + np.log(x) @ beta[1:])


def modeled_sigma(spec: ModelSpec, beta, obs: Observation, log_space: bool = False) -> float:
    """Propagated standard deviation of the modeled response distribution.

    ``log_space`` says the observation's error fields are already absolute
    (log-transformed dataset); it applies to the linear forms only.
    """
    beta, x = _check_dims(spec, beta, np.asarray(obs.x))
    rel_x = np.asarray(obs.rel_err_x)
    slopes = beta if spec.form == SIMPLE else beta[1:]
    if spec.form in (SIMPLE, AFFINE):
        if log_space:
            sy, sx = obs.rel_err_y, rel_x
        else:
            sy, sx = obs.rel_err_y * abs(obs.y), rel_x * np.abs(x)
        var = sy * sy + (sx * sx) @ (slopes * slopes)
    elif spec.form == LOGLIN:
        var = obs.rel_err_y**2 + (rel_x * rel_x) @ (slopes * slopes)
    else:  # POWER
        mu = model_mean(spec, beta, x)
        sy = obs.rel_err_y * abs(obs.y)
        var = sy * sy + mu * mu * ((rel_x * rel_x) @ (slopes * slopes))
    sigma = math.sqrt(var)
    if sigma <= 0.0:
        raise ValueError("modeled sigma is zero: all relevant error bars vanish")
    return sigma


def modeled_distribution(spec: ModelSpec, beta, obs: Observation,
                         log_space: bool = False) -> GaussianPoint:
    """Modeled Gaussian for one observation (log-space pair for log-linear)."""
    return GaussianPoint(model_mean(spec, beta, np.asarray(obs.x)),
                         modeled_sigma(spec, beta, obs, log_space=log_space))


def log_transform_dataset(d: Dataset) -> Dataset:
    """Natural-log transform of all values; errors become log-space sigmas.

    Relative errors carry over as absolute standard deviations of the
    logged values. Raises on any nonpositive value, reporting the row.
    """
    if d.log_space:
        raise ValueError("dataset is already log-transformed")
    rows = []
    for i, o in enumerate(d.observations):
        if o.y <= 0 or any(v <= 0 for v in o.x):
            raise ValueError(f"row {i}: log transform requires positive values")
        rows.append(Observation(
            y=math.log(o.y),
            x=tuple(math.log(v) for v in o.x),
            rel_err_y=o.rel_err_y,
            rel_err_x=o.rel_err_x,
            group=o.group,
        ))
    return Dataset(rows, log_space=True, meta=dict(d.meta))


def scale_errors(d: Dataset, factor: float) -> Dataset:
    """Copy of the dataset with every error bar multiplied by ``factor``."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    rows = [Observation(o.y, o.x, o.rel_err_y * factor,
                        tuple(e * factor for e in o.rel_err_x), o.group)
            for o in d.observations]
    return Dataset(rows, log_space=d.log_space, meta=dict(d.meta))


def average_errors(d: Dataset) -> Dataset:
    """Copy with each variable's error bars replaced by their dataset mean."""
    ey = float(np.mean([o.rel_err_y for o in d.observations]))
    ex = tuple(np.mean([o.rel_err_x for o in d.observations], axis=0))
    rows = [Observation(o.y, o.x, ey, ex, o.group) for o in d.observations]
    return Dataset(rows, log_space=d.log_space, meta=dict(d.meta))


# ---------------------------------------------------------------------------
# CSV schema: group,y,rel_err_y,x1,rel_err_x1,...,xP,rel_err_xP
# ---------------------------------------------------------------------------

def _expected_header(p):
    cols = ["group", "y", "rel_err_y"]
    for k in range(1, p + 1):
        cols += [f"x{k}", f"rel_err_x{k}"]
    return cols


def write_dataset_csv(d: Dataset, dest):
    """Write observations in the canonical CSV schema (UTF-8, '.' decimal)."""
    def _write(fh):
        w = csv.writer(fh)
        w.writerow(_expected_header(d.n_predictors))
        for o in d.observations:
            row = [o.group, repr(o.y), repr(o.rel_err_y)]
            for xv, ev in zip(o.x, o.rel_err_x):
                row += [repr(xv), repr(ev)]
            w.writerow(row)

    if hasattr(dest, "write"):
        _write(dest)
    else:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            _write(fh)


def read_dataset_csv(source, max_rel_err: float | None = 1.0) -> Dataset:
    """Parse the canonical CSV schema into a Dataset.

    Any unparseable field is a hard error naming the offending line.
    ``max_rel_err`` is a sanity ceiling on the relative errors (set None to
    disable, e.g. for data with near-zero measured values).
    """
    if hasattr(source, "read"):
        return _read_csv(source, max_rel_err)
    with open(source, "r", newline="", encoding="utf-8") as fh:
        return _read_csv(fh, max_rel_err)


def _read_csv(fh, max_rel_err):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV: missing header") from None
    n_cols = len(header)
    if n_cols < 5 or (n_cols - 3) % 2 != 0:
        raise ValueError(f"line 1: malformed header {header!r}")
    p = (n_cols - 3) // 2
    if header != _expected_header(p):
        raise ValueError(f"line 1: header must be {_expected_header(p)!r}, got {header!r}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != n_cols:
            raise ValueError(f"line {lineno}: expected {n_cols} fields, got {len(rec)}")
        try:
            y = float(rec[1])
            ey = float(rec[2])
            x = tuple(float(rec[3 + 2 * k]) for k in range(p))
            ex = tuple(float(rec[4 + 2 * k]) for k in range(p))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        try:
            obs = Observation(y=y, x=x, rel_err_y=ey, rel_err_x=ex, group=rec[0])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if max_rel_err is not None:
            if ey >= max_rel_err or any(e >= max_rel_err for e in ex):
                raise ValueError(
                    f"line {lineno}: relative error >= {max_rel_err} "
                    "(pass max_rel_err=None to accept)")
        rows.append(obs)
    return Dataset(rows)


# ---------------------------------------------------------------------------
# Vectorized design used by the fitting routines
# ---------------------------------------------------------------------------

class Design:
    """Precomputed arrays for fast repeated evaluation of one (spec, data) pair.

    ``mean_sigma(beta)`` returns the modeled means and standard deviations
    for all rows; ``y_eff`` is the response in the space the model works in
    (logs for the log-linear form). Internal coefficient layout for the
    log-linear form uses the raw intercept ln(b0); conversion helpers map
    to and from the public (b0, b1, ...) layout.
    """

    def __init__(self, spec: ModelSpec, data: Dataset):
        if data.n_predictors != spec.n_predictors:
            raise ValueError(
                f"dataset has {data.n_predictors} predictors, spec wants {spec.n_predictors}")
        if data.log_space and spec.form in _POSITIVE_FORMS:
            raise ValueError(f"{spec.form} form cannot be fit to a log-space dataset")
        self.spec = spec
        self.y, self.X, self.rel_y, self.rel_X, self.codes, self.labels = data.as_arrays()
        self.n = len(self.y)
        self.log_space = data.log_space
        if spec.form in _POSITIVE_FORMS:
            if np.any(self.X <= 0) or (spec.form == LOGLIN and np.any(self.y <= 0)):
                raise ValueError(f"{spec.form} form requires strictly positive data")
            self.logX = np.log(self.X)
        if spec.form == LOGLIN:
            self.y_eff = np.log(self.y)
        else:
            self.y_eff = self.y
        if spec.form in (SIMPLE, AFFINE):
            if data.log_space:
                self.sy_abs = self.rel_y
                self.sx_abs = self.rel_X
            else:
                self.sy_abs = self.rel_y * np.abs(self.y)
                self.sx_abs = self.rel_X * np.abs(self.X)
        elif spec.form == POWER:
            self.sy_abs = self.rel_y * np.abs(self.y)
        self._relX2 = self.rel_X * self.rel_X

    # -- coefficient layout ------------------------------------------------
    def internal_from_public(self, beta):
        beta = np.asarray(beta, dtype=float)
        if self.spec.form == LOGLIN:
            if beta[0] <= 0:
                raise ValueError("log-linear beta0 must be > 0")
            out = beta.copy()
            out[0] = math.log(beta[0])
            return out
        return beta.copy()

    def public_from_internal(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.spec.form == LOGLIN:
            out = theta.copy()
            out[0] = math.exp(theta[0])
            return out
        return theta.copy()

    # -- vectorized model evaluation ----------------------------------------
    def mean(self, theta):
        form = self.spec.form
        if form == SIMPLE:
            return theta[0] * self.X[:, 0]
        if form == AFFINE:
            return theta[0] + self.X @ theta[1:]
        if form == LOGLIN:
            return theta[0] + self.logX @ theta[1:]
        return theta[0] * np.exp(self.logX @ theta[1:])

    def mean_sigma(self, theta):
        form = self.spec.form
        mu = self.mean(theta)
        slopes = theta if form == SIMPLE else theta[1:]
        s2 = slopes * slopes
        if form in (SIMPLE, AFFINE):
            var = self.sy_abs**2 + (self.sx_abs**2) @ s2
        elif form == LOGLIN:
            var = self.rel_y**2 + self._relX2 @ s2
        else:
            var = self.sy_abs**2 + mu * mu * (self._relX2 @ s2)
        return mu, np.sqrt(var)

    def predict(self, theta, points):
        """Modeled means at arbitrary predictor points (public-space output)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        form = self.spec.form
        if form == SIMPLE:
            return theta[0] * pts[:, 0]
        if form == AFFINE:
            return theta[0] + pts @ theta[1:]
        if form == LOGLIN:
            return theta[0] + np.log(pts) @ theta[1:]
        return theta[0] * np.exp(np.log(pts) @ theta[1:])
