"""Experiment orchestration: estimator-comparison studies and pipelines.

Reports are plain-data containers that round-trip losslessly through
JSON. Relative estimation errors are reported as (true - estimate) / true
in percent, histogrammed on 41 equal bins over [-100, +100] plus overflow
bins at each end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .baselines import fit_map, fit_ols, fit_rob, fit_tls
from .datagen import (GRID_BETA0, GRID_EXPONENTS, ExperimentGenerator,
                      surrogate_predictors, gen_outlier_multi, gen_log_multi)
from .gls import OptimOptions, fit_gls
from .models import (AFFINE, LOGLIN, POWER, SIMPLE, Dataset, ModelSpec,
                     average_errors, scale_errors)
from .resample import bootstrap, monte_carlo

ALL_METHODS = ("gls", "ols", "map", "tls", "rob")
LINEAR_ONLY_METHODS = ("tls", "rob")

HIST_BIN_EDGES = [-float("inf")] + list(np.linspace(-100.0, 100.0, 42)) + [float("inf")]


@dataclass
class ExperimentReport:
    kind: str
    methods: dict = field(default_factory=dict)     # method -> param -> {mean, sd}
    histograms: dict = field(default_factory=dict)  # method -> param -> {bin_edges, mass}
    details: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "methods": self.methods,
            "histograms": self.histograms,
            "details": self.details,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(kind=d["kind"], methods=d["methods"], histograms=d["histograms"],
                   details=d["details"], metadata=d["metadata"])


def _fit_beta(method: str, spec: ModelSpec, data: Dataset,
              options: OptimOptions | None = None):
    """Dispatch one estimator; returns the public coefficient vector."""
    if method == "gls":
        return np.asarray(fit_gls(spec, data, options=options).params.beta)
    if method == "ols":
        return np.asarray(fit_ols(spec, data).beta)
    if method == "map":
        return np.asarray(fit_map(spec, data, options=options).beta)
    if method == "tls":
        return np.asarray(fit_tls(spec, data).beta)
    if method == "rob":
        return np.asarray(fit_rob(spec, data).beta)
    raise ValueError(f"unknown method {method!r}")


def _validate_methods(methods, form):
    methods = tuple(m.lower() for m in methods)
    if not methods:
        raise ValueError("method list is empty")
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}; expected subset of {ALL_METHODS}")
        if form == POWER and m in LINEAR_ONLY_METHODS:
            raise ValueError(f"{m} is not applicable to the raw power-law form")
    return methods


def _mc_table(kind, generator, spec, methods, n_runs, seed, options):
    """Monte Carlo comparison table: one estimator column set per method."""
    report = ExperimentReport(kind=kind, metadata={
        "seed": seed, "n_runs": n_runs, "methods": list(methods),
        "generator": generator.kind, "model_form": spec.form,
    })
    n_coef = spec.coefficient_count
    beta_names = [f"beta{i}" for i in range(n_coef)] if n_coef > 1 else ["beta"]
    for method in methods:
        if method == "gls":
            names = beta_names + ["sigma_obs", "mean_sigma_mod"]

            def estimator(data):
                fit = fit_gls(spec, data, options=options)
                return list(fit.params.beta) + [
                    fit.params.sigma_obs["all"],
                    fit.diagnostics["mean_sigma_mod"],
                ]
        else:
            names = beta_names

            def estimator(data, _m=method):
                return _fit_beta(_m, spec, data, options=options)

        rep = monte_carlo(generator, estimator, n_runs, seed, parameter_names=names)
        report.methods[method] = {
            name: {"mean": float(rep.mean[j]), "sd": float(rep.sd[j])}
            for j, name in enumerate(names)
        }
        report.details.setdefault("replicates", {})[method] = {
            name: [float(v) for v in rep.raw_estimates[:, j]]
            for j, name in enumerate(names)
        }
    return report


def run_table1(seed: int, n_runs: int = 100, methods=ALL_METHODS,
               options: OptimOptions | None = None) -> ExperimentReport:
    """One-predictor outlier study: slope recovery across all methods."""
    methods = _validate_methods(methods, SIMPLE)
    return _mc_table("table1", ExperimentGenerator("outlier-1d"),
                     ModelSpec(SIMPLE, 1), methods, n_runs, seed, options)


def run_table2(seed: int, n_runs: int = 100, methods=ALL_METHODS,
               options: OptimOptions | None = None) -> ExperimentReport:
    """One-predictor log study: power-law coefficients after log transform."""
    methods = _validate_methods(methods, LOGLIN)
    return _mc_table("table2", ExperimentGenerator("log-1d"),
                     ModelSpec(LOGLIN, 1), methods, n_runs, seed, options)


def _histogram(values):
    counts, _ = np.histogram(values, bins=HIST_BIN_EDGES)
    mass = counts / counts.sum()
    return {"bin_edges": [float(e) for e in HIST_BIN_EDGES],
            "mass": [float(m) for m in mass]}


def run_histograms(kind: str, n_grid_samples: int = 50, seed: int = 0,
                   n_replicates: int = 10, n_rows: int = 616,
                   methods=ALL_METHODS,
                   options: OptimOptions | None = None) -> ExperimentReport:
    """Coefficient-recovery histograms over a sampled coefficient grid.

    For each sampled (b0, b1, b2, b3), ``n_replicates`` datasets are
    generated on a fixed predictor set; the estimate is the average over
    the replicates, and relative errors across grid points are
    histogrammed per method and parameter.
    """
    if kind not in ("outlier-multi", "log-multi"):
        raise ValueError("kind must be 'outlier-multi' or 'log-multi'")
    spec = ModelSpec(AFFINE if kind == "outlier-multi" else LOGLIN, 3)
    methods = _validate_methods(methods, spec.form)
    gen_fn = gen_outlier_multi if kind == "outlier-multi" else gen_log_multi

    predictors, _ = surrogate_predictors(n_rows, 8, seed=int(rng.spawn_seeds(seed, 1, index=2)[0]))
    grid_rng = rng.stream(seed, 3)
    b0 = np.asarray(GRID_BETA0)[grid_rng.integers(0, len(GRID_BETA0), n_grid_samples)]
    exps = np.asarray(GRID_EXPONENTS)[
        grid_rng.integers(0, len(GRID_EXPONENTS), (n_grid_samples, 3))]
    betas = np.column_stack([b0, exps])
    rep_seeds = rng.spawn_seeds(seed, n_grid_samples * n_replicates, index=4)

    errors = {m: np.empty((n_grid_samples, 4)) for m in methods}
    for gp in range(n_grid_samples):
        true_beta = betas[gp]
        acc = {m: np.zeros(4) for m in methods}
        for r in range(n_replicates):
            data = gen_fn(predictors, true_beta,
                          seed=int(rep_seeds[gp * n_replicates + r]))
            for m in methods:
                acc[m] += _fit_beta(m, spec, data, options=options)
        for m in methods:
            est = acc[m] / n_replicates
            errors[m][gp] = (true_beta - est) / true_beta * 100.0

    report = ExperimentReport(kind=f"histograms-{kind}", metadata={
        "seed": seed, "n_grid_samples": n_grid_samples,
        "n_replicates": n_replicates, "n_rows": n_rows,
        "methods": list(methods), "model_form": spec.form,
    })
    names = [f"beta{i}" for i in range(4)]
    for m in methods:
        report.methods[m] = {}
        report.histograms[m] = {}
        for j, name in enumerate(names):
            col = errors[m][:, j]
            report.methods[m][name] = {"mean": float(np.mean(col)),
                                       "sd": float(np.std(col, ddof=1))}
            report.histograms[m][name] = _histogram(col)
        report.details.setdefault("mass_within_20pct", {})[m] = {
            name: float(np.mean(np.abs(errors[m][:, j]) <= 20.0))
            for j, name in enumerate(names)
        }
    report.details["sampled_grid"] = [[float(v) for v in row] for row in betas]
    return report


def _pipeline_names(n_coef, groups, mode, predict_points):
    names = [f"beta{i}" for i in range(n_coef)]
    names += [f"sigma_obs:{g}" for g in groups]
    names += [f"relerr:{g}" for g in groups]
    if predict_points is not None:
        names += [f"pred:{i}" for i in range(len(predict_points))]
    return names


def run_scaling_pipeline(data: Dataset, mode: str, methods=("gls", "ols", "map"),
                         n_boot: int = 100, seed: int = 0, predict_points=None,
                         options: OptimOptions | None = None) -> ExperimentReport:
    """Grouped scaling-law fit with bootstrap uncertainty.

    ``mode`` selects the model form ('log-linear' or 'power-law'); the
    geodesic fit estimates one observed sigma per group, reported both
    directly and converted to a relative error on the response (for the
    log-linear mode the log-space sigma is itself the relative error; for
    the power-law mode the per-row ratios sigma/|y| are averaged within
    the group). Predictions are evaluated per bootstrap replicate.
    """
    if mode not in (LOGLIN, POWER):
        raise ValueError("mode must be 'log-linear' or 'power-law'")
    methods = _validate_methods(methods, mode)
    spec = ModelSpec(mode, data.n_predictors)
    groups = data.groups
    n_coef = spec.coefficient_count
    if predict_points is not None:
        predict_points = np.atleast_2d(np.asarray(predict_points, dtype=float))

    group_rows = {g: [i for i, o in enumerate(data.observations) if o.group == g]
                  for g in groups}
    y_all = np.array([o.y for o in data.observations])

    from .models import Design
    design = Design(spec, data)

    def predictions(beta):
        if predict_points is None:
            return []
        theta = design.internal_from_public(np.asarray(beta))
        return [float(v) for v in design.predict(theta, predict_points)]

    report = ExperimentReport(kind=f"pipeline-{mode}", metadata={
        "seed": seed, "n_boot": n_boot, "mode": mode,
        "methods": list(methods), "groups": list(groups),
        "predict_points": None if predict_points is None
        else [[float(v) for v in p] for p in predict_points],
    })

    boot_seed = int(rng.spawn_seeds(seed, 1, index=5)[0])
    for method in methods:
        if method == "gls":
            names = _pipeline_names(n_coef, groups, mode, predict_points)

            def estimator(d):
                fit = fit_gls(spec, d, options=options)
                beta = np.asarray(fit.params.beta)
                sig = [fit.params.sigma_obs.get(g, float("nan")) for g in groups]
                if mode == LOGLIN:
                    rel = list(sig)
                else:
                    rel = []
                    for g, s in zip(groups, sig):
                        rows = group_rows[g]
                        rel.append(float(np.mean(s / np.abs(y_all[rows])))
                                   if rows else float("nan"))
                return list(beta) + sig + rel + predictions(beta)

            point_vec = estimator(data)
        else:
            names = ([f"beta{i}" for i in range(n_coef)] +
                     ([f"pred:{i}" for i in range(len(predict_points))]
                      if predict_points is not None else []))

            def estimator(d, _m=method):
                beta = _fit_beta(_m, spec, d, options=options)
                return list(beta) + predictions(beta)

            point_vec = estimator(data)

        rep = bootstrap(data, estimator, n_boot, boot_seed, parameter_names=names)
        report.methods[method] = {
            name: {"mean": float(rep.mean[j]), "sd": float(rep.sd[j]),
                   "ci95": [float(rep.ci95[j][0]), float(rep.ci95[j][1])]}
            for j, name in enumerate(names)
        }
        report.details.setdefault("point_estimates", {})[method] = {
            name: float(v) for name, v in zip(names, point_vec)
        }
        report.details.setdefault("n_failed", {})[method] = rep.n_failed
    return report


def run_errorbar_sensitivity(data: Dataset, mode: str, scale_factor: float | None = None,
                             averaged: bool = False, methods=("gls", "map"),
                             predict_points=None,
                             options: OptimOptions | None = None) -> ExperimentReport:
    """Refit with modified error bars and report the induced shifts.

    Exactly one of ``scale_factor`` (multiply every error bar) or
    ``averaged`` (replace each variable's error bars by their dataset
    mean) selects the modification.
    """
    if (scale_factor is None) == (not averaged):
        raise ValueError("specify exactly one of scale_factor or averaged")
    if mode not in (LOGLIN, POWER):
        raise ValueError("mode must be 'log-linear' or 'power-law'")
    methods = _validate_methods(methods, mode)
    spec = ModelSpec(mode, data.n_predictors)
    modified = average_errors(data) if averaged else scale_errors(data, scale_factor)
    groups = data.groups
    if predict_points is not None:
        predict_points = np.atleast_2d(np.asarray(predict_points, dtype=float))

    from .models import Design
    design = Design(spec, data)

    def predictions(beta):
        if predict_points is None:
            return None
        theta = design.internal_from_public(np.asarray(beta))
        return [float(v) for v in design.predict(theta, predict_points)]

    report = ExperimentReport(kind="errorbar-sensitivity", metadata={
        "mode": mode, "methods": list(methods),
        "scale_factor": scale_factor, "averaged": averaged,
        "predict_points": None if predict_points is None
        else [[float(v) for v in p] for p in predict_points],
    })
    for method in methods:
        entry = {}
        for label, d in (("base", data), ("modified", modified)):
            if method == "gls":
                fit = fit_gls(spec, d, options=options)
                beta = list(fit.params.beta)
                entry[label] = {
                    "beta": [float(b) for b in beta],
                    "sigma_obs": {g: float(fit.params.sigma_obs[g]) for g in groups},
                }
            else:
                beta = [float(b) for b in _fit_beta(method, spec, d, options=options)]
                entry[label] = {"beta": beta}
            pred = predictions(beta)
            if pred is not None:
                entry[label]["predictions"] = pred
        shift = [abs(b1 - b0) for b0, b1 in zip(entry["base"]["beta"],
                                                entry["modified"]["beta"])]
        entry["beta_shift"] = shift
        if predict_points is not None:
            entry["prediction_rel_change"] = [
                abs(p1 - p0) / abs(p0) for p0, p1 in
                zip(entry["base"]["predictions"], entry["modified"]["predictions"])
            ]
        report.details[method] = entry
        report.methods[method] = {
            f"beta{i}": {"mean": entry["modified"]["beta"][i],
                         "sd": 0.0}
            for i in range(len(entry["modified"]["beta"]))
        }
    return report
