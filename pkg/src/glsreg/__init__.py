"""Geodesic least squares regression on the univariate-Gaussian manifold.

Regression coefficients are estimated by minimizing the summed squared
Rao geodesic distances between per-observation observed and modeled
Gaussian response distributions, with the observed standard deviation a
free parameter. Includes OLS / MAP / TLS / robust-IRLS baselines, seeded
Monte Carlo and bootstrap machinery, synthetic-data generators, and a
CLI (``glsreg``) for the bundled experiment suite.
"""

__version__ = "0.1.0"

from .baselines import BaselineResult, fit_map, fit_ols, fit_rob, fit_tls
from .datagen import (ExperimentGenerator, gen_log_1d, gen_log_multi,
                      gen_outlier_1d, gen_outlier_multi, gen_surrogate_itpa,
                      surrogate_predictors)
from .experiments import (ExperimentReport, run_errorbar_sensitivity,
                          run_histograms, run_scaling_pipeline, run_table1,
                          run_table2)
from .gls import (FitResult, GlsParameters, OptimOptions, fit_gls,
                  gls_objective, mahalanobis_objective, matched_sigma_objective)
from .manifold import (GaussianPoint, GeodesicPath, fixed_sigma_distance,
                       geodesic_between, geodesic_point,
                       numeric_geodesic_length, rao_distance, sample_path,
                       write_path_csv)
from .models import (Dataset, ModelSpec, Observation, log_transform_dataset,
                     model_mean, modeled_distribution, modeled_sigma,
                     read_dataset_csv, write_dataset_csv)
from .resample import ResampleReport, bootstrap, monte_carlo

__all__ = [
    "__version__",
    "BaselineResult", "fit_map", "fit_ols", "fit_rob", "fit_tls",
    "ExperimentGenerator", "gen_log_1d", "gen_log_multi", "gen_outlier_1d",
    "gen_outlier_multi", "gen_surrogate_itpa", "surrogate_predictors",
    "ExperimentReport", "run_errorbar_sensitivity", "run_histograms",
    "run_scaling_pipeline", "run_table1", "run_table2",
    "FitResult", "GlsParameters", "OptimOptions", "fit_gls", "gls_objective",
    "mahalanobis_objective", "matched_sigma_objective",
    "GaussianPoint", "GeodesicPath", "fixed_sigma_distance", "geodesic_between",
    "geodesic_point", "numeric_geodesic_length", "rao_distance", "sample_path",
    "write_path_csv",
    "Dataset", "ModelSpec", "Observation", "log_transform_dataset", "model_mean",
    "modeled_distribution", "modeled_sigma", "read_dataset_csv",
    "write_dataset_csv",
    "ResampleReport", "bootstrap", "monte_carlo",
]
