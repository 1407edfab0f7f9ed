"""Uncertainty machinery: Monte Carlo replication and bootstrap resampling.

Replicates are driven by named Philox substreams of the root seed, so a
report is a pure function of (inputs, seed) regardless of execution
order. Estimator failures are dropped and recorded; more than 10% failed
replicates aborts the report.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .models import Dataset

MAX_FAILURE_FRACTION = 0.10
Z95 = 1.96


@dataclass
class ResampleReport:
    parameter_names: tuple
    mean: np.ndarray
    sd: np.ndarray
    ci95: list            # (low, high) per parameter, normal approximation
    n_replicates: int
    raw_estimates: np.ndarray  # replicate x parameter
    n_failed: int = 0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "parameter_names": list(self.parameter_names),
            "mean": [float(v) for v in self.mean],
            "sd": [float(v) for v in self.sd],
            "ci95": [[float(lo), float(hi)] for lo, hi in self.ci95],
            "n_replicates": self.n_replicates,
            "n_failed": self.n_failed,
            "raw_estimates": [[float(v) for v in row] for row in self.raw_estimates],
            "diagnostics": self.diagnostics,
        }

    def write_csv(self, dest):
        """One row per replicate, columns are the parameters."""
        def _write(fh):
            w = csv.writer(fh)
            w.writerow(("replicate",) + tuple(self.parameter_names))
            for i, row in enumerate(self.raw_estimates):
                w.writerow([i] + [repr(float(v)) for v in row])

        if hasattr(dest, "write"):
            _write(dest)
        else:
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                _write(fh)


def _summarize(rows, names, n_failed, extra=None):
    if len(rows) < 2:
        raise RuntimeError("fewer than 2 successful replicates")
    raw = np.asarray(rows, dtype=float)
    mean = np.nanmean(raw, axis=0)
    sd = np.nanstd(raw, axis=0, ddof=1)
    ci = [(m - Z95 * s, m + Z95 * s) for m, s in zip(mean, sd)]
    diagnostics = {
        "percentile_ci95": [
            [float(np.nanpercentile(raw[:, j], 2.5)), float(np.nanpercentile(raw[:, j], 97.5))]
            for j in range(raw.shape[1])
        ],
    }
    if extra:
        diagnostics.update(extra)
    return ResampleReport(tuple(names), mean, sd, ci, raw.shape[0], raw,
                          n_failed, diagnostics)


def _run_replicates(n, make_replicate, estimator):
    rows, failures = [], []
    names = None
    for i in range(n):
        data = make_replicate(i)
        try:
            est = estimator(data)
        except Exception as exc:  # noqa: BLE001 - failed replicates are policy, not bugs
            failures.append((i, f"{type(exc).__name__}: {exc}"))
            continue
        est = np.atleast_1d(np.asarray(est, dtype=float))
        if names is None:
            names = [f"p{j}" for j in range(est.size)]
        rows.append(est)
    if len(failures) > MAX_FAILURE_FRACTION * n:
        raise RuntimeError(
            f"{len(failures)}/{n} replicates failed (limit {MAX_FAILURE_FRACTION:.0%}): "
            f"first failure: {failures[0][1]}")
    return rows, names, failures


def monte_carlo(generator, estimator, n_runs: int, seed: int,
                parameter_names=None) -> ResampleReport:
    """Estimate on ``n_runs`` independently regenerated datasets.

    ``generator`` maps an integer seed to a Dataset (an object with a
    ``generate(seed)`` method is also accepted); run i receives the i-th
    spawned child seed of ``seed``. ``estimator`` maps a Dataset to a
    parameter vector.
    """
    if n_runs < 2:
        raise ValueError("n_runs must be >= 2")
    gen = generator.generate if hasattr(generator, "generate") else generator
    sub = rng.spawn_seeds(seed, n_runs, index=1)

    rows, names, failures = _run_replicates(
        n_runs, lambda i: gen(int(sub[i])), estimator)
    if parameter_names is not None:
        names = list(parameter_names)
    return _summarize(rows, names, len(failures),
                      extra={"failures": [list(f) for f in failures],
                             "seed": seed, "kind": "monte-carlo"})


def bootstrap(data: Dataset, estimator, n_boot: int, seed: int,
              parameter_names=None) -> ResampleReport:
    """Resample observations with replacement and re-estimate.

    Every replicate has the original size; replicate i draws its indices
    from substream i of ``seed``.
    """
    if n_boot < 2:
        raise ValueError("n_boot must be >= 2")
    n = len(data)

    def make_replicate(i):
        idx = rng.stream(seed, 1000 + i).integers(0, n, size=n)
        obs = [data.observations[j] for j in idx]
        return Dataset(obs, log_space=data.log_space, meta=dict(data.meta))

    rows, names, failures = _run_replicates(n_boot, make_replicate, estimator)
    if parameter_names is not None:
        names = list(parameter_names)
    return _summarize(rows, names, len(failures),
                      extra={"failures": [list(f) for f in failures],
                             "seed": seed, "kind": "bootstrap"})
