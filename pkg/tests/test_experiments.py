"""Experiment orchestration: report shapes, determinism, serialization.

Full-size reproduction studies live in test_acceptance; here the same
code paths run at reduced scale.
"""

import json

import numpy as np
import pytest

from glsreg import (OptimOptions, gen_surrogate_itpa, run_errorbar_sensitivity,
                    run_histograms, run_scaling_pipeline, run_table1,
                    run_table2)
from glsreg.experiments import HIST_BIN_EDGES, ExperimentReport

FAST = OptimOptions(polish=False)


@pytest.fixture(scope="module")
def surrogate():
    return gen_surrogate_itpa(160, 4, seed=3)


class TestTables:
    def test_table1_shape_and_determinism(self):
        r1 = run_table1(seed=11, n_runs=5, options=FAST)
        r2 = run_table1(seed=11, n_runs=5, options=FAST)
        assert r1.to_dict() == r2.to_dict()
        assert set(r1.methods) == {"gls", "ols", "map", "tls", "rob"}
        assert set(r1.methods["gls"]) == {"beta", "sigma_obs", "mean_sigma_mod"}
        assert set(r1.methods["ols"]) == {"beta"}
        assert len(r1.details["replicates"]["gls"]["beta"]) == 5

    def test_table1_different_seed_differs(self):
        r1 = run_table1(seed=1, n_runs=4, methods=("ols",))
        r2 = run_table1(seed=2, n_runs=4, methods=("ols",))
        assert r1.methods["ols"]["beta"]["mean"] != r2.methods["ols"]["beta"]["mean"]

    def test_table2_shape(self):
        r = run_table2(seed=5, n_runs=4, methods=("gls", "ols"), options=FAST)
        assert set(r.methods["gls"]) == {"beta0", "beta1", "sigma_obs", "mean_sigma_mod"}
        assert set(r.methods["ols"]) == {"beta0", "beta1"}

    def test_json_round_trip(self):
        r = run_table1(seed=3, n_runs=4, methods=("ols", "tls"))
        blob = json.dumps(r.to_dict(), sort_keys=True)
        back = ExperimentReport.from_dict(json.loads(blob))
        assert back.to_dict() == r.to_dict()

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            run_table1(seed=0, n_runs=4, methods=("gls", "magic"))

    def test_empty_methods_rejected(self):
        with pytest.raises(ValueError):
            run_table1(seed=0, n_runs=4, methods=())


class TestHistograms:
    def test_shapes_masses_and_determinism(self):
        kwargs = dict(n_grid_samples=3, seed=7, n_replicates=2, n_rows=60,
                      methods=("gls", "ols"), options=FAST)
        r1 = run_histograms("outlier-multi", **kwargs)
        r2 = run_histograms("outlier-multi", **kwargs)
        assert r1.to_dict() == r2.to_dict()
        for method in ("gls", "ols"):
            for param in (f"beta{i}" for i in range(4)):
                hist = r1.histograms[method][param]
                assert len(hist["mass"]) == len(HIST_BIN_EDGES) - 1
                assert sum(hist["mass"]) == pytest.approx(1.0, abs=1e-9)
        assert set(r1.details["mass_within_20pct"]["gls"]) == {
            "beta0", "beta1", "beta2", "beta3"}

    def test_log_multi_runs(self):
        r = run_histograms("log-multi", n_grid_samples=2, seed=9,
                           n_replicates=2, n_rows=60, methods=("ols", "rob"),
                           options=FAST)
        assert r.kind == "histograms-log-multi"
        assert len(r.details["sampled_grid"]) == 2

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            run_histograms("nope", seed=0)


class TestPipeline:
    def test_report_layout(self, surrogate):
        pts = [[1.0, 2.0, 50.0], [2.0, 3.0, 100.0]]
        r = run_scaling_pipeline(surrogate, "power-law", methods=("gls", "ols"),
                                 n_boot=4, seed=1, predict_points=pts,
                                 options=FAST)
        gls = r.methods["gls"]
        for g in surrogate.groups:
            assert f"sigma_obs:{g}" in gls
            assert f"relerr:{g}" in gls
        assert "pred:0" in gls and "pred:1" in gls
        assert "ci95" in gls["beta0"]
        assert set(r.details["point_estimates"]) == {"gls", "ols"}

    def test_loglinear_relerr_equals_sigma(self, surrogate):
        r = run_scaling_pipeline(surrogate, "log-linear", methods=("gls",),
                                 n_boot=3, seed=2, options=FAST)
        for g in surrogate.groups:
            s = r.methods["gls"][f"sigma_obs:{g}"]["mean"]
            assert r.methods["gls"][f"relerr:{g}"]["mean"] == pytest.approx(s)

    def test_mode_validation(self, surrogate):
        with pytest.raises(ValueError):
            run_scaling_pipeline(surrogate, "affine-linear", n_boot=3, seed=0)
        with pytest.raises(ValueError, match="power-law"):
            run_scaling_pipeline(surrogate, "power-law", methods=("gls", "tls"),
                                 n_boot=3, seed=0)

    def test_determinism(self, surrogate):
        kw = dict(methods=("ols",), n_boot=4, seed=5, options=FAST)
        r1 = run_scaling_pipeline(surrogate, "log-linear", **kw)
        r2 = run_scaling_pipeline(surrogate, "log-linear", **kw)
        assert r1.to_dict() == r2.to_dict()


class TestSensitivity:
    def test_identity_scale_leaves_results_unchanged(self, surrogate):
        r = run_errorbar_sensitivity(surrogate, "power-law", scale_factor=1.0,
                                     methods=("map",), options=FAST)
        e = r.details["map"]
        assert e["base"]["beta"] == e["modified"]["beta"]
        assert all(s == 0.0 for s in e["beta_shift"])

    def test_doubled_errors_report_shifts(self, surrogate):
        pts = [[1.0, 2.0, 50.0]]
        r = run_errorbar_sensitivity(surrogate, "power-law", scale_factor=2.0,
                                     methods=("gls", "map"), predict_points=pts,
                                     options=FAST)
        gls = r.details["gls"]
        assert set(gls["base"]["sigma_obs"]) == set(surrogate.groups)
        assert len(gls["prediction_rel_change"]) == 1
        assert any(s > 0 for s in gls["beta_shift"])

    def test_averaged_mode(self, surrogate):
        r = run_errorbar_sensitivity(surrogate, "power-law", averaged=True,
                                     methods=("map",), options=FAST)
        assert r.metadata["averaged"] is True

    def test_exactly_one_modification(self, surrogate):
        with pytest.raises(ValueError):
            run_errorbar_sensitivity(surrogate, "power-law")
        with pytest.raises(ValueError):
            run_errorbar_sensitivity(surrogate, "power-law", scale_factor=2.0,
                                     averaged=True)
