"""Command-line front end.

Subcommands: fit, table1, table2, histograms, pipeline, sensitivity, gen.
Outputs go to the --out directory as result.json (the full report),
table.csv, histograms.csv (when applicable) and meta.json (seed, version,
config echo). All writes are atomic (temp file + rename), and for a fixed
seed result.json is byte-identical across runs; the only nondeterministic
content (a timestamp) lives in meta.json.

Exit codes: 0 success, 1 runtime failure, 2 usage error. A JSON config
passed with --config overrides command-line flags (with a warning on
stderr for each override).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, datagen, experiments, kernels
from .baselines import fit_map, fit_ols, fit_rob, fit_tls
from .gls import OptimOptions, fit_gls
from .models import (LOGLIN, POWER, Dataset, ModelSpec, read_dataset_csv)

MODEL_NAMES = {
    "linear": "simple-linear",
    "affine": "affine-linear",
    "loglinear": "log-linear",
    "powerlaw": "power-law",
}
GEN_KINDS = ("outlier1d", "outlier-multi", "log1d", "log-multi", "surrogate")


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    methods: tuple = ("gls",)
    data: str | None = None
    seed: int | None = None
    boot: int = 0
    mc: int = 100
    out: str = "out"
    threads: int = 1
    kind: str | None = None
    mode: str | None = None
    grid_samples: int = 50
    replicates: int = 10
    rows: int = 600
    groups: int = 8
    beta: tuple | None = None
    predict: str | None = None
    scale: float | None = None
    averaged: bool = False
    max_rel_err: float = 1.0
    optim: dict = field(default_factory=dict)
    config_path: str | None = None


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="glsreg",
        description="Geodesic least squares regression and its experiment suite.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_data=False):
        p.add_argument("--seed", type=int, default=None,
                       help="root seed (auto-generated and recorded if absent)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--config", dest="config_path", default=None,
                       help="JSON config; overrides flags")
        p.add_argument("--threads", type=int, default=1,
                       help="cap on internal worker threads (currently serial)")
        if needs_data:
            p.add_argument("--data", required=True, help="dataset CSV path")
            p.add_argument("--max-rel-err", type=float, default=1.0,
                           help="relative-error sanity ceiling (inf disables)")

    p = sub.add_parser("fit", help="fit one dataset with one or more methods")
    common(p, needs_data=True)
    p.add_argument("--model", required=True, choices=sorted(MODEL_NAMES))
    p.add_argument("--method", default="gls",
                   help="comma-separated subset of gls,ols,map,tls,rob")
    p.add_argument("--boot", type=int, default=0,
                   help="bootstrap replicates for error bars (0 = none)")

    for name in ("table1", "table2"):
        p = sub.add_parser(name, help=f"self-contained {name} reproduction")
        common(p)
        p.add_argument("--mc", type=int, default=100, help="Monte Carlo runs")
        p.add_argument("--method", default=",".join(experiments.ALL_METHODS))

    p = sub.add_parser("histograms", help="coefficient-recovery histogram study")
    common(p)
    p.add_argument("--kind", required=True, choices=["outlier-multi", "log-multi"])
    p.add_argument("--grid-samples", dest="grid_samples", type=int, default=50)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--rows", type=int, default=616)
    p.add_argument("--method", default=",".join(experiments.ALL_METHODS))

    p = sub.add_parser("pipeline", help="grouped scaling fit with bootstrap")
    common(p, needs_data=True)
    p.add_argument("--mode", required=True, choices=["loglinear", "powerlaw"])
    p.add_argument("--method", default="gls,ols,map")
    p.add_argument("--boot", type=int, default=100)
    p.add_argument("--predict", default=None,
                   help="CSV of prediction points (x1,x2,... header)")

    p = sub.add_parser("sensitivity", help="error-bar sensitivity rerun")
    common(p, needs_data=True)
    p.add_argument("--mode", required=True, choices=["loglinear", "powerlaw"])
    p.add_argument("--method", default="gls,map")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scale", type=float, default=None,
                   help="multiply all error bars by this factor")
    g.add_argument("--averaged", action="store_true",
                   help="replace error bars by their per-variable averages")
    p.add_argument("--predict", default=None)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--kind", required=True, choices=list(GEN_KINDS))
    p.add_argument("--rows", type=int, default=600)
    p.add_argument("--groups", type=int, default=8)
    p.add_argument("--beta", default=None,
                   help="comma-separated true coefficients (multi kinds)")
    return parser


def parse_args(argv) -> RunConfig:
    """Parse argv into a RunConfig; exits with code 2 on usage errors."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(command=ns.command)
    for name in vars(ns):
        if name == "method":
            continue
        if hasattr(cfg, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "method"):
        methods = tuple(m.strip() for m in ns.method.split(",") if m.strip())
        if not methods:
            parser.error("--method list is empty")
        cfg.methods = methods
    if hasattr(ns, "beta") and ns.beta is not None:
        try:
            cfg.beta = tuple(float(v) for v in ns.beta.split(","))
        except ValueError:
            parser.error(f"--beta must be a comma-separated float list, got {ns.beta!r}")
    if cfg.config_path is not None:
        _apply_config(cfg, parser)
    if cfg.seed is None:
        cfg.seed = secrets.randbelow(1 << 31)
    if cfg.threads < 1:
        parser.error("--threads must be >= 1")
    return cfg


def _apply_config(cfg: RunConfig, parser):
    try:
        with open(cfg.config_path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except FileNotFoundError:
        parser.error(f"--config file not found: {cfg.config_path}")
    except json.JSONDecodeError as exc:
        parser.error(f"--config is not valid JSON: {exc}")
    if not isinstance(overrides, dict):
        parser.error("--config must contain a JSON object")
    for key, value in overrides.items():
        if key == "optim":
            cfg.optim = dict(value)
            continue
        if key == "methods":
            value = tuple(value)
        if key == "beta" and value is not None:
            value = tuple(float(v) for v in value)
        if not hasattr(cfg, key):
            parser.error(f"--config: unknown key {key!r}")
        current = getattr(cfg, key)
        if current != value:
            print(f"warning: config overrides --{key.replace('_', '-')} "
                  f"({current!r} -> {value!r})", file=sys.stderr)
        setattr(cfg, key, value)


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["method", "parameter", "mean", "sd", "ci95_low", "ci95_high"])
    for method in sorted(report.get("methods", {})):
        params = report["methods"][method]
        for name in params:
            cell = params[name]
            ci = cell.get("ci95", ["", ""])
            w.writerow([method, name, repr(cell["mean"]), repr(cell["sd"]),
                        repr(ci[0]) if ci[0] != "" else "",
                        repr(ci[1]) if ci[1] != "" else ""])
    return buf.getvalue()


def _histograms_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["method", "parameter", "bin_low", "bin_high", "mass"])
    for method in sorted(report.get("histograms", {})):
        for name, hist in report["histograms"][method].items():
            edges, mass = hist["bin_edges"], hist["mass"]
            for i, m in enumerate(mass):
                w.writerow([method, name, repr(edges[i]), repr(edges[i + 1]), repr(m)])
    return buf.getvalue()


def emit_outputs(report: dict, cfg: RunConfig) -> dict:
    """Write result.json, table.csv, histograms.csv (if any) and meta.json."""
    os.makedirs(cfg.out, exist_ok=True)
    paths = {"result": os.path.join(cfg.out, "result.json")}
    _atomic_write(paths["result"], _dump_json(report))
    if report.get("methods"):
        paths["table"] = os.path.join(cfg.out, "table.csv")
        _atomic_write(paths["table"], _table_csv(report))
    if report.get("histograms"):
        paths["histograms"] = os.path.join(cfg.out, "histograms.csv")
        _atomic_write(paths["histograms"], _histograms_csv(report))
    meta = {
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "seed": cfg.seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in vars(cfg).items()},
    }
    paths["meta"] = os.path.join(cfg.out, "meta.json")
    _atomic_write(paths["meta"], _dump_json(meta))
    return paths


def _load_predict_points(path):
    if path is None:
        return None
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not all(h.startswith("x") for h in header):
            raise ValueError(f"prediction file header must be x1,...,xP, got {header!r}")
        pts = [[float(v) for v in rec] for rec in reader if rec]
    if not pts:
        raise ValueError("prediction file has no rows")
    return np.asarray(pts)


def _optim(cfg: RunConfig) -> OptimOptions:
    return OptimOptions.from_dict(cfg.optim) if cfg.optim else OptimOptions()


def _cmd_fit(cfg: RunConfig) -> dict:
    data = read_dataset_csv(cfg.data, max_rel_err=_ceiling(cfg))
    form = MODEL_NAMES[cfg.model]
    spec = ModelSpec(form, data.n_predictors)
    methods = experiments._validate_methods(cfg.methods, form)
    opts = _optim(cfg)
    report = experiments.ExperimentReport(kind="fit", metadata={
        "seed": cfg.seed, "model_form": form, "methods": list(methods),
        "data": os.path.basename(cfg.data), "n_rows": len(data),
    })
    for method in methods:
        if method == "gls":
            fit = fit_gls(spec, data, options=opts)
            beta = fit.params.beta
            extra = {f"sigma_obs:{g}": {"mean": fit.params.sigma_obs[g], "sd": 0.0}
                     for g in data.groups}
            report.details.setdefault("gls", {})["objective"] = fit.objective
            report.details["gls"]["converged"] = fit.converged
        else:
            fn = {"ols": fit_ols, "map": fit_map, "tls": fit_tls, "rob": fit_rob}[method]
            res = fn(spec, data, options=opts) if method == "map" else fn(spec, data)
            beta = res.beta
            extra = {}
            report.details.setdefault(method, {})["converged"] = res.converged
        report.methods[method] = {
            f"beta{i}": {"mean": float(b), "sd": 0.0} for i, b in enumerate(beta)
        }
        report.methods[method].update(extra)
    if cfg.boot > 0:
        pipe = experiments.run_scaling_pipeline(
            data, form, methods=methods, n_boot=cfg.boot, seed=cfg.seed,
            options=opts) if form in (LOGLIN, POWER) else None
        if pipe is not None:
            report.details["bootstrap"] = pipe.to_dict()["methods"]
        else:
            from .resample import bootstrap
            boots = {}
            for method in methods:
                rep = bootstrap(
                    data,
                    lambda d, _m=method: experiments._fit_beta(_m, spec, d, options=opts),
                    cfg.boot, cfg.seed,
                    parameter_names=[f"beta{i}" for i in range(spec.coefficient_count)])
                boots[method] = {
                    name: {"mean": float(rep.mean[j]), "sd": float(rep.sd[j]),
                           "ci95": [float(rep.ci95[j][0]), float(rep.ci95[j][1])]}
                    for j, name in enumerate(rep.parameter_names)
                }
            report.details["bootstrap"] = boots
    return report.to_dict()


def _ceiling(cfg):
    return None if cfg.max_rel_err in (None, float("inf")) else cfg.max_rel_err


def _cmd_gen(cfg: RunConfig) -> dict:
    kind = cfg.kind
    if kind == "outlier1d":
        data = datagen.gen_outlier_1d(cfg.seed)
    elif kind == "log1d":
        data = datagen.gen_log_1d(cfg.seed)
    elif kind == "surrogate":
        data = datagen.gen_surrogate_itpa(cfg.rows, cfg.groups, cfg.seed)
    else:
        beta = cfg.beta or ((5.0, 1.0, 1.0, 1.0) if kind == "outlier-multi"
                            else (5.0, 0.7, 0.8, 0.9))
        predictors, _ = datagen.surrogate_predictors(cfg.rows, cfg.groups, cfg.seed)
        fn = (datagen.gen_outlier_multi if kind == "outlier-multi"
              else datagen.gen_log_multi)
        data = fn(predictors, beta, cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    csv_path = os.path.join(cfg.out, "data.csv")
    from .models import write_dataset_csv
    buf = io.StringIO()
    write_dataset_csv(data, buf)
    _atomic_write(csv_path, buf.getvalue())
    _atomic_write(csv_path[:-4] + ".meta.json", _dump_json(data.meta))
    return {"kind": f"gen-{kind}", "methods": {}, "histograms": {},
            "details": {"csv": "data.csv", "n_rows": len(data),
                        "groups": list(data.groups)},
            "metadata": {"seed": cfg.seed, "generator": kind}}


def run(cfg: RunConfig) -> dict:
    if cfg.command == "fit":
        return _cmd_fit(cfg)
    if cfg.command == "table1":
        return experiments.run_table1(cfg.seed, n_runs=cfg.mc, methods=cfg.methods,
                                      options=_optim(cfg)).to_dict()
    if cfg.command == "table2":
        return experiments.run_table2(cfg.seed, n_runs=cfg.mc, methods=cfg.methods,
                                      options=_optim(cfg)).to_dict()
    if cfg.command == "histograms":
        return experiments.run_histograms(
            cfg.kind, n_grid_samples=cfg.grid_samples, seed=cfg.seed,
            n_replicates=cfg.replicates, n_rows=cfg.rows, methods=cfg.methods,
            options=_optim(cfg)).to_dict()
    if cfg.command == "pipeline":
        data = read_dataset_csv(cfg.data, max_rel_err=_ceiling(cfg))
        return experiments.run_scaling_pipeline(
            data, MODEL_NAMES[cfg.mode], methods=cfg.methods, n_boot=cfg.boot,
            seed=cfg.seed, predict_points=_load_predict_points(cfg.predict),
            options=_optim(cfg)).to_dict()
    if cfg.command == "sensitivity":
        data = read_dataset_csv(cfg.data, max_rel_err=_ceiling(cfg))
        return experiments.run_errorbar_sensitivity(
            data, MODEL_NAMES[cfg.mode], scale_factor=cfg.scale,
            averaged=cfg.averaged, methods=cfg.methods,
            predict_points=_load_predict_points(cfg.predict),
            options=_optim(cfg)).to_dict()
    if cfg.command == "gen":
        return _cmd_gen(cfg)
    raise ValueError(f"unknown command {cfg.command!r}")


def main(argv=None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        report = run(cfg)
        paths = emit_outputs(report, cfg)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {paths['result']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
