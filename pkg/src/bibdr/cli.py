"""Command-line interface: simulate, fit, replicate, check.

Every command accepts ``--config FILE`` (YAML) plus flag overrides; flags
win.  The fully resolved configuration is echoed into the run manifest.
Data CSVs are byte-identical across reruns with equal config and seed;
timestamps live only in manifests.

Exit codes: 0 success, 2 config/schema error, 3 numerical failure,
4 check-suite failure.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time

import click
import numpy as np
import yaml

from . import __version__
from .draws_io import format_float, write_draws_bin, write_draws_csv
from .dr import (MicroSample, ThresholdGrid, bin_counts, fit_rstdr,
                 monotone_rearrange, surface_rows)
from .errors import BibdrError, ConfigError, SchemaError
from .mcmc import ChainConfig
from .rng import RngStream
from .simstudy import (DEFAULT_THRESHOLDS, ScenarioSpec, generate_replication,
                       run_study)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

_MICRO_HEADER = ["t", "site", "s1", "s2", "x", "z_star"]
_TRUTH_HEADER = ["t", "site", "s1", "s2", "threshold", "f_true"]
_SURFACE_HEADER = ["period", "site", "s1", "s2", "threshold",
                   "mean", "lo95", "hi95"]


def _default_out() -> str:
    return os.environ.get("BIBDR_OUT", "bibdr_out")


def _load_config(path, overrides: dict) -> dict:
    cfg = {}
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must be a mapping")
        cfg.update(loaded)
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    return cfg


def _take(cfg: dict, key, default):
    val = cfg.get(key, default)
    return default if val is None else val


def _check_keys(cfg: dict, allowed) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def _chain_config(cfg: dict) -> ChainConfig:
    config = ChainConfig(
        iterations=int(_take(cfg, "iterations", 3000)),
        burn_in=int(_take(cfg, "burn_in", 1000)),
        thin=int(_take(cfg, "thin", 1)),
        model=str(_take(cfg, "model", "BIB")),
        smoother=str(_take(cfg, "smoother", "mccausland")),
        M=int(_take(cfg, "knots", 25)),
        seed=int(_take(cfg, "seed", 0)),
        skip_unused_pg=bool(_take(cfg, "skip_unused_pg", False)),
        pg_approx_above=cfg.get("pg_approx_above"),
    )
    config.validate()
    return config


def _thresholds(cfg: dict) -> tuple:
    vals = tuple(float(a) for a in _take(cfg, "thresholds", DEFAULT_THRESHOLDS))
    ThresholdGrid(np.asarray(vals))
    return vals


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(out_dir, command, resolved: dict, started: float) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": resolved,
        "runtime_seconds": round(time.time() - started, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Exit(Exception):
    def __init__(self, code):
        self.code = code


def _run(func):
    try:
        func()
    except _Exit as e:
        sys.exit(e.code)
    except (ConfigError, SchemaError, yaml.YAMLError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except (BibdrError, FloatingPointError, np.linalg.LinAlgError) as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)


@click.group()
@click.version_option(__version__, prog_name="bibdr")
def main():
    """Robust spatio-temporal distribution regression."""


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--scenario", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--periods", "T", type=int, default=None)
@click.option("--sites-per-period", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def simulate(config_path, scenario, seed, T, sites_per_period, out_dir):
    """Generate one replication of micro-data plus its exact truth surface."""
    started = time.time()

    def go():
        cfg = _load_config(config_path, {
            "scenario": scenario, "seed": seed, "T": T,
            "sites_per_period": sites_per_period, "out": out_dir,
        })
        _check_keys(cfg, {"scenario", "seed", "T", "sites_per_period", "out",
                          "thresholds", "n_lo", "n_hi"})
        spec = ScenarioSpec(
            scenario=int(_take(cfg, "scenario", 1)),
            T=int(_take(cfg, "T", 10)),
            sites_per_period=int(_take(cfg, "sites_per_period", 50)),
            n_lo=float(_take(cfg, "n_lo", 50.0)),
            n_hi=float(_take(cfg, "n_hi", 100.0)),
            thresholds=_thresholds(cfg),
        )
        run_seed = int(_take(cfg, "seed", 0))
        out = str(_take(cfg, "out", _default_out()))
        os.makedirs(out, exist_ok=True)
        samples, truth = generate_replication(spec, RngStream(run_seed, 1))
        micro_rows = []
        site_counter = {}
        site_ids = []
        for s in samples:
            site = site_counter.get(s.period, 0)
            site_counter[s.period] = site + 1
            site_ids.append(site)
            for z in s.responses:
                micro_rows.append([s.period, site,
                                   format_float(s.coords[0]),
                                   format_float(s.coords[1]),
                                   format_float(s.x[1]), format_float(z)])
        truth_rows = []
        for k, a in enumerate(truth.thresholds):
            for i, s in enumerate(samples):
                truth_rows.append([s.period, site_ids[i],
                                   format_float(s.coords[0]),
                                   format_float(s.coords[1]),
                                   format_float(a),
                                   format_float(truth.values[k, i])])
        _write_csv(os.path.join(out, "micro.csv"), _MICRO_HEADER, micro_rows)
        _write_csv(os.path.join(out, "truth.csv"), _TRUTH_HEADER, truth_rows)
        resolved = {"scenario": spec.scenario, "T": spec.T,
                    "sites_per_period": spec.sites_per_period,
                    "n_lo": spec.n_lo, "n_hi": spec.n_hi,
                    "thresholds": list(spec.thresholds),
                    "seed": run_seed, "out": out}
        _write_manifest(out, "simulate", resolved, started)
        click.echo(f"wrote micro.csv ({len(micro_rows)} rows) and truth.csv "
                   f"to {out}")

    _run(go)


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------

def _read_micro_csv(path) -> list:
    by_cell = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = [c for c in _MICRO_HEADER if c not in (rd.fieldnames or [])]
        if missing:
            raise SchemaError(f"missing column(s) in {path}: "
                              f"{', '.join(missing)}")
        for row in rd:
            key = (int(row["t"]), int(row["site"]))
            entry = by_cell.setdefault(
                key, (float(row["s1"]), float(row["s2"]),
                      float(row["x"]), []))
            entry[3].append(float(row["z_star"]))
    samples = []
    for (t, _site), (s1, s2, x, zs) in sorted(by_cell.items()):
        samples.append(MicroSample(period=t, coords=np.array([s1, s2]),
                                   x=np.array([1.0, x]),
                                   responses=np.asarray(zs)))
    return samples


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--data", "data_path", type=click.Path(exists=True),
              default=None, help="micro.csv produced by `bibdr simulate`")
@click.option("--model", type=click.Choice(["BIB", "BN"]), default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--knots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--monotone/--no-monotone", default=None,
              help="rearrange the surface to be nondecreasing in threshold")
@click.option("--out", "out_dir", type=click.Path(), default=None)
def fit(config_path, data_path, model, iterations, burn_in, knots, seed,
        jobs, monotone, out_dir):
    """Fit the distribution-regression surface to micro-data."""
    started = time.time()

    def go():
        cfg = _load_config(config_path, {
            "data": data_path, "model": model, "iterations": iterations,
            "burn_in": burn_in, "knots": knots, "seed": seed, "jobs": jobs,
            "monotone": monotone, "out": out_dir,
        })
        _check_keys(cfg, {"data", "model", "iterations", "burn_in", "thin",
                          "smoother", "knots", "seed", "jobs", "monotone",
                          "thresholds", "out", "skip_unused_pg",
                          "pg_approx_above"})
        if "data" not in cfg:
            raise ConfigError("fit requires a data file (--data or config "
                              "key `data`)")
        thresholds = _thresholds(cfg)
        config = _chain_config(cfg)
        n_jobs = int(_take(cfg, "jobs", 1))
        out = str(_take(cfg, "out", _default_out()))
        os.makedirs(out, exist_ok=True)
        samples = _read_micro_csv(cfg["data"])
        datasets = bin_counts(samples, ThresholdGrid(np.asarray(thresholds)))
        surface = fit_rstdr(datasets, None, config, thresholds=thresholds,
                            keep_draws=True, jobs=n_jobs)
        if bool(_take(cfg, "monotone", False)):
            surface = monotone_rearrange(surface)
        rows = [[r[0], r[1], format_float(r[2]), format_float(r[3]),
                 format_float(r[4]), format_float(r[5]), format_float(r[6]),
                 format_float(r[7])]
                for r in surface_rows(surface, thresholds)]
        _write_csv(os.path.join(out, "surface.csv"), _SURFACE_HEADER, rows)
        draws = {f"cdf_k{k}": surface.draws[k]
                 for k in range(len(thresholds))}
        write_draws_csv(os.path.join(out, "draws.csv"), draws)
        write_draws_bin(os.path.join(out, "draws.bin"), draws)
        resolved = dict(cfg)
        resolved.update({"thresholds": list(thresholds),
                         "iterations": config.iterations,
                         "burn_in": config.burn_in, "model": config.model,
                         "knots": config.M, "seed": config.seed,
                         "jobs": n_jobs, "out": out})
        _write_manifest(out, "fit", resolved, started)
        click.echo(f"wrote surface.csv, draws.csv, draws.bin to {out}")

    _run(go)


# ----------------------------------------------------------------------
# replicate
# ----------------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--scenario", type=int, default=None)
@click.option("--replications", "-R", "R", type=int, default=None)
@click.option("--methods", default=None, help="comma-separated, e.g. BIB,BN")
@click.option("--iterations", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--knots", type=int, default=None)
@click.option("--periods", "T", type=int, default=None)
@click.option("--sites-per-period", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def replicate(config_path, scenario, R, methods, iterations, burn_in,
              knots, T, sites_per_period, seed, jobs, out_dir):
    """Run the replication study and write MSE/coverage summaries."""
    started = time.time()

    def go():
        cfg = _load_config(config_path, {
            "scenario": scenario, "R": R, "methods": methods,
            "iterations": iterations, "burn_in": burn_in, "knots": knots,
            "T": T, "sites_per_period": sites_per_period, "seed": seed,
            "jobs": jobs, "out": out_dir,
        })
        _check_keys(cfg, {"scenario", "R", "methods", "iterations", "burn_in",
                          "thin", "smoother", "knots", "T",
                          "sites_per_period", "n_lo", "n_hi", "thresholds",
                          "seed", "jobs", "out", "skip_unused_pg",
                          "pg_approx_above"})
        spec = ScenarioSpec(
            scenario=int(_take(cfg, "scenario", 1)),
            T=int(_take(cfg, "T", 10)),
            sites_per_period=int(_take(cfg, "sites_per_period", 50)),
            n_lo=float(_take(cfg, "n_lo", 50.0)),
            n_hi=float(_take(cfg, "n_hi", 100.0)),
            thresholds=_thresholds(cfg),
        )
        raw_methods = _take(cfg, "methods", "BIB,BN")
        if isinstance(raw_methods, str):
            method_list = tuple(m.strip() for m in raw_methods.split(","))
        else:
            method_list = tuple(raw_methods)
        for m in method_list:
            if m not in ("BIB", "BN"):
                raise ConfigError(f"unknown method {m!r}")
        n_rep = int(_take(cfg, "R", 20))
        run_seed = int(_take(cfg, "seed", 0))
        n_jobs = int(_take(cfg, "jobs", 1))
        config = _chain_config({**cfg, "seed": run_seed, "model": "BIB"})
        out = str(_take(cfg, "out", _default_out()))
        os.makedirs(out, exist_ok=True)
        table = run_study(spec, methods=method_list, R=n_rep, jobs=n_jobs,
                          seed=run_seed, chain_config=config)

        mse_rows, cov_rows, raw_rows = [], [], []
        for m in method_list:
            for k, a in enumerate(table.thresholds):
                mse_rows.append([m, format_float(a),
                                 format_float(table.mse_mean[m][k]),
                                 format_float(table.mse_lo[m][k]),
                                 format_float(table.mse_hi[m][k])])
                cov_rows.append([m, format_float(a),
                                 format_float(table.cp[m][k]),
                                 format_float(table.al[m][k])])
            for rep in range(n_rep):
                for k, a in enumerate(table.thresholds):
                    raw_rows.append([m, rep, format_float(a),
                                     format_float(table.raw_mse[m][rep, k])])
        _write_csv(os.path.join(out, "mse_by_threshold.csv"),
                   ["method", "threshold", "mean", "lo", "hi"], mse_rows)
        _write_csv(os.path.join(out, "coverage.csv"),
                   ["method", "threshold", "cp_percent", "al"], cov_rows)
        _write_csv(os.path.join(out, "replication_raw.csv"),
                   ["method", "replication", "threshold", "mse"], raw_rows)
        meta = {"seed": run_seed, "R": n_rep, "scenario": spec.scenario,
                "T": spec.T, "sites_per_period": spec.sites_per_period,
                "n_lo": spec.n_lo, "n_hi": spec.n_hi,
                "thresholds": list(spec.thresholds),
                "covariates": "intercept + x",
                "n_draw_rule": "floor of Uniform(n_lo, n_hi)",
                "methods": list(method_list),
                "iterations": config.iterations, "burn_in": config.burn_in,
                "knots": config.M, "failures": table.failures,
                "version": __version__}
        with open(os.path.join(out, "study_meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_manifest(out, "replicate", meta, started)
        click.echo(f"wrote mse_by_threshold.csv, coverage.csv, "
                   f"replication_raw.csv, study_meta.json to {out}")

    _run(go)


# ----------------------------------------------------------------------
# check
# ----------------------------------------------------------------------

def _suite_pg(seed):
    from .pg import draw_pg_vector
    from ._pg_python import _pg_moments
    lines, ok = [], True
    rng = RngStream(seed, 11)
    n = 100_000
    for b in (1, 3, 10, 50):
        for c in (0.0, 0.5, 1.0, 2.0, 5.0):
            draws = draw_pg_vector(np.full(n, b, dtype=np.int64),
                                   np.full(n, c), rng)
            mean, var = _pg_moments(b, c)
            se_mean = np.sqrt(var / n)
            z_mean = (draws.mean() - mean) / se_mean
            z_var = (draws.var() - var) / (var * np.sqrt(2.0 / n))
            good = abs(z_mean) < 5 and abs(z_var) < 5
            ok &= good
            lines.append(f"  PG(b={b}, c={c}): z_mean={z_mean:+.2f} "
                         f"z_var={z_var:+.2f} {'ok' if good else 'FAIL'}")
    return ok, lines


def _suite_linalg(seed):
    from .linalg import (BlockTridiagonalPrecision, sample_mccausland,
                         sample_rue)
    rng = RngStream(seed, 12)
    gen = rng.generator
    worst = 0.0
    for _ in range(50):
        M = int(gen.integers(1, 4))
        T = int(gen.integers(2, 1 + 8 // M))
        diag, off = [], []
        for t in range(T):
            a = gen.standard_normal((M, M))
            diag.append(a @ a.T + (M + 2) * np.eye(M))
            if t < T - 1:
                off.append(0.3 * gen.standard_normal((M, M)))
        q = BlockTridiagonalPrecision(diag, off)
        m = gen.standard_normal(M * T)
        dense_mean = np.linalg.solve(q.to_dense(), m)
        x_rue = sample_rue(m, q, rng, noise=False)
        x_mcc = np.concatenate(
            sample_mccausland(m.reshape(T, M), q, rng, noise=False))
        for x in (x_rue, x_mcc):
            worst = max(worst, float(np.abs(x - dense_mean).max()))
    ok = worst < 1e-8
    return ok, [f"  block-sampler solve error vs dense oracle: {worst:.2e} "
                f"{'ok' if ok else 'FAIL'}"]


def _suite_geweke(seed, cycles):
    from .mcmc import geweke_check
    report = geweke_check(n_cycles=cycles, seed=seed)
    zmax = max(abs(z) for z in report.values())
    ok = zmax < 4.0
    lines = [f"  {name}: z={z:+.2f}" for name, z in sorted(report.items())]
    lines.append(f"  max |z| = {zmax:.2f} over {cycles} cycles "
                 f"{'ok' if ok else 'FAIL'}")
    return ok, lines


@main.command()
@click.option("--suite", type=click.Choice(["pg", "linalg", "geweke", "all"]),
              default="all")
@click.option("--seed", type=int, default=0)
@click.option("--cycles", type=int, default=4000,
              help="Geweke successive-conditional cycles")
def check(suite, seed, cycles):
    """Run built-in validation suites; nonzero exit on any failure."""

    def go():
        suites = {"pg": lambda: _suite_pg(seed),
                  "linalg": lambda: _suite_linalg(seed),
                  "geweke": lambda: _suite_geweke(seed, cycles)}
        selected = list(suites) if suite == "all" else [suite]
        all_ok = True
        for name in selected:
            ok, lines = suites[name]()
            all_ok &= ok
            click.echo(f"[{name}] {'PASS' if ok else 'FAIL'}")
            for line in lines:
                click.echo(line)
        if not all_ok:
            raise _Exit(EXIT_CHECK)

    _run(go)


if __name__ == "__main__":
    main()
