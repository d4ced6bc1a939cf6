"""Batch experiment runner: config in, CSV/TSV artifacts and a manifest out."""

from __future__ import annotations

import csv
import io
import logging
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .assoc import cox_grimmett_profile, estimate_covariances
from .config import ExperimentConfig, load_config, serialize_config
from .errors import ConfigError, DomainError, ModelGuardError
from .gibbs import coupling_from_dict, sample_ensemble, spin_space_from_dict
from .limits import (
    BLOCK_COLUMNS,
    REPORT_COLUMNS,
    PartialSumSpec,
    block_diagnostics,
    convergence_curve,
    make_scheme,
    stabilized_sums,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3

SEED_RULE = "replica r draws from Philox(SeedSequence(seed, spawn_key=(r,)))"


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.12g" % float(x)
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def build_id() -> str:
    """``git describe``-style identifier, falling back to the package version."""
    root = Path(__file__).resolve().parents[2]
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=root,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        return f"{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        return __version__


def _model_label(cfg: ExperimentConfig) -> str:
    if cfg.analysis.get("name"):
        return cfg.analysis["name"]
    m = cfg.model
    return f"{m['coupling']}-{m['spins']}-N{m['N']}"


def _sample(cfg: ExperimentConfig, threads: int, cache_dir):
    m = cfg.model
    coupling = coupling_from_dict(cfg.coupling_dict())
    spins = spin_space_from_dict(cfg.spin_dict())
    return sample_ensemble(
        coupling,
        spins,
        N=m["N"],
        burn_in=m["burn_in"],
        thin=m["thin"],
        R=m["R"],
        seed=m["seed"],
        boundary=m["boundary"],
        r_cut=m["R_cut"],
        windows=m["windows"],
        threads=threads,
        cache_dir=cache_dir,
    )


def _covariance_rows(cov, profile):
    rows = []
    if cov.stationary:
        for j in range(cov.max_lag + 1):
            u = profile.u_hat[j] if j < profile.u_hat.size else float("nan")
            use = profile.se[j] if j < profile.se.size else float("nan")
            rows.append(["pooled", "", j, cov.lag_cov[j], cov.se[j], u, use])
        return rows
    lags = np.arange(-cov.max_lag, cov.max_lag + 1)
    for s, site in enumerate(cov.sites):
        for q, d in enumerate(lags):
            if int(d) < 0:
                continue
            u = profile.u_hat[s, d] if d < profile.u_hat.shape[1] else float("nan")
            use = profile.se[s, d] if d < profile.se.shape[1] else float("nan")
            rows.append(["site", int(site), int(d), cov.lag_cov[s, q], cov.se[s, q], u, use])
    return rows


COVARIANCE_COLUMNS = ("mode", "site", "lag", "cov", "se", "u_tail", "u_tail_se")


def analyse(ens, cfg: ExperimentConfig):
    """All report tables for one ensemble; pure given the ensemble and config."""
    a = cfg.analysis
    model = _model_label(cfg)
    seed = cfg.model["seed"]
    report_rows, block_rows, cov_rows, plot = [], [], [], {}
    notes = []
    reports = []
    blocks_out = []
    stationary = a["stationary"]
    max_n = max(a["n"])
    for k in a["k"]:
        spec = PartialSumSpec(k, a["n"], a["r"], a["centering"], a["scaling"], stationary)
        sums = stabilized_sums(ens, spec, sigma=a["sigma"], cov_max_lag=a["max_lag"])
        notes.extend(sums.notes)
        be = {}
        if a["blocks"]:
            for n in a["n"]:
                bd = block_diagnostics(ens, make_scheme(n, a["delta"]), k, stationary=stationary)
                be[n] = bd.be_bound
                block_rows.append(bd.csv_fields())
                blocks_out.append(bd)
        rep = convergence_curve(sums, model=model, seed=seed, be_bounds=be)
        reports.append(rep)
        report_rows.extend(row.csv_fields() for row in rep.rows)
        for r in a["r"]:
            plot[(k, r)] = [(n, float(rep.d_r[r][i])) for i, n in enumerate(a["n"])]
    region = ens if ens.periodic else ens.window(min(a["k"]), min(ens.size - min(a["k"]), max_n))
    if stationary:
        cov = estimate_covariances(region, stationary=True, max_lag=a["max_lag"])
        n_max = max(1, min(32, cov.max_lag // 2))
    else:
        sites = np.unique(np.linspace(0, region.size - 1, min(region.size, 16)).astype(int))
        cov = estimate_covariances(region, stationary=False, max_lag=a["max_lag"], sites=sites)
        n_max = max(1, cov.max_lag // 2)
    profile = cox_grimmett_profile(cov, n_max=n_max, radius=cov.max_lag - n_max)
    cov_rows = _covariance_rows(cov, profile)
    return {
        "report": report_rows,
        "blocks": block_rows,
        "covariance": cov_rows,
        "plot": plot,
        "notes": notes,
        "reports": reports,
        "block_diagnostics": blocks_out,
        "covariance_summary": cov,
        "profile": profile,
    }


def _plot_name(k, r, single_k: bool) -> str:
    tag = ("%.12g" % r).replace(".", "p")
    return f"plotdata_r{tag}.tsv" if single_k else f"plotdata_k{k}_r{tag}.tsv"


def write_artifacts(out_dir: Path, cfg: ExperimentConfig, ens, tables, wall: float) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "report.csv": _csv_text(REPORT_COLUMNS, tables["report"]),
        "covariance.csv": _csv_text(COVARIANCE_COLUMNS, tables["covariance"]),
        "blocks.csv": _csv_text(BLOCK_COLUMNS, tables["blocks"]),
    }
    single_k = len(cfg.analysis["k"]) == 1
    for (k, r), series in tables["plot"].items():
        lines = ["# n\td_r"] + [f"{n}\t{_num(d)}" for n, d in series]
        files[_plot_name(k, r, single_k)] = "\n".join(lines) + "\n"
    if "csv" not in cfg.output["formats"]:
        files = {k: v for k, v in files.items() if not k.endswith(".csv")}
    if "tsv" not in cfg.output["formats"]:
        files = {k: v for k, v in files.items() if not k.endswith(".tsv")}
    meta = ens.meta
    manifest = [
        f"build: {build_id()}",
        f"wall_clock_seconds: {wall:.3f}",
        f"seed_rule: {SEED_RULE}",
        f"replicas: {ens.replicas}",
        f"rows: {ens.n_rows}",
        f"tail_mass: {_num(meta.get('tail_mass', 0.0))}",
        f"retained_mass: {_num(meta.get('retained_mass', 0.0))}",
        f"r_cut_effective: {meta.get('r_cut_effective')}",
        f"tau_int: {meta.get('tau_int')}",
        f"slow_mixing: {meta.get('slow_mixing')}",
        f"cache: {'hit' if meta.get('cache_hit') else 'miss'}",
    ]
    manifest += [f"note: {n}" for n in tables["notes"]]
    manifest += ["", "# config", serialize_config(cfg)]
    files["manifest.txt"] = "\n".join(manifest)
    # one writer per artifact: each file is written whole, via a temp name
    for name, text in sorted(files.items()):
        tmp = out_dir / (name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(out_dir / name)
    return sorted(files)


def run_experiment(
    config_path,
    seed: int | None = None,
    out_dir=None,
    threads: int = 1,
    cache_dir=None,
    stderr=None,
) -> int:
    """Run one experiment end to end; returns the process exit code.

    ``2``: malformed config (line-numbered message); ``3``: a model guard
    tripped (tail mass, zero variance); ``1``: an emitted row violated the
    Kolmogorov corollary bound.
    """
    err = stderr if stderr is not None else sys.stderr
    t0 = time.perf_counter()
    try:
        cfg = load_config(config_path).with_overrides(seed=seed, directory=out_dir)
    except ConfigError as exc:
        print(f"{config_path}: {exc}", file=err)
        return EXIT_CONFIG
    try:
        ens = _sample(cfg, threads, cache_dir)
        tables = analyse(ens, cfg)
    except ModelGuardError as exc:
        print(f"model guard: {exc}", file=err)
        return EXIT_GUARD
    except DomainError as exc:
        print(f"{config_path}: invalid experiment: {exc}", file=err)
        return EXIT_CONFIG
    wall = time.perf_counter() - t0
    target = Path(cfg.output["directory"])
    written = write_artifacts(target, cfg, ens, tables, wall)
    log.info("wrote %s to %s", ", ".join(written), target)
    bad = [row for rep in tables["reports"] for row in rep.rows if not row.dk_bound_ok]
    if bad:
        print(f"Kolmogorov corollary bound violated on {len(bad)} row(s)", file=err)
        return EXIT_INVARIANT
    return EXIT_OK
