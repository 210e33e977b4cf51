"""Command-line experiment runner: configuration, orchestration, persistence.

TOML in (human-edited), CSV out for bulk samples, JSON for verdicts, plus a
manifest that suffices to reproduce the run bit-exactly.  Exit codes:
0 all verdicts pass, 1 some verdict failed, 2 configuration error, 3 budget
exhausted (partial results flagged in the manifest).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

_ENV_PREFIX = "PSHE_"


@dataclass
class ExperimentConfig:
    subcommand: str = "suite"
    dim: int = 3
    beta: float = 0.2
    seed: int = 20260808
    out_dir: str = "pshe_out"
    replicas: int | None = None
    backend: str = "gram"
    threads: int = 1
    scale: str = "ci"
    n_paths: int = 256
    horizons: list = field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0])
    starts: list = field(default_factory=lambda: [[0.0, 0.0, 0.0]])
    dt0: float = 1.0 / 64
    grade: float = 64.0
    dt_cap: float = 0.25
    dx: float = 0.25
    lattice_dt: float = 1.0 / 64
    budget_minutes: float = 120.0
    path_ceiling: int = 50_000_000
    base_t: float = 8.0
    sim_extent: float = 15.0
    limit_points: list = field(default_factory=lambda: [[1.0, 0.0, 0.0, 0.0]])
    limit_field: str = "H"
    only: list = field(default_factory=list)

    def validate(self) -> list[str]:
        errs = []
        if self.dim < 3:
            errs.append(f"dim = {self.dim}: need dim >= 3")
        if self.beta < 0:
            errs.append(f"beta = {self.beta}: must be nonnegative")
        if self.replicas is not None and self.replicas < 1:
            errs.append(f"replicas = {self.replicas}: must be positive")
        hs = list(self.horizons)
        if not hs or any(b >= a for b, a in zip(hs, hs[1:])) or hs[0] <= 0:
            errs.append(f"horizons = {hs}: need positive, strictly increasing")
        if self.backend not in ("gram", "field"):
            errs.append(f"backend = {self.backend!r}: must be gram or field")
        if self.scale not in ("quick", "ci", "desk"):
            errs.append(f"scale = {self.scale!r}: must be quick, ci, or desk")
        if self.n_paths < 1:
            errs.append(f"n_paths = {self.n_paths}: must be positive")
        if self.threads < 1:
            errs.append(f"threads = {self.threads}: must be positive")
        if self.budget_minutes <= 0:
            errs.append(f"budget_minutes = {self.budget_minutes}: must be positive")
        return errs


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    data = {}
    if path is not None:
        import tomli
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    cfg = ExperimentConfig()
    unknown = [k for k in data if not hasattr(cfg, k)]
    if unknown:
        raise ValueError(f"unknown config fields: {unknown}")
    for k, v in data.items():
        setattr(cfg, k, v)
    env_map = {"SEED": ("seed", int), "OUT": ("out_dir", str),
               "REPLICAS": ("replicas", int), "BACKEND": ("backend", str),
               "THREADS": ("threads", int), "SCALE": ("scale", str)}
    for env_key, (attr, cast) in env_map.items():
        raw = os.environ.get(_ENV_PREFIX + env_key)
        if raw is not None:
            setattr(cfg, attr, cast(raw))
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def _write_manifest(cfg: ExperimentConfig, out_dir: str, wall: float,
                    extra: dict | None = None) -> None:
    import scipy
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": {"python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "pshe": "0.1.0"},
        "wall_time_s": wall,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def _csv_samples(path, sample, beta: float):
    """One record per (replica, horizon, start): the documented bulk schema."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "backend", "beta", "T", "x0", "x1", "x2",
                    "Z", "logZ", "diag"])
        r_, k_, m_ = sample.z.shape
        for r in range(r_):
            for k in range(k_):
                for m in range(m_):
                    x = sample.starts[m]
                    w.writerow([r, sample.backend, beta, sample.horizons[k],
                                x[0], x[1], x[2],
                                f"{sample.z[r, k, m]:.12g}",
                                f"{sample.log_z[r, k, m]:.12g}", ""])


def _kernel_pair(dim):
    from .kernels import autocorrelate, make_mollifier
    m = make_mollifier(dim)
    return m, autocorrelate(m)


def cmd_constants(cfg: ExperimentConfig, out_dir: str) -> int:
    from .acceptance import SCALES, suite_constants
    table = suite_constants(SCALES[cfg.scale], cfg.seed)
    table.to_json(os.path.join(out_dir, "constants.json"))
    table.to_csv(os.path.join(out_dir, "constants.csv"))
    print(table.to_json())
    return EXIT_OK


def cmd_simulate_z(cfg: ExperimentConfig, out_dir: str) -> int:
    from .polymer import PolymerConfig, sample_polymer_field, sample_polymer_gram
    from .environment import LatticeSpec
    m, V = _kernel_pair(cfg.dim)
    reps = cfg.replicas or 100
    if cfg.n_paths * reps > cfg.path_ceiling:
        print("path-count ceiling exceeded", file=sys.stderr)
        return EXIT_BUDGET
    pc = PolymerConfig(dim=cfg.dim, beta=cfg.beta, n_paths=cfg.n_paths,
                       horizons=tuple(cfg.horizons),
                       starts=tuple(tuple(s) for s in cfg.starts),
                       seed=cfg.seed, dt0=cfg.dt0, grade=cfg.grade,
                       dt_cap=cfg.dt_cap, backend=cfg.backend)
    if cfg.backend == "gram":
        sample = sample_polymer_gram(V, pc, reps)
    else:
        t_max = cfg.horizons[-1]
        box = math.ceil(8.0 * math.sqrt(t_max) / cfg.dx) * cfg.dx
        lat = LatticeSpec(dim=cfg.dim, dx=cfg.dx, box=box, dt=cfg.lattice_dt,
                          horizon=t_max)
        sample = sample_polymer_field(m, V, pc, lat, reps)
    _csv_samples(os.path.join(out_dir, "z_samples.csv"), sample, cfg.beta)
    print(f"wrote {reps} replicas x {len(cfg.horizons)} horizons x "
          f"{len(cfg.starts)} starts")
    return EXIT_OK


def cmd_limit_sample(cfg: ExperimentConfig, out_dir: str) -> int:
    from . import limits
    from .acceptance import SCALES, suite_constants
    table = suite_constants(SCALES["quick"], cfg.seed)
    pts = [(p[0], np.array(p[1:1 + cfg.dim])) for p in cfg.limit_points]
    spec = limits.build_limit_spec(cfg.limit_field, cfg.dim, pts, table.gamma_sq)
    reps = cfg.replicas or 10000
    samples = limits.sample_limit(spec, reps, cfg.seed)
    path = os.path.join(out_dir, "limit_samples.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"pt{i}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([f"{v:.10g}" for v in row])
    np.savetxt(os.path.join(out_dir, "limit_cov.csv"), spec.cov, delimiter=",")
    print(f"wrote {reps} joint samples at {len(pts)} points")
    return EXIT_OK


_SUBCOMMAND_CRITERIA = {
    "fluctuation": ["pointwise_clt", "space_time_cov"],
    "covariance-decay": ["decorrelation"],
    "bracket": ["bracket_decay", "bracket_limit"],
    "averaged": ["averaged"],
    "stationary-check": ["stationarity"],
    "suite": None,
}


def cmd_criteria(cfg: ExperimentConfig, out_dir: str, which) -> int:
    from .acceptance import SCALES, run_suite, suite_constants
    from .statlab import all_passed, reports_to_json
    t0 = time.time()
    budget_s = cfg.budget_minutes * 60.0
    reports = []
    exhausted = False
    only = which if which else (cfg.only or None)
    try:
        reports = run_suite(cfg.scale, cfg.seed, only=only)
    except TimeoutError:
        exhausted = True
    reports_to_json(reports, os.path.join(out_dir, "verdicts.json"))
    # identical arguments to the table the suite built internally, so the
    # figure overlays quote exactly the numbers behind the verdicts
    table = suite_constants(SCALES[cfg.scale], cfg.seed + 4)
    table.to_json(os.path.join(out_dir, "constants.json"))
    for r in reports:
        if "samples" in r.details and "noise_vars" in r.details:
            path = os.path.join(out_dir, "fluctuation_samples.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["replica", "sample", "noise_var"])
                for i, (s, nv) in enumerate(zip(r.details["samples"],
                                                r.details["noise_vars"])):
                    w.writerow([i, f"{s:.12g}", f"{nv:.12g}"])
            break
    _write_manifest(cfg, out_dir, time.time() - t0,
                    {"partial": exhausted,
                     "all_passed": bool(reports) and all_passed(reports)})
    if exhausted or time.time() - t0 > budget_s:
        print("budget exhausted; partial results flagged", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK if reports and all_passed(reports) else EXIT_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pshe",
        description="Numerical laboratory for polymer / smoothed-SHE "
                    "Gaussian fluctuation statistics")
    parser.add_argument("subcommand", choices=[
        "constants", "simulate-z", "fluctuation", "covariance-decay",
        "bracket", "averaged", "stationary-check", "limit-sample", "suite"])
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--backend", choices=["gram", "field"], default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--scale", choices=["quick", "ci", "desk"], default=None)
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "out_dir": args.out,
                 "replicas": args.replicas, "backend": args.backend,
                 "threads": args.threads, "scale": args.scale,
                 "subcommand": args.subcommand}
    try:
        cfg = load_config(args.config, overrides)
    except Exception as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    errs = cfg.validate()
    if errs:
        for e in errs:
            print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.time()
    try:
        if args.subcommand == "constants":
            rc = cmd_constants(cfg, out_dir)
        elif args.subcommand == "simulate-z":
            rc = cmd_simulate_z(cfg, out_dir)
        elif args.subcommand == "limit-sample":
            rc = cmd_limit_sample(cfg, out_dir)
        else:
            return cmd_criteria(cfg, out_dir, _SUBCOMMAND_CRITERIA[args.subcommand])
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        raise
    _write_manifest(cfg, out_dir, time.time() - t0)
    return rc


if __name__ == "__main__":
    sys.exit(main())
