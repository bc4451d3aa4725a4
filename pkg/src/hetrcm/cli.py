"""Command-line entry point: ``hetrcm {analytic,degree,theta,fss,sitebond,validate}``.

Exit codes: 0 success, 1 failed validation checks, 2 invalid configuration,
3 regime refusal, 4 capacity exceeded, 5 I/O failure, 6 numerical
non-convergence.  Errors are reported as one JSON object on stdout.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    Regime,
    analytic_report,
    classify_regime,
    degree_pmf,
    integral_closed_form,
    unit_ball_volume,
)
from .cloud import sample_cloud
from .config import KEYS, ConstraintError, RunConfig, parse_config
from .errors import RCMError
from .experiments import (
    run_degree_study,
    run_finite_size_contrast,
    run_theta_scan,
    site_bond_renormalization,
)
from .graph import build_graph, canonical_partition, components
from .oracle import QuadratureSpec, bfs_components, mixing_pmf_oracle, quadrature_integral
from .params import Boundary, BoxDomain, ModelParams

EXIT_IO = 5
EXIT_CHECK_FAILED = 1


class OutputError(RCMError):
    exit_code = EXIT_IO
    kind = "io"


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run_id(cfg: RunConfig) -> str:
    """Content hash of the effective configuration."""
    blob = json.dumps(cfg.provenance(), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    if not out.is_dir():
        raise OutputError(f"output directory {str(out)!r} does not exist")
    return out


def _emit(cfg: RunConfig, name: str, csv_text: str, summary: dict, started: float) -> dict:
    out = _out_dir(cfg)
    rid = run_id(cfg)
    doc = {
        "run_id": rid,
        "version": __version__,
        "config": cfg.provenance(),
        "result": summary,
        "files": [f"{name}.csv", f"{name}.json"],
    }
    timing = {"run_id": rid, "seed": cfg.seed, "workers": cfg.workers,
              "wall_time_s": time.perf_counter() - started}
    try:
        (out / f"{name}.csv").write_text(csv_text, encoding="utf-8", newline="\n")
        (out / f"{name}.json").write_text(_dumps(doc), encoding="utf-8")
        (out / f"{name}.timing.json").write_text(_dumps(timing), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"writing results to {str(out)!r} failed: {exc}") from exc
    return doc


def cmd_analytic(cfg: RunConfig) -> int:
    params = cfg.params
    regime = classify_regime(params)
    if regime is Regime.INFINITE_DEGREE:
        err = {"error": "regime", "regime": regime.value, "v_d": unit_ball_volume(params.d),
               "params": params.as_dict(),
               "message": "min(alpha, tau*alpha) <= d: every particle has infinitely many "
                          "neighbours, so c1, the mean degree and the pmf do not exist"}
        sys.stdout.write(_dumps(err))
        return 3
    report = analytic_report(params, cfg.kmax)
    sys.stdout.write(_dumps(report.as_dict()))
    return 0


def cmd_degree(cfg: RunConfig) -> int:
    started = time.perf_counter()
    _out_dir(cfg)
    if cfg.boundary != "torus":
        raise ConstraintError("boundary", "degree studies run on a torus")
    res = run_degree_study(cfg.params, cfg.L, cfg.R, cfg.seed, workers=cfg.workers)
    _emit(cfg, "degree", res.csv(), res.summary(), started)
    return 0


def _need_free(cfg: RunConfig) -> None:
    if cfg.boundary != "free":
        raise ConstraintError("boundary", "spanning experiments need a free boundary")


def cmd_theta(cfg: RunConfig) -> int:
    started = time.perf_counter()
    _out_dir(cfg)
    _need_free(cfg)
    lambdas = cfg.lambdas or [float(cfg.lam)]
    res = run_theta_scan(cfg.params, lambdas, cfg.L, cfg.R, cfg.seed,
                         face_band=cfg.face_band, epsilon=cfg.epsilon, workers=cfg.workers)
    _emit(cfg, "theta", res.csv(), res.summary(), started)
    return 0


def cmd_fss(cfg: RunConfig) -> int:
    started = time.perf_counter()
    _out_dir(cfg)
    _need_free(cfg)
    res = run_finite_size_contrast(cfg.params, float(cfg.lam), cfg.sides, cfg.R, cfg.seed,
                                   face_band=cfg.face_band, epsilon=cfg.epsilon,
                                   workers=cfg.workers)
    _emit(cfg, "fss", res.csv(), res.summary(), started)
    return 0


def cmd_sitebond(cfg: RunConfig) -> int:
    started = time.perf_counter()
    _out_dir(cfg)
    res = site_bond_renormalization(cfg.params, cfg.n, cfg.extent, cfg.seed,
                                    replicas=cfg.R, adjacency=cfg.adjacency)
    _emit(cfg, "sitebond", res.csv(), res.summary(), started)
    return 0


def _random_valid_params(gen: random.Random) -> ModelParams:
    while True:
        d = gen.choice([1, 2, 3])
        nu, lam, alpha, tau = (gen.uniform(0.1, 10) for _ in range(4))
        if min(alpha, tau * alpha) > d:
            return ModelParams(d, nu, lam, alpha, tau)


def cmd_validate(cfg: RunConfig) -> int:
    """Cross-check closed forms against quadrature and union-find against BFS."""
    spec = QuadratureSpec(cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions)
    gen = random.Random(cfg.seed)
    checks = []

    worst = 0.0
    for _ in range(20):
        p = _random_valid_params(gen)
        w = gen.uniform(1, 10)
        a = integral_closed_form(p, w)
        worst = max(worst, abs(a - quadrature_integral(p, w, spec)) / a)
    checks.append({"check": "closed_form_vs_quadrature", "max_rel_err": worst,
                   "tol": 1e-8, "pass": worst <= 1e-8})

    params = cfg.params
    if params.finite_degree:
        worst = max(abs(degree_pmf(params, k) - mixing_pmf_oracle(params, k, spec))
                    for k in range(51))
        checks.append({"check": "pmf_dual_route", "max_abs_err": worst, "tol": 1e-8,
                       "pass": worst <= 1e-8})

    mismatches = 0
    for trial in range(50):
        p = _random_valid_params(gen)
        dom = BoxDomain(p.d, gen.uniform(2, 6), Boundary.FREE)
        cloud = sample_cloud(p, dom, cfg.seed + trial)
        if len(cloud) > 200:
            continue
        g = build_graph(p, cloud, cfg.seed + trial)
        canon = canonical_partition(components(g).roots)
        if not np.array_equal(canon, bfs_components(g.edges, len(cloud))):
            mismatches += 1
    checks.append({"check": "union_find_vs_bfs", "mismatches": mismatches,
                   "pass": mismatches == 0})

    ok = all(c["pass"] for c in checks)
    sys.stdout.write(_dumps({"checks": checks, "pass": ok}))
    return 0 if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "analytic": cmd_analytic,
    "degree": cmd_degree,
    "theta": cmd_theta,
    "fss": cmd_fss,
    "sitebond": cmd_sitebond,
    "validate": cmd_validate,
}


DEFAULT_BOUNDARY = {"degree": "torus", "theta": "free", "fss": "free"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetrcm", description="Heterogeneous random-connection model toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH")
        for key in sorted(KEYS - {"experiment"}):
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            sp.add_argument(*flags, dest=f"opt_{key}", metavar=key.upper())
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None}
    try:
        cfg = parse_config(args.config, overrides)
        cfg.experiment = args.command
        if cfg.boundary is None:
            cfg.boundary = DEFAULT_BOUNDARY.get(args.command)
        return COMMANDS[args.command](cfg)
    except RCMError as exc:
        sys.stdout.write(_dumps(exc.to_dict()))
        return exc.exit_code
    except OSError as exc:
        sys.stdout.write(_dumps({"error": "io", "message": str(exc)}))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
