"""Command line entry point: ``qlcs <subcommand> --config FILE [options]``.

Subcommands
    probe    probe suite and rate maps (fig1_ratemap / probe_suite configs)
    greedy   one greedy phase-retrieval run (first k and n of the grid)
    iht      one hard-thresholding run (first k and norm of the grid)
    ist      one soft-thresholding run (first k and norm of the grid)
    grid     full recovery-rate grid (fig4_phase_greedy / fig6_threshold_grid)
    astero   asteroseismology demo

Exit codes: 0 success, 1 configuration error, 2 divergence in a single run.
Outputs go to ``--out``, else ``$QLCS_OUT``, else ``./qlcs_out``.
"""
import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_config, load_config
from .report import (write_astero, write_fig1, write_fig4, write_fig6, write_probes,
                     write_single)
from .runners import (fig6_instance, hard_solve, norm_axis, run_astero, run_fig1, run_fig4,
                      run_fig4_trial, run_fig6, run_probe_suite, soft_solve)
from ..rng import derive_seed

OUT_ENV = "QLCS_OUT"
SUBCOMMANDS = ("probe", "greedy", "iht", "ist", "grid", "astero")

# which experiments each subcommand accepts
_ALLOWED = {
    "probe": ("fig1_ratemap", "probe_suite"),
    "greedy": ("fig4_phase_greedy",),
    "iht": ("fig6_threshold_grid",),
    "ist": ("fig6_threshold_grid",),
    "grid": ("fig4_phase_greedy", "fig6_threshold_grid"),
    "astero": ("astero_demo",),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="qlcs", description="Quasi-linear compressed sensing experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./qlcs_out)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, value parsed as YAML; repeatable")
    return ap


def output_dir(arg):
    return Path(arg or os.environ.get(OUT_ENV) or "qlcs_out")


def _single_cell(cfg):
    return int(cfg.grid.k[0]), derive_seed(derive_seed(cfg.seed, 0, 0), 0)


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = load_config(args.config, overrides)
        if cfg.experiment not in _ALLOWED[args.command]:
            raise ConfigError(f"{args.config}: experiment {cfg.experiment!r} cannot run under "
                              f"'{args.command}' (expected {' or '.join(_ALLOWED[args.command])})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out = output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    t0 = time.perf_counter()
    status = 0
    cmd = args.command
    if cmd == "grid" and cfg.experiment == "fig4_phase_greedy":
        paths = write_fig4(out, run_fig4(cfg))
    elif cmd == "grid":
        paths = write_fig6(out, *run_fig6(cfg))
    elif cmd == "probe":
        if cfg.experiment == "fig1_ratemap":
            paths = write_fig1(out, run_fig1(cfg))
        else:
            probes, maps = run_probe_suite(cfg)
            paths = write_probes(out, probes) + write_fig1(out, maps)
    elif cmd == "astero":
        paths = write_astero(out, cfg, run_astero(cfg))
    elif cmd == "greedy":
        k, ts = _single_cell(cfg)
        n = (cfg.grid.n or [cfg.ensemble.n])[0]
        ok, info = run_fig4_trial(cfg, k, n, ts)
        paths = write_single(out, "greedy", {"k": k, "n": n, "trial_seed": ts, "success": ok, **info})
    else:
        k, ts = _single_cell(cfg)
        norm = norm_axis(cfg)[0]
        op, xhat, b = fig6_instance(cfg, k, norm, ts)
        rep = soft_solve(cfg, op, b)[-1] if cmd == "ist" else hard_solve(cfg, op, b, k)
        err = float(np.linalg.norm(rep.final - xhat))
        paths = write_single(out, cmd, {"k": k, "norm": norm, "trial_seed": ts, "error": err,
                                        "iterations": rep.iterations, "converged": rep.converged,
                                        "diverged": rep.diverged})
        if rep.diverged:
            print(f"{cmd}: iteration diverged", file=sys.stderr)
            status = 2
    for p in paths:
        print(p)
    print(f"done in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
