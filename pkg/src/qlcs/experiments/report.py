"""Turn runner results into CSV/SVG files.

Golden-checked CSVs contain only deterministic quantities; wall-clock times go
to a separate ``timing.json``.

CSV schemas (all files begin with ``schema_version``):

``fig4.csv``, ``soft.csv``, ``hard.csv``
    k, axis_value (n or signal norm), trials, successes, errors, rate, cell_seed
``fig1_k{K}.csv``
    threshold, angle1, angle2 (empty for k=2), antipode_angle, rate, draws
    (angles in degrees; angle1 is measured from xhat, angle2 is the azimuth)
``probes.csv``
    label, condition, samples, skipped, alpha_hat, beta_hat, threshold,
    success_rate, extra (JSON)
``astero_summary.csv``
    case, seed, steps, target_support, recovered_support, success, residual
``astero_steps.csv``
    case, seed, step, index, coefficient
``astero_contour.csv``
    case, seed, phi, u_true, u_reconstructed
"""
import json

import numpy as np

from .io import fmt, write_csv, write_heatmap, write_json
from .runners import RateGrid


def _grid_files(out, grid, stem, title):
    paths = [write_csv(out / f"{stem}.csv", RateGrid.columns, grid.rows())]
    labels = [fmt(round(v, 4)) if isinstance(v, float) else str(v) for v in grid.axis]
    paths.append(write_heatmap(out / f"{stem}.svg", grid.rates.T, labels, [str(k) for k in grid.k],
                               title=title, row_name=grid.axis_name, col_name="k"))
    return paths


def _timing(out, name, grid):
    return write_json(out / f"timing_{name}.json", {
        "total_seconds": float(grid.wall_time.sum()),
        "cell_seconds": grid.wall_time.tolist()})


def write_fig4(out, grid):
    paths = _grid_files(out, grid, "fig4", "greedy phase retrieval: success rate")
    paths.append(_timing(out, "fig4", grid))
    return paths


def write_fig6(out, soft, hard):
    paths = _grid_files(out, soft, "soft", "soft thresholding: success rate")
    paths += _grid_files(out, hard, "hard", "hard thresholding: success rate")
    paths.append(write_json(out / "soft_diagnostics.json", {
        "max_fixed_point_residual_over_stop_tol": soft.diagnostics.get("max_fp_ratio"),
        "converged_runs": soft.diagnostics.get("converged_runs")}))
    paths.append(write_json(out / "timing_fig6.json", {
        "soft_seconds": float(soft.wall_time.sum()), "hard_seconds": float(hard.wall_time.sum())}))
    return paths


def ratemap_rows(rm):
    k = rm.metadata["k"]
    for t, th in enumerate(rm.thresholds):
        if k == 2:
            for i, a in enumerate(rm.axes[0]):
                yield th, a, None, rm.antipode_angle[i], rm.rates[t, i], rm.metadata["draws"]
        else:
            polar, azim = rm.axes
            for i, a in enumerate(polar):
                for j, z in enumerate(azim):
                    yield th, a, z, rm.antipode_angle[i, j], rm.rates[t, i, j], rm.metadata["draws"]


RATEMAP_COLUMNS = ("threshold", "angle1", "angle2", "antipode_angle", "rate", "draws")


def write_fig1(out, maps):
    paths = []
    for k, rm in sorted(maps.items()):
        paths.append(write_csv(out / f"fig1_k{k}.csv", RATEMAP_COLUMNS, ratemap_rows(rm)))
        for t, th in enumerate(rm.thresholds):
            grid = rm.rates[t]
            if k == 2:
                # a single ring of angles: draw it as one row
                grid = grid[None, :]
                rows, cols = ["rate"], [str(int(round(a))) if i % 6 == 0 else "" for i, a in enumerate(rm.axes[0])]
            else:
                rows = [str(int(round(a))) for a in rm.axes[0]]
                cols = [str(int(round(a))) if i % 4 == 0 else "" for i, a in enumerate(rm.axes[1])]
            paths.append(write_heatmap(out / f"fig1_k{k}_t{t}.svg", grid, rows, cols, cell=10,
                                       title=f"lower-bound success, k={k}, threshold {fmt(th)}",
                                       row_name="polar angle" if k == 3 else "",
                                       col_name="angle from xhat (deg)" if k == 2 else "azimuth"))
        write_json(out / f"fig1_k{k}_meta.json", {**rm.metadata, "thresholds": list(rm.thresholds),
                                                  "xhat_support": np.flatnonzero(rm.xhat).tolist()})
    return paths


PROBE_COLUMNS = ("label", "condition", "samples", "skipped", "alpha_hat", "beta_hat", "threshold",
                 "success_rate", "extra")


def write_probes(out, probes):
    rows = []
    for label, res in probes:
        if isinstance(res, dict):
            rows.append((label, "", "", "", "", "", "", "", json.dumps(res, sort_keys=True, default=float)))
        else:
            extra = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in res.extra.items()}
            rows.append((label, res.condition, res.samples, res.skipped, res.alpha_hat, res.beta_hat,
                         res.threshold, res.success_rate, json.dumps(extra, sort_keys=True, default=float)))
    return [write_csv(out / "probes.csv", PROBE_COLUMNS, rows)]


def write_astero(out, cfg, runs):
    op = cfg.ensemble.build()
    phi = np.linspace(-1.0, 1.0, cfg.astero.phi_points)
    summary, steps, contour = [], [], []
    for r in runs:
        tr = r.trace
        summary.append((r.case, r.seed, len(tr.supports), " ".join(map(str, r.target_support)),
                        " ".join(map(str, tr.supports[-1])), r.success, tr.residual_lp[-1]))
        for j, x in enumerate(tr.iterates, start=1):
            for i in np.flatnonzero(x):
                steps.append((r.case, r.seed, j, int(i), x[i]))
        ut, ur = op.contour(r.truth, phi), op.contour(tr.final, phi)
        contour.extend((r.case, r.seed, p, a, c) for p, a, c in zip(phi, ut, ur))
    return [
        write_csv(out / "astero_summary.csv",
                  ("case", "seed", "steps", "target_support", "recovered_support", "success", "residual"),
                  summary),
        write_csv(out / "astero_steps.csv", ("case", "seed", "step", "index", "coefficient"), steps),
        write_csv(out / "astero_contour.csv", ("case", "seed", "phi", "u_true", "u_reconstructed"), contour),
        write_json(out / "timing_astero.json", {"seconds": [r.seconds for r in runs]}),
    ]


def write_single(out, name, record):
    return [write_json(out / f"{name}_run.json", record)]
