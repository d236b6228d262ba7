"""Command-line front end.

Verbs: profile, predict, solve, sweep, compare. Exit codes: 0 success,
2 config error, 3 numerical failure, 4 no blow-up detected. CSV files
are the data contract; SVG plots are a convenience. Identical configs
(same seed) produce byte-identical CSVs: floats are written with repr
and every merge is sorted.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ExperimentConfig, dump_config, load_config
from .errors import BlowupLabError, ConfigError, ConvergenceError, DivergenceError
from .geometry import compute_skeleton, omega_set, skeleton_arrival_time
from .predictor import predict_fourth_2d, predict_second_2d, predict_1d_fourth
from .profiles import (get_correction, get_profile4, second_order_profile)
from .reaction import ReactionSolution, TABLE_DELTA
from .solvers import solve as run_solver

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NO_BLOWUP = 4


def _eps_tag(eps: float) -> str:
    return f"{eps:g}".replace(".", "p")


def cmd_profile(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.order == 4:
        prof = get_profile4()
        summary = [
            f"order=4",
            f"eta0={prof.eta0!r}",
            f"v_peak={prof.v_peak!r}",
            f"omega={prof.omega!r}",
            f"tail_amplitude={prof.amplitude!r}",
            f"tail_phase={prof.phase!r}",
            f"eta_max={prof.eta_max!r}",
        ]
        name = "profile4"
    else:
        prof = second_order_profile()
        summary = [f"order=2", f"eta_max={prof.eta_max!r}",
                   "monotone=true (no interior peak)"]
        name = "profile2"
    prof.to_csv(os.path.join(args.out, f"{name}.csv"))
    corr = get_correction(args.order)
    with open(os.path.join(args.out, f"{name}_correction.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("eta,vbar1\n")
        for e, v in zip(corr.eta, corr.values):
            fh.write(f"{e!r},{v!r}\n")
    with open(os.path.join(args.out, f"{name}_summary.txt"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(summary) + "\n")
    print(f"wrote {name}.csv, {name}_correction.csv, {name}_summary.txt in {args.out}")
    return EXIT_OK


def _skeleton_resolution(cfg: ExperimentConfig) -> float:
    return float(cfg.solver_overrides.get("skeleton_resolution", 0.01))


def _measured_T(out, rs):
    """Measured blow-up times from a prior solve in the same out dir."""
    path = os.path.join(out, "sweep_summary.csv")
    if not os.path.exists(path):
        return {}
    T_of = {}
    with open(path, "r", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            eps_s, T_s, *_ = line.split(",")
            T = float(T_s)
            if np.isfinite(T) and 0.0 < T < rs.T0:
                T_of[float(eps_s)] = T
    return T_of


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write_echo(cfg, out)
    rs = ReactionSolution(cfg.nonlinearity_obj())
    T_of = _measured_T(out, rs)
    if cfg.geometry == "strip":
        return _predict_strip(cfg, rs, out, T_of)
    dom = cfg.domain()
    skel = compute_skeleton(dom, _skeleton_resolution(cfg))
    skel.to_csv(os.path.join(out, "skeleton.csv"))
    prof = get_profile4()
    rows = []
    T_fallback = rs.T0 * (1.0 - TABLE_DELTA)
    for eps in sorted(cfg.eps_values):
        tag = _eps_tag(eps)
        T_eps = T_of.get(eps, T_fallback)
        if cfg.order == 2:
            pred = predict_second_2d(dom, skeleton=skel)
        else:
            pred = predict_fourth_2d(dom, skel, rs, eps, T_eps)
            pred.metadata["T_eps_source"] = ("measured" if eps in T_of
                                             else "reaction-fallback")
            level = pred.metadata["level"]
            try:
                loops = omega_set(dom, min(level, 0.999 * _max_depth(dom, skel)))
                _write_loops(os.path.join(out, f"omega_eps{tag}.csv"), loops)
            except BlowupLabError:
                pass
        pred.to_csv(os.path.join(out, f"prediction_eps{tag}.csv"))
        rows.append((eps, pred.regime, pred.multiplicity))
        if "svg" in cfg.formats and pred.points.size:
            from .svgplot import svg_scatter
            svg_scatter(os.path.join(out, f"prediction_eps{tag}.svg"),
                        [dict(points=pred.points, label="predicted")],
                        title=f"prediction eps={eps:g}")
    with open(os.path.join(out, "predictions_summary.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("eps,regime,multiplicity\n")
        for eps, regime, mult in rows:
            fh.write(f"{eps!r},{regime},{mult}\n")
    T_S = skeleton_arrival_time(skel, rs, min(cfg.eps_values), get_profile4().eta0)
    print(f"skeleton: {len(skel.samples)} samples, s_min={skel.s_min:g}, "
          f"T_S(eps={min(cfg.eps_values):g})={T_S:g}")
    return EXIT_OK


def _max_depth(dom, skel) -> float:
    return float(max(s.s_value for s in skel.samples))


def _predict_strip(cfg, rs, out, T_of=None) -> int:
    rows = []
    T_of = T_of or {}
    T_fallback = rs.T0 * (1.0 - TABLE_DELTA)
    for eps in sorted(cfg.eps_values):
        pred = predict_1d_fourth(rs, eps, T_of.get(eps, T_fallback))
        pred.metadata["T_eps_source"] = ("measured" if eps in T_of
                                         else "reaction-fallback")
        pred.to_csv(os.path.join(out, f"prediction_eps{_eps_tag(eps)}.csv"))
        rows.append((eps, pred.regime, pred.multiplicity))
    with open(os.path.join(out, "predictions_summary.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("eps,regime,multiplicity\n")
        for eps, regime, mult in rows:
            fh.write(f"{eps!r},{regime},{mult}\n")
    return EXIT_OK


def _write_loops(path, loops):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,loop\n")
        for k, loop in enumerate(loops):
            for p in loop:
                fh.write(f"{float(p[0])!r},{float(p[1])!r},{k}\n")


def _write_echo(cfg, out):
    with open(os.path.join(out, "config_echo.yaml"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))


def _solve_one(config_path, eps, out, seed):
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    scfg = cfg.solver_config(eps)
    report = run_solver(scfg)
    _write_report(report, cfg, eps, out)
    detected = report.blowup_detected or report.stop_reason == "t-end"
    return (eps, report.T_eps, report.multiplicity, report.stop_reason,
            report.sup_stop, detected)


def _write_report(report, cfg, eps, out):
    tag = _eps_tag(eps)
    with open(os.path.join(out, f"singularities_eps{tag}.csv"), "w",
              encoding="utf-8") as fh:
        dim = len(report.grid)
        fh.write(",".join(["x", "y", "z"][:dim]) + ",value\n")
        for coords, val in report.singularities:
            fh.write(",".join(repr(float(c)) for c in coords) + f",{val!r}\n")
    with open(os.path.join(out, f"trajectory_eps{tag}.csv"), "w",
              encoding="utf-8") as fh:
        dim = len(report.grid)
        fh.write("t," + ",".join(["x", "y", "z"][:dim]) + "\n")
        for t, loc in report.peak_trajectory:
            fh.write(f"{t!r}," + ",".join(repr(float(c)) for c in loc) + "\n")
    with open(os.path.join(out, f"diagnostics_eps{tag}.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("t,sup,dt\n")
        dts = [""] + [repr(float(d)) for d in report.diagnostics["dt_history"]]
        for (t, s), d in zip(report.diagnostics["sup_history"], dts):
            fh.write(f"{t!r},{s!r},{d}\n")
    with open(os.path.join(out, f"report_eps{tag}.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"T_eps={report.T_eps!r}\n"
                 f"t_stop={report.t_stop!r}\n"
                 f"sup_stop={report.sup_stop!r}\n"
                 f"stop_reason={report.stop_reason}\n"
                 f"multiplicity={report.multiplicity}\n"
                 f"steps={report.diagnostics['steps']}\n")
        fh.write("--- config ---\n")
        fh.write(dump_config(cfg))
    if "csv" in cfg.formats:
        _write_field(report, os.path.join(out, f"field_eps{tag}.csv"))
    if "svg" in cfg.formats and len(report.grid) == 2:
        from .svgplot import svg_scatter
        pts = report.singularity_points()
        if pts.size:
            svg_scatter(os.path.join(out, f"singularities_eps{tag}.svg"),
                        [dict(points=pts, marker="x", color="#c23",
                              label="computed")],
                        title=f"singularities eps={eps:g}")


def _write_field(report, path):
    grid = report.grid
    field = report.final_field
    with open(path, "w", encoding="utf-8") as fh:
        if len(grid) == 1:
            fh.write("x,u\n")
            for x, u in zip(grid[0], field):
                fh.write(f"{x!r},{u!r}\n")
        elif len(grid) == 2:
            fh.write("x,y,u\n")
            for i, x in enumerate(grid[0]):
                for j, y in enumerate(grid[1]):
                    fh.write(f"{x!r},{y!r},{field[i, j]!r}\n")
        else:  # 3D: too large to dump fully; store the max-z slice
            k = int(np.argmax(field.max(axis=(0, 1))))
            fh.write(f"# z-slice k={k} z={grid[2][k]!r}\nx,y,u\n")
            for i, x in enumerate(grid[0]):
                for j, y in enumerate(grid[1]):
                    fh.write(f"{x!r},{y!r},{field[i, j, k]!r}\n")


def cmd_solve(args, eps_values=None) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write_echo(cfg, out)
    eps_list = sorted(eps_values if eps_values is not None else cfg.eps_values)
    results = []
    try:
        if args.threads > 1 and len(eps_list) > 1:
            with ProcessPoolExecutor(max_workers=args.threads) as pool:
                futures = [pool.submit(_solve_one, args.config, e, out, args.seed)
                           for e in eps_list]
                results = [f.result() for f in futures]
        else:
            for e in eps_list:
                results.append(_solve_one(args.config, e, out, args.seed))
    except (ConvergenceError, DivergenceError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    results.sort(key=lambda r: r[0])
    with open(os.path.join(out, "sweep_summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("eps,T_eps,multiplicity,stop_reason,sup_stop\n")
        for eps, T, mult, reason, sup, _ in results:
            fh.write(f"{eps!r},{T!r},{mult},{reason},{sup!r}\n")
    for eps, T, mult, reason, _, _ in results:
        print(f"eps={eps:g}: T_eps={T:.6g} multiplicity={mult} [{reason}]")
    return EXIT_OK if all(r[5] for r in results) else EXIT_NO_BLOWUP


def cmd_sweep(args) -> int:
    return cmd_solve(args)


def _pad2(coords):
    """Pad 1D points with a zero second coordinate for the fixed CSV layout."""
    vals = list(float(c) for c in coords)
    while len(vals) < 2:
        vals.append(0.0)
    return vals[:2]


def _read_points_csv(path):
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            vals = line.split(",")
            row = dict(zip(header, vals))
            if "selected" in row and row["selected"] != "1":
                continue
            coords = [float(row[c]) for c in ("x", "y", "z") if c in row]
            pts.append(coords)
    return np.array(pts) if pts else np.zeros((0, 2))


def cmd_compare(args) -> int:
    from scipy.optimize import linear_sum_assignment
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    echo_path = os.path.join(out, "config_echo.yaml")
    if not os.path.exists(echo_path):
        print("no prior outputs to compare against (missing config_echo.yaml)",
              file=sys.stderr)
        return EXIT_CONFIG
    with open(echo_path, "r", encoding="utf-8") as fh:
        if fh.read() != dump_config(cfg):
            print("config mismatch: outputs in --out were produced by a "
                  "different configuration", file=sys.stderr)
            return EXIT_CONFIG
    rows = []
    for eps in sorted(cfg.eps_values):
        tag = _eps_tag(eps)
        ppath = os.path.join(out, f"prediction_eps{tag}.csv")
        spath = os.path.join(out, f"singularities_eps{tag}.csv")
        if not (os.path.exists(ppath) and os.path.exists(spath)):
            print(f"missing prediction/solve outputs for eps={eps:g}",
                  file=sys.stderr)
            return EXIT_CONFIG
        pred = _read_points_csv(ppath)
        comp = _read_points_csv(spath)
        if len(pred) and len(comp):
            d = min(pred.shape[1], comp.shape[1])
            D = np.linalg.norm(pred[:, None, :d] - comp[None, :, :d], axis=2)
            ri, ci = linear_sum_assignment(D)
            for a, b in zip(ri, ci):
                pp = _pad2(pred[a][:d])
                cc = _pad2(comp[b][:d])
                rows.append((eps, *pp, *cc, D[a, b],
                             len(pred), len(comp), int(len(pred) == len(comp))))
        else:
            rows.append((eps, *([np.nan] * 5), len(pred), len(comp),
                         int(len(pred) == len(comp))))
    with open(os.path.join(out, "comparison.csv"), "w", encoding="utf-8") as fh:
        fh.write("eps,pred_x,pred_y,comp_x,comp_y,distance,"
                 "pred_multiplicity,comp_multiplicity,multiplicity_agree\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating))
                              else str(v) for v in r) + "\n")
    if "svg" in cfg.formats:
        from .svgplot import svg_scatter
        for eps in sorted(cfg.eps_values):
            tag = _eps_tag(eps)
            pred = _read_points_csv(os.path.join(out, f"prediction_eps{tag}.csv"))
            comp = _read_points_csv(os.path.join(out, f"singularities_eps{tag}.csv"))
            if pred.shape[1] >= 2 and comp.shape[1] >= 2:
                svg_scatter(os.path.join(out, f"comparison_eps{tag}.svg"),
                            [dict(points=pred[:, :2], label="asymptotic"),
                             dict(points=comp[:, :2], marker="x", color="#c23",
                                  label="numerical")],
                            title=f"predicted vs computed, eps={eps:g}")
    agree = all(r[-1] == 1 for r in rows)
    print(f"comparison.csv written ({len(rows)} matched rows); "
          f"multiplicity agreement: {agree}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="blowup-lab",
        description="Blow-up simulation and prediction laboratory for "
                    "second- and fourth-order semilinear parabolic problems.")
    p.add_argument("--config", help="experiment YAML", default=None)
    p.add_argument("--out", help="output directory (overrides config)", default=None)
    p.add_argument("--seed", type=int, default=None, help="noise seed override")
    p.add_argument("--threads", type=int, default=1, help="sweep worker count")
    sub = p.add_subparsers(dest="verb", required=True)
    sp = sub.add_parser("profile", help="solve and export a layer profile")
    sp.add_argument("--order", type=int, choices=(2, 4), default=4)
    for verb in ("predict", "solve", "sweep", "compare"):
        sub.add_parser(verb)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is None and args.verb == "profile":
        args.out = "out"
    try:
        if args.verb == "profile":
            return cmd_profile(args)
        if args.config is None:
            print("--config is required for this verb", file=sys.stderr)
            return EXIT_CONFIG
        if args.verb == "predict":
            return cmd_predict(args)
        if args.verb == "solve":
            return cmd_solve(args)
        if args.verb == "sweep":
            return cmd_sweep(args)
        if args.verb == "compare":
            return cmd_compare(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, DivergenceError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
