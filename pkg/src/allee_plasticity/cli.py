"""Command-line front end.

    allee-plasticity <subcommand> [--config FILE] [--set key=value ...] --out DIR [--plots]

Every CSV gets a ``.meta`` sidecar echoing the full resolved configuration;
passing that sidecar back as ``--config`` reproduces the CSV exactly.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import assoc, bifurcation, config, dynamics, memory
from .errors import DomainError, NoFixedPointError, ShapeMismatch, StepFailure

log = logging.getLogger("allee_plasticity")

GAIN_KEYS = {
    "gain": (str, "sigmoid"),
    "gain_a": (float, 1.0),
    "gain_b": (float, 1.0),
    "gain_c": (float, 1.0),
    "gain_d": (float, 1.0),
}


def _model(A, K, u, m):
    return {"A": (float, A), "K": (float, K), "u": (float, u), "m": (float, m),
            "tau_v": (float, 1.0), "tau_w": (float, 1.0)}


SCHEMAS = {
    "simulate": {
        **_model(0.4, 2.0, 1.0, 0.5), **GAIN_KEYS,
        "x0": (float, 0.6), "y0": (float, 0.8),
        "t_end": (float, 20.0), "dt": (float, 0.01), "record_every": (int, 1),
    },
    "fixed-points": {**_model(1.7, 0.4, 2.5, 0.01), **GAIN_KEYS},
    "hopf-scan": {
        **_model(1.0, 2.0, 2.0, 5.0), **GAIN_KEYS,
        "x_min": (float, 0.01), "x_max": (float, 1.0),
        "y_min": (float, 0.01), "y_max": (float, 3.0),
        "nx": (int, 400), "ny": (int, 400),
    },
    "sweep": {
        **_model(0.4, 0.4, 1.5, 2.0), **GAIN_KEYS,
        "vary": (str, "u"), "lo": (float, 1.0), "hi": (float, 2.0), "n": (int, 41),
    },
    "overlap": {
        **_model(0.4, 2.0, 1.0, 0.5), **GAIN_KEYS,
        "alpha": (float, 1.0),  # recorded only; the model has no such parameter
        "initials": ("pairs", list(memory.FIG5_INITIALS)),
        "t_end": (float, 20.0), "dt": (float, 0.01), "record_every": (int, 100),
        "extinct_is_zero": (bool, True),
    },
    "sensitivity": {
        **_model(0.4, 1.0, 0.5, 1.0), **GAIN_KEYS,
        "vary": (str, "A"), "lo": (float, 0.1), "hi": (float, 4.6), "n": (int, 10),
        "x0": (float, 0.5), "y0": (float, 0.5),
        "t_end": (float, 20.0), "dt": (float, 0.01), "record_every": (int, 100),
        "use_companions": (bool, True),
    },
    "retrieve": {
        "seed": (int, 0), "n_seeds": (int, 20),
        "L": (int, 5), "N_u": (int, 50), "N_v": (int, 50), "P": (int, 150),
        "sigma": (float, 0.3), "rule": (str, "allee"),
        "A": (float, 2.0), "K": (float, 1.0), "eta": (float, 0.01),
        "epochs": (int, 1), "max_iters": (int, 50), "auto": (bool, False),
    },
    "noise-sweep": {
        "seed": (int, 0), "n_seeds": (int, 20),
        "L": (int, 5), "N_u": (int, 25), "N_v": (int, 25), "P": (int, 10),
        "sigmas": ("floats", list(assoc.COMPARISON_SIGMAS)),
        "rules": ("strs", ["hebbian", "oja", "allee", *assoc.STDP_KINDS]),
        "A": (float, 1.0), "K": (float, 5.0), "eta": (float, 0.01),
        "stdp_eta": (float, 0.01),
        "B_plus": (float, 0.01), "B_minus": (float, 0.012), "B": (float, 0.01),
        "tau_plus": (float, 20.0), "tau_minus": (float, 20.0),
        "gamma": (float, 0.7), "delta_t": (float, 0.1),
        "kappa": (float, 0.1), "lambda_trace": (float, 0.05),
        "tau1": (float, 0.6), "tau2": (float, 0.6),
        "epochs": (int, 1), "max_iters": (int, 50), "auto": (bool, False),
    },
}


# --------------------------------------------------------------------------
# output helpers


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_table(out_dir: Path, name: str, header, rows, cfg: dict, command: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(c) for c in row])
    meta = out_dir / f"{name}.meta"
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [f"# command = {command}",
             f"# tool = allee-plasticity {__version__}",
             f"# seed = {cfg.get('seed', 'none')}",
             f"# created = {stamp}"]
    lines += [f"{k} = {config.format_value(v)}" for k, v in cfg.items()]
    meta.write_text("\n".join(lines) + "\n")
    return path


def _plot_lines(path: Path, series, xlabel, ylabel, title):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path.name)
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, xs, ys in series:
        ax.plot(xs, ys, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) <= 12:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_region(path: Path, scan: bifurcation.RegionScan, title):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path.name)
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    X, Y = np.meshgrid(scan.xs, scan.ys, indexing="ij")
    ax.contourf(X, Y, scan.det > 0, levels=[0.5, 1.5], colors=["#b7e4b0"])
    ax.contour(X, Y, scan.det, levels=[0], colors="blue")
    ax.contour(X, Y, scan.tr, levels=[0], colors="red")
    cx, cy = scan.cell_centres()
    ax.scatter(cx[scan.hopf_cells], cy[scan.hopf_cells], s=2, c="k")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --------------------------------------------------------------------------
# commands


def _params(cfg) -> dynamics.ModelParams:
    return dynamics.ModelParams(cfg["A"], cfg["K"], cfg["u"], cfg["m"],
                                cfg["tau_v"], cfg["tau_w"])


def _gain(cfg) -> dynamics.GainSpec:
    return dynamics.GainSpec(cfg["gain"], cfg["gain_a"], cfg["gain_b"],
                             cfg["gain_c"], cfg["gain_d"])


def _check(cond, msg):
    if not cond:
        raise config.ConfigError(msg)


def cmd_simulate(cfg, out, plots):
    _check(cfg["y0"] > 0, "y0 must be > 0")
    _check(cfg["dt"] > 0 and cfg["t_end"] >= 0, "need dt > 0 and t_end >= 0")
    _check(cfg["record_every"] >= 1, "record_every must be >= 1")
    p, g = _params(cfg), _gain(cfg)
    traj = dynamics.integrate(p, g, dynamics.NeuronState(cfg["x0"], cfg["y0"]),
                              cfg["t_end"], cfg["dt"])
    idx = range(0, len(traj), cfg["record_every"])
    ext = traj.extinct_at
    rows = [(traj.times[i], traj.x[i], traj.y[i],
             ext is not None and traj.times[i] >= ext) for i in idx]
    write_table(out, "simulate", ["t", "x", "y", "extinct"], rows, cfg, "simulate")
    if plots:
        _plot_lines(out / "simulate.svg",
                    [("x", traj.times, traj.x), ("y", traj.times, traj.y)],
                    "t", "state", "trajectory")
    f = traj.final
    print(f"final state x={f.x:.6g} y={f.y:.6g}"
          + (f" (extinct at t={ext:g})" if ext is not None else ""))


def cmd_fixed_points(cfg, out, plots):
    p, g = _params(cfg), _gain(cfg)
    reports = dynamics.solve_fixed_points(p, g)
    if p.A > 0:
        try:
            case = dynamics.theorem1_predicate(p, g).case
        except DomainError:
            case = "undefined"
    else:
        case = "undefined"
    rows = []
    for r in reports:
        e1, e2 = r.eigenvalues
        rows.append((r.branch, r.point.x, r.point.y, e1.real, e1.imag, e2.real, e2.imag,
                     r.stability, case))
    write_table(out, "fixed_points",
                ["branch", "x", "y", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
                 "stability", "theorem1_case"], rows, cfg, "fixed-points")
    for r in reports:
        print(f"{r.branch:12s} x={r.point.x:.6f} y={r.point.y:.6f} {r.stability}")


def cmd_hopf_scan(cfg, out, plots):
    _check(cfg["y_min"] > 0, "y_min must be > 0")
    _check(cfg["x_max"] > cfg["x_min"] and cfg["y_max"] > cfg["y_min"],
           "ranges must have positive length")
    _check(cfg["nx"] >= 2 and cfg["ny"] >= 2, "nx and ny must be >= 2")
    p, g = _params(cfg), _gain(cfg)
    scan = bifurcation.scan_region(p, g, (cfg["x_min"], cfg["x_max"]),
                                   (cfg["y_min"], cfg["y_max"]), (cfg["nx"], cfg["ny"]))
    cx, cy = scan.cell_centres()
    rows = []
    for kind, mask in (("hopf", scan.hopf_cells), ("takens_bogdanov", scan.tb_cells)):
        for i, j in np.argwhere(mask):
            rows.append((kind, int(i), int(j), cx[i, j], cy[i, j]))
    write_table(out, "hopf_cells", ["kind", "i", "j", "x", "y"], rows, cfg, "hopf-scan")

    try:
        verdicts = bifurcation.hopf_verdict(p, g)
    except NoFixedPointError:
        verdicts = []
    vrows = [(v.branch, v.point.x, v.point.y, v.lam, v.beta,
              math.nan if v.p2 is None else v.p2, v.hopf, v.case, v.trace, v.det)
             for v in verdicts]
    write_table(out, "hopf_verdict",
                ["branch", "x", "y", "lambda", "beta", "p2", "hopf", "case", "trace", "det"],
                vrows, cfg, "hopf-scan")

    cen = scan.hopf_centroid() or (math.nan, math.nan)
    b = scan.hopf_bounds() or (math.nan,) * 4
    n_h, n_tb = int(scan.hopf_cells.sum()), int(scan.tb_cells.sum())
    write_table(out, "hopf_summary",
                ["hopf_cells", "tb_cells", "centroid_x", "centroid_y",
                 "x_min", "x_max", "y_min", "y_max", "any_verdict"],
                [(n_h, n_tb, *cen, *b, any(v.hopf for v in verdicts))], cfg, "hopf-scan")
    if plots:
        _plot_region(out / "hopf_scan.svg", scan, f"A={p.A:g}")
    print(f"hopf cells: {n_h}, Takens-Bogdanov candidates: {n_tb}")
    if n_h:
        print(f"hopf region x in [{b[0]:.3f}, {b[1]:.3f}], y in [{b[2]:.3f}, {b[3]:.3f}]")


def cmd_sweep(cfg, out, plots):
    _check(cfg["vary"] in bifurcation.SWEEPABLE, f"vary must be one of {bifurcation.SWEEPABLE}")
    _check(cfg["n"] >= 2, "n must be >= 2")
    p, g = _params(cfg), _gain(cfg)
    values = np.linspace(cfg["lo"], cfg["hi"], cfg["n"])
    events = bifurcation.parameter_sweep(p, g, cfg["vary"], values)
    rows = [(e.parameter, e.value, e.kind, len(e.before), len(e.after)) for e in events]
    write_table(out, "sweep", ["parameter", "value", "kind", "n_before", "n_after"],
                rows, cfg, "sweep")
    for e in events:
        print(f"{e.kind} at {e.parameter}={e.value:.6f}")
    if not events:
        print("no events")


def cmd_overlap(cfg, out, plots):
    _check(cfg["record_every"] >= 1, "record_every must be >= 1")
    _check(len(cfg["initials"]) > 0, "initials must be non-empty")
    p, g = _params(cfg), _gain(cfg)
    series = memory.overlap_experiment(p, g, cfg["initials"], cfg["t_end"], cfg["dt"],
                                       extinct_is_zero=cfg["extinct_is_zero"])
    rows = []
    for k, s in enumerate(series):
        tr = s.trajectory
        for i in range(0, len(s.times), cfg["record_every"]):
            rows.append((k, s.initial.x, s.initial.y, s.times[i], tr.x[i], tr.y[i],
                         s.overlap[i], s.raw_overlap[i]))
    write_table(out, "overlap",
                ["initial", "x0", "y0", "t", "x", "y", "overlap", "raw_overlap"],
                rows, cfg, "overlap")
    if plots:
        _plot_lines(out / "overlap.svg",
                    [(f"({s.initial.x:g}, {s.initial.y:g})", s.times, s.overlap)
                     for s in series], "t", "overlap", "pattern overlap")
    for s in series:
        print(f"({s.initial.x:g}, {s.initial.y:g}) final overlap {s.overlap[-1]:.4f}")


def cmd_sensitivity(cfg, out, plots):
    _check(cfg["record_every"] >= 1, "record_every must be >= 1")
    p, g = _params(cfg), _gain(cfg)
    res = memory.sensitivity_sweep(p, g, cfg["vary"], cfg["lo"], cfg["hi"], cfg["n"],
                                   dynamics.NeuronState(cfg["x0"], cfg["y0"]),
                                   cfg["t_end"], cfg["dt"], cfg["use_companions"])
    rows = []
    for val, tr in zip(res.values, res.trajectories):
        for i in range(0, len(tr), cfg["record_every"]):
            rows.append((res.parameter, val, tr.times[i], tr.x[i], tr.y[i]))
    write_table(out, "sensitivity", ["parameter", "value", "t", "x", "y"], rows, cfg,
                "sensitivity")
    if plots:
        for col, name in ((3, "x"), (4, "y")):
            _plot_lines(out / f"sensitivity_{name}.svg",
                        [(f"{res.parameter}={v:.2f}", tr.times, tr.states[:, col - 3])
                         for v, tr in zip(res.values, res.trajectories)],
                        "t", name, f"sensitivity to {res.parameter}")
    print(f"{res.extinct_count} of {len(res.values)} trajectories went extinct")


def _seeds(cfg):
    _check(cfg["n_seeds"] >= 1, "n_seeds must be >= 1")
    return list(range(cfg["seed"], cfg["seed"] + cfg["n_seeds"]))


def cmd_retrieve(cfg, out, plots):
    _check(0 <= cfg["sigma"] <= 1, "sigma must lie in [0, 1]")
    shape = assoc.NetworkShape(cfg["L"], cfg["N_u"], cfg["N_v"])
    kind = cfg["rule"]
    _check(kind in ("hebbian", "oja", "allee"), "rule must be hebbian, oja or allee")
    if kind == "hebbian":
        rule = assoc.LearningRule("hebbian", eta=cfg["eta"])
    elif kind == "oja":
        rule = assoc.LearningRule("oja", K=cfg["K"], eta=cfg["eta"])
    else:
        rule = assoc.LearningRule("allee", A=cfg["A"], K=cfg["K"], eta=cfg["eta"])
    table = assoc.noise_sweep(shape, {kind: rule}, cfg["P"], [cfg["sigma"]], _seeds(cfg),
                              cfg["epochs"], cfg["max_iters"], cfg["auto"])
    acc = table.accuracy[0, 0]  # (seed, pattern)
    rows = [(seed, mu, acc[s, mu]) for s, seed in enumerate(table.seeds)
            for mu in range(acc.shape[1])]
    write_table(out, "retrieve", ["seed", "pattern", "accuracy"], rows, cfg, "retrieve")
    write_table(out, "retrieve_summary", ["rule", "sigma", "mean_accuracy", "sd", "n_seeds"],
                [(kind, cfg["sigma"], acc.mean(), acc.std(), len(table.seeds))],
                cfg, "retrieve")
    print(f"mean accuracy {acc.mean():.4f} (sd {acc.std():.4f}) over "
          f"{len(table.seeds)} seeds x {acc.shape[1]} patterns")


def _sweep_rules(cfg) -> dict:
    stdp = dict(B_plus=cfg["B_plus"], B_minus=cfg["B_minus"], B=cfg["B"],
                tau_plus=cfg["tau_plus"], tau_minus=cfg["tau_minus"],
                gamma=cfg["gamma"], delta_t=cfg["delta_t"], eta=cfg["stdp_eta"])
    rules = {}
    for name in cfg["rules"]:
        if name == "hebbian":
            rules[name] = assoc.LearningRule("hebbian", eta=cfg["eta"])
        elif name == "oja":
            rules[name] = assoc.LearningRule("oja", K=cfg["K"], eta=cfg["eta"])
        elif name == "allee":
            rules[name] = assoc.LearningRule("allee", A=cfg["A"], K=cfg["K"], eta=cfg["eta"])
        elif name == "allee_temporal":
            rules[name] = assoc.LearningRule(
                "allee_temporal", A=cfg["A"], K=cfg["K"], eta=cfg["eta"],
                delta_t=cfg["delta_t"], kappa=cfg["kappa"],
                lambda_trace=cfg["lambda_trace"], tau1=cfg["tau1"], tau2=cfg["tau2"])
        elif name in assoc.STDP_KINDS:
            rules[name] = assoc.LearningRule(name, **stdp)
        else:
            raise config.ConfigError(f"unknown rule {name!r}")
    return rules


def cmd_noise_sweep(cfg, out, plots):
    _check(len(cfg["sigmas"]) > 0, "sigmas must be non-empty")
    _check(len(cfg["rules"]) > 0, "rules must be non-empty")
    _check(all(0 <= s <= 1 for s in cfg["sigmas"]), "sigmas must lie in [0, 1]")
    shape = assoc.NetworkShape(cfg["L"], cfg["N_u"], cfg["N_v"])
    table = assoc.noise_sweep(shape, _sweep_rules(cfg), cfg["P"], cfg["sigmas"],
                              _seeds(cfg), cfg["epochs"], cfg["max_iters"], cfg["auto"])
    labels = [f"{s:.2f}" for s in table.sigmas]
    header = (["rule"] + [f"mean_{l}" for l in labels] + [f"sd_{l}" for l in labels]
              + ["overall_mean"])
    rows = [(r, *table.mean[i], *table.sd[i], table.mean[i].mean())
            for i, r in enumerate(table.rules)]
    write_table(out, "noise_sweep", header, rows, cfg, "noise-sweep")
    if plots:
        _plot_lines(out / "noise_sweep.svg",
                    [(r, table.sigmas, table.mean[i]) for i, r in enumerate(table.rules)],
                    "noise level", "mean accuracy", "retrieval accuracy vs noise")
    for i, r in enumerate(table.rules):
        print(f"{r:16s} mean accuracy {table.mean[i].mean():.4f}")


COMMANDS = {
    "simulate": cmd_simulate,
    "fixed-points": cmd_fixed_points,
    "hopf-scan": cmd_hopf_scan,
    "sweep": cmd_sweep,
    "overlap": cmd_overlap,
    "sensitivity": cmd_sensitivity,
    "retrieve": cmd_retrieve,
    "noise-sweep": cmd_noise_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="allee-plasticity", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--plots", action="store_true", help="also write SVG plots")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        raw = config.load(args.config) if args.config else {}
        raw.update(config.parse_overrides(args.set))
        cfg = config.resolve(SCHEMAS[args.command], raw)
        COMMANDS[args.command](cfg, Path(args.out), args.plots)
    except config.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DomainError, ShapeMismatch) as e:
        print(f"error: invalid parameters: {e}", file=sys.stderr)
        return 2
    except (NoFixedPointError, StepFailure, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
