"""Command-line front end: ``fracdiffmap {sample,fdm,validate,krr}``.

Exit codes: 0 success, 2 usage or validation error, 3 pipeline failure.
Any flag may also be given in a ``--config`` file of ``key=value`` lines
(keys are flag names with or without the leading dashes); command-line
flags override the file, which overrides the defaults.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
import time

import numpy as np

from . import geodesics, manifolds, plots, ridge, spectral, validation
from .errors import FdmError, InvalidArgumentError, ResourceLimitError
from .kernels import FdmConfig

log = logging.getLogger("fracdiffmap")

EXIT_USAGE = 2
EXIT_PIPELINE = 3
LONG_LEVEL = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threshold(text):
    if text == "auto":
        return text
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("threshold must be positive or 'auto'")
    return v


def _add_common(p):
    p.add_argument("--config", help="key=value file with defaults for this command")
    p.add_argument("--reproducible", action="store_true", help="omit the timestamp header line")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="fracdiffmap", description="Fractional diffusion maps on point clouds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="write a sampled point cloud")
    _add_common(p)
    p.add_argument("--manifold", choices=["circle", "sphere", "interval"], default="circle")
    p.add_argument("--kind", choices=["uniform", "nonuniform", "random"], default="uniform")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--level", type=int, default=4, help="icosphere subdivision level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="points.csv")

    p = sub.add_parser("fdm", help="run the pipeline on a point cloud")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--l", type=int, default=20, help="number of nontrivial eigenpairs")
    p.add_argument("--graph-threshold", type=float)
    p.add_argument("--kde-bandwidth", type=float)
    p.add_argument("--distance-mode", choices=[m.value for m in geodesics.DistanceMode])
    p.add_argument("--analytic-geodesic", action="store_true", help="exact sphere geodesics")
    p.add_argument("--dump-heat", choices=["none", "binary", "csv"], default="none")
    p.add_argument("--svg", action="store_true", help="also plot the spectrum")
    p.add_argument("--allow-long", action="store_true")
    p.add_argument("--out", default="fdm_out")

    p = sub.add_parser("validate", help="compare against analytic truth")
    _add_common(p)
    p.add_argument("--experiment", choices=["sweep", "interval", "sphere"], default="sweep")
    p.add_argument("--kind", choices=["uniform", "nonuniform", "random"], default="uniform")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--beta", type=float, help="default 1 for interval, 2 otherwise")
    p.add_argument("--eps", type=float, help="single bandwidth (interval, sphere)")
    p.add_argument("--eps-min", type=float, default=2.0**-16)
    p.add_argument("--eps-max", type=float, default=2.0**-1)
    p.add_argument("--eps-count", type=int, default=31)
    p.add_argument("--l", type=int, default=60)
    p.add_argument("--graph-threshold", type=_threshold)
    p.add_argument("--thresholds", default="0.2,0.4", help="RMSE thresholds for the counts")
    p.add_argument("--terms", type=int, default=2000, help="cosine terms for the spectral truth")
    p.add_argument("--analytic-geodesic", action="store_true")
    p.add_argument("--allow-long", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", default="validate_out")

    p = sub.add_parser("krr", help="indicator-function ridge regression experiment")
    _add_common(p)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--betas", default="2,1")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--eps-count", type=int, help="size of the cross-validated bandwidth grid")
    grid.add_argument("--fixed", metavar="EPS,DELTA", help="skip cross-validation")
    p.add_argument("--delta-count", type=int, default=19)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", default="krr_out")
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def read_config(path):
    """Flat ``key=value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{k}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(sp, path):
    try:
        values = read_config(path)
    except OSError as err:
        raise UsageError(f"cannot read config file: {err}") from None
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in values.items():
        if key not in actions:
            raise UsageError(f"{path}: unknown key {key!r}")
        a = actions[key]
        if isinstance(a, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}: {key} expects a boolean")
            v = raw.lower() in ("true", "1", "yes")
        else:
            try:
                v = a.type(raw) if a.type else raw
            except (TypeError, ValueError, argparse.ArgumentTypeError) as err:
                raise UsageError(f"{path}: bad value for {key}: {err}") from None
            if a.choices is not None and v not in a.choices:
                raise UsageError(f"{path}: {key} must be one of {sorted(a.choices)}")
        defaults[key] = v
        a.required = False
    sp.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        # the first positional is the command name
        cmd = next((a for a in argv if not a.startswith("-")), None)
        if cmd in ("sample", "fdm", "validate", "krr"):
            _apply_config(_subparser(parser, cmd), known.config)
    return parser.parse_args(argv)


def _header(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "verbose", "reproducible")}
    text = json.dumps(cfg, default=str)
    if not args.reproducible:
        text += "\n# generated " + datetime.datetime.now().isoformat(timespec="seconds")
    return text


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _load_cloud(path):
    if not os.path.isfile(path):
        raise UsageError(f"input file not found: {path}")
    return manifolds.read_cloud_csv(path)


def _check_long(level, mode, allow_long):
    if level >= LONG_LEVEL and mode == geodesics.DistanceMode.GRAPH_DIJKSTRA and not allow_long:
        raise UsageError(
            f"icosphere level {level} with graph geodesics is slow; pass --allow-long "
            "or --analytic-geodesic"
        )


def cmd_sample(args):
    if args.manifold == "circle":
        samplers = {
            "uniform": lambda: manifolds.circle_uniform_grid(args.n),
            "nonuniform": lambda: manifolds.circle_nonuniform_grid(args.n),
            "random": lambda: manifolds.circle_random(args.n, args.seed),
        }
        cloud = samplers[args.kind]()
    elif args.manifold == "sphere":
        cloud = manifolds.sphere_icosphere_grid(args.level)
    else:
        cloud = manifolds.interval_grid(args.n)
    d = os.path.dirname(args.out)
    if d:
        os.makedirs(d, exist_ok=True)
    manifolds.write_cloud_csv(cloud, args.out)
    print(f"wrote {cloud.n_samples} points to {args.out}")


def _mode(args):
    if args.analytic_geodesic:
        if args.distance_mode not in (None, geodesics.DistanceMode.ANALYTIC_SPHERE.value):
            raise UsageError("--analytic-geodesic conflicts with --distance-mode " + args.distance_mode)
        return geodesics.DistanceMode.ANALYTIC_SPHERE
    return geodesics.DistanceMode(args.distance_mode or "graph")


def _spectrum_svg(path, res, beta, dim, title):
    lam = res.lambda_normalized[1:]
    j = np.arange(1, lam.size + 1, dtype=float)
    ref = j ** (beta / dim)
    ref = ref * (lam[0] / ref[0]) if lam.size and lam[0] > 0 else ref
    plots.line_chart(path, [(j, lam, "estimate"), (j, ref, f"j^{beta / dim:g}")], title=title,
                     xlabel="index j", ylabel="normalised eigenvalue", logx=True, logy=True,
                     dashed=(f"j^{beta / dim:g}",))


def cmd_fdm(args):
    cloud = _load_cloud(args.input)
    mode = _mode(args)
    if cloud.manifold == manifolds.Manifold.SPHERE and args.beta < 2:
        _check_long(_level_of(cloud.n_samples), mode, args.allow_long)
    cfg = FdmConfig(beta=args.beta, epsilon=args.eps, dim=args.dim, num_eigs=args.l,
                    distance_mode=mode, graph_threshold=args.graph_threshold,
                    kde_bandwidth=args.kde_bandwidth)
    print(f"branch: {'local' if cfg.is_local else 'nonlocal'}")
    t0 = time.perf_counter()
    stack, res = spectral.run_fdm(cloud, cfg)
    elapsed = time.perf_counter() - t0
    out = _outdir(args.out)
    spectral.write_spectrum_csv(res, os.path.join(out, "eigenvalues.csv"), os.path.join(out, "eigenfunctions.csv"))
    if args.dump_heat == "binary":
        geodesics.write_matrix_binary(os.path.join(out, "heat.fdmd"), stack.H, geodesics.DistanceKind.MARKOV)
    elif args.dump_heat == "csv":
        geodesics.write_matrix_csv(os.path.join(out, "heat.csv"), stack.H)
    if args.svg:
        _spectrum_svg(os.path.join(out, "spectrum.svg"), res, args.beta, args.dim, "spectrum")
    shown = ", ".join(f"{v:.6g}" for v in res.lambda_[1:6])
    print(f"lambda[1:6] = {shown}")
    print(f"time: {elapsed:.3f} s")


def _level_of(n):
    for level in range(manifolds.MAX_ICOSPHERE_LEVEL + 1):
        if 10 * 4**level + 2 == n:
            return level
    return 0


def _circle_cloud(args):
    if args.kind == "uniform":
        return manifolds.circle_uniform_grid(args.n)
    if args.kind == "nonuniform":
        return manifolds.circle_nonuniform_grid(args.n)
    return manifolds.circle_random(args.n, args.seed)


def cmd_validate(args):
    if args.beta is None:
        args.beta = 1.0 if args.experiment == "interval" else 2.0
    out = _outdir(args.out)
    header = _header(args)
    if args.experiment == "interval":
        comp = validation.interval_comparison(N=args.n, epsilon=args.eps or 1e-4, beta=args.beta, M=args.terms,
                                              graph_threshold=args.graph_threshold
                                              if args.graph_threshold != "auto" else None)
        comp.write_csv(os.path.join(out, "interval.csv"), header)
        d_reg = comp.l2_distance(comp.fdm, comp.regional)
        d_spec = comp.l2_distance(comp.fdm, comp.spectral)
        print(f"l2 to regional: {d_reg:.6g}")
        print(f"l2 to spectral: {d_spec:.6g}")
        if args.svg:
            plots.line_chart(os.path.join(out, "interval.svg"),
                             [(comp.x, comp.fdm, "fdm"), (comp.x, comp.regional, "regional"),
                              (comp.x, comp.spectral, "spectral")],
                             title="generator applied to x^2", xlabel="x", ylabel="min-normalised")
        return
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    if args.experiment == "sphere":
        mode = geodesics.DistanceMode.ANALYTIC_SPHERE if args.analytic_geodesic else geodesics.DistanceMode.GRAPH_DIJKSTRA
        if args.beta < 2:
            _check_long(args.level, mode, args.allow_long)
        cloud = manifolds.sphere_icosphere_grid(args.level)
        eps = args.eps if args.eps is not None else 0.01
        thr = args.graph_threshold if args.graph_threshold != "auto" else None
        cfg = FdmConfig(beta=args.beta, epsilon=eps, dim=2, num_eigs=args.l, distance_mode=mode, graph_threshold=thr)
        _, res = spectral.run_fdm(cloud, cfg)
        rep = validation.validate(cloud, res, args.beta)
        with open(os.path.join(out, "report.csv"), "w") as fh:
            fh.write(f"# {header}\n")
            fh.write("index,lambda,lambda_normalized,rmse\n")
            for i, r in enumerate(rep.per_eigenfunction_rmse, 1):
                fh.write(f"{i},{res.lambda_[i]:.17g},{res.lambda_normalized[i]:.17g},{r:.17g}\n")
        print(f"slope: {rep.power_law_slope:.6g} (r2 {rep.power_law_r2:.6g})")
        print(f"mean rmse: {rep.mean_rmse:.6g}")
        for t in thresholds:
            print(f"count below {t:g}: {rep.count_below(t)}")
        if args.svg:
            _spectrum_svg(os.path.join(out, "spectrum.svg"), res, args.beta, 2, "sphere spectrum")
        return
    if not 0 < args.eps_min <= args.eps_max or args.eps_count < 1:
        raise InvalidArgumentError("need 0 < eps-min <= eps-max and eps-count >= 1")
    cloud = _circle_cloud(args)
    grid = np.geomspace(args.eps_min, args.eps_max, args.eps_count)
    rows = validation.bandwidth_sweep(cloud, args.beta, grid, num_eigs=args.l, thresholds=thresholds,
                                      graph_threshold=args.graph_threshold)
    validation.write_sweep_csv(rows, os.path.join(out, "sweep.csv"), header)
    good = [r for r in rows if r.ok]
    if not good:
        raise FdmError("every sweep point failed: " + rows[0].error)
    best = min(good, key=lambda r: r.mean_rmse)
    print(f"best eps: {best.epsilon:.6g} mean rmse {best.mean_rmse:.6g}")
    print(f"failed points: {len(rows) - len(good)}")
    if args.svg:
        e = np.array([r.epsilon for r in rows])
        m = np.array([r.mean_rmse for r in rows])
        plots.line_chart(os.path.join(out, "sweep.svg"), [(e, m, f"beta={args.beta:g}")],
                         title="mean RMSE against bandwidth", xlabel="epsilon", ylabel="mean RMSE",
                         logx=True, logy=True)


def cmd_krr(args):
    if args.sigma < 0 or args.n < 4:
        raise InvalidArgumentError("need sigma >= 0 and n >= 4")
    betas = tuple(float(b) for b in args.betas.split(","))
    if args.fixed:
        try:
            eps, delta = (float(v) for v in args.fixed.split(","))
        except ValueError:
            raise UsageError("--fixed expects EPS,DELTA") from None
        eps_grid, delta_grid = [eps], [delta]
    else:
        eps_grid = ridge.EPS_GRID if args.eps_count is None else np.logspace(-3, 0, args.eps_count)
        delta_grid = np.logspace(-20, -2, args.delta_count)
    ex = ridge.indicator_experiment(args.n, args.sigma, args.seed, betas, eps_grid, delta_grid)
    out = _outdir(args.out)
    header = _header(args)
    ex.write_table(os.path.join(out, "table.csv"), header)
    ex.write_curves(os.path.join(out, "curves.csv"))
    ex.write_summary(os.path.join(out, "tuned.txt"))
    for b, f in ex.families.items():
        print(f"beta={b:g} eps={f.epsilon:.6g} delta={f.delta:.3g} overshoot(0)={f.overshoot_0:.6g} "
              f"overshoot(pi)={f.overshoot_pi:.6g} l2={f.l2_error:.6g}")
    if args.svg:
        order = np.argsort(ex.theta)
        th = ex.theta[order]
        series = [(th, ridge.indicator(th), "truth")]
        series += [(th, f.yhat[order], f"beta={b:g}") for b, f in ex.families.items()]
        plots.line_chart(os.path.join(out, "regression.svg"), series, title="expected regression",
                         xlabel="theta", ylabel="y", dashed=("truth",))


COMMANDS = {"sample": cmd_sample, "fdm": cmd_fdm, "validate": cmd_validate, "krr": cmd_krr}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # --help
        return int(err.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, InvalidArgumentError, ResourceLimitError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except FdmError as err:
        print(f"pipeline failure: {err}", file=sys.stderr)
        return EXIT_PIPELINE
    return 0


if __name__ == "__main__":
    sys.exit(main())
