"""Command-line interface.

Subcommands: profiles, simulate, verify, rates, sweep, kernel-table.
Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 instability.
"""

import argparse
import glob
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics as asy
from . import checks
from . import profiles as pr
from .core import Field, make_grid
from .errors import ConfigError, InstabilityError
from .harness import run_experiment, scenario_from_json
from .profiles import ModelParams
from .semigroup import t_multiplier
from .solver import Trajectory


def _add_param_args(sp):
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--mass", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)


def _cmd_profiles(args) -> int:
    p = ModelParams(args.beta, args.gamma, args.alpha, args.mass)
    ps = pr.constants(p, c_alpha=(args.c_plus, args.c_minus))
    print(f"kappa = {ps.kappa!r}")
    print(f"d     = {ps.d!r}")
    print(f"mu0   = {ps.mu0!r}")
    print(f"mu1   = {ps.mu1!r}")
    if args.table_out:
        grid = make_grid(args.L, args.N)
        x = grid.x
        cols = [x, pr.chi_star(x, p), pr.eta_star(x, p), pr.V_star(x, p)]
        header = "x,chi_star,eta_star,V_star"
        if args.z_time is not None:
            cols.append(pr.Z_eval(x, args.z_time, p, ps))
            header += f",Z_t{args.z_time:g}"
        with open(args.table_out, "w") as fh:
            fh.write(header + "\n")
            for row in zip(*cols):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        print(f"wrote {args.table_out}")
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        s = scenario_from_json(json.load(fh))
    bundle = run_experiment(s, out_root=args.out)
    print(f"bundle written to {bundle['paths'].get('bundle_dir', '<not written>')}")
    return 0


def _cmd_verify(args) -> int:
    results = checks.run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _load_bundle_trajectory(bundle_dir: str):
    with open(os.path.join(bundle_dir, "report.json")) as fh:
        report = json.load(fh)
    sc = report["scenario"]
    s = scenario_from_json(sc)
    grid = s.grid
    times = report["solver"]["times"]
    snaps = []
    for i, _t in enumerate(times):
        table = np.loadtxt(
            os.path.join(bundle_dir, "snapshots", f"snap_{i:03d}.csv"),
            delimiter=",",
            skiprows=1,
        )
        snaps.append(Field(grid, table[:, 1]))
    masses = np.array([f.mass() for f in snaps])
    traj = Trajectory(
        s.params, grid, np.asarray(times), snaps, masses, np.zeros(len(snaps))
    )
    cd = report["constants"]["c_alpha"]
    ps = pr.constants(s.params, c_alpha=(cd["c_plus"], cd["c_minus"]))
    return s, traj, ps


def _cmd_rates(args) -> int:
    s, traj, ps = _load_bundle_trajectory(args.bundle)
    es = asy.error_series(traj, args.combo, args.l, args.norm, ps)
    window = (args.window[0], args.window[1]) if args.window else (
        float(traj.times[traj.times > 0][0]), float(traj.times[-1]))
    log_power = 0 if 1.0 < s.alpha < 2.0 else 1
    fit = asy.fit_rate(es, window, log_power=log_power)
    print(f"combo={args.combo} norm={args.norm} l={args.l} window={window}")
    print(f"  exponent   = {fit.exponent:+.4f}  (log_power={fit.log_power})")
    print(f"  theil_sen  = {fit.theil_sen:+.4f}")
    print(f"  amplitude  = {fit.amplitude:.6g}")
    print(f"  resid_rms  = {fit.residual_rms:.3e}  over {fit.n_samples} samples")
    return 0


def _run_one(path_and_out):
    path, out = path_and_out
    with open(path) as fh:
        s = scenario_from_json(json.load(fh))
    bundle = run_experiment(s, out_root=out)
    return path, bundle["paths"].get("bundle_dir", "")


def _cmd_sweep(args) -> int:
    paths = sorted(glob.glob(args.configs))
    if not paths:
        raise ConfigError(f"no configs match {args.configs!r}")
    failures = 0
    jobs = [(path, args.out) for path in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            futures = {ex.submit(_run_one, job): job[0] for job in jobs}
            for fut, path in futures.items():
                try:
                    _, bundle_dir = fut.result()
                    print(f"{path} -> {bundle_dir}")
                except Exception as exc:  # noqa: BLE001 - report, keep sweeping
                    failures += 1
                    print(f"{path} FAILED: {exc}")
    else:
        for job in jobs:
            try:
                path, bundle_dir = _run_one(job)
                print(f"{path} -> {bundle_dir}")
            except Exception as exc:  # noqa: BLE001 - report, keep sweeping
                failures += 1
                print(f"{job[0]} FAILED: {exc}")
    return 1 if failures else 0


def _cmd_kernel_table(args) -> int:
    grid = make_grid(args.L, args.N)
    mult = t_multiplier(grid.xi, grid.xi_odd, args.t, args.gamma)
    order = np.argsort(grid.xi)
    out = args.out or sys.stdout
    rows = ["xi,re_m,im_m"]
    for k in order:
        rows.append(
            f"{float(grid.xi[k])!r},{float(mult[k].real)!r},{float(mult[k].imag)!r}"
        )
    text = "\n".join(rows) + "\n"
    if isinstance(out, str):
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        out.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bbmburgers",
        description="Numerical laboratory for BBM-Burgers large-time asymptotics",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profiles", help="tabulate closed-form profiles and constants")
    _add_param_args(sp)
    sp.add_argument("--c-plus", type=float, default=0.0, dest="c_plus")
    sp.add_argument("--c-minus", type=float, default=0.0, dest="c_minus")
    sp.add_argument("--z-time", type=float, default=None, dest="z_time")
    sp.add_argument("--L", type=float, default=40.0)
    sp.add_argument("--N", type=int, default=2048)
    sp.add_argument("--table-out", default=None, dest="table_out")
    sp.set_defaults(fn=_cmd_profiles)

    sp = sub.add_parser("simulate", help="run one scenario and write its bundle")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default="out")
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("verify", help="run a built-in acceptance suite")
    sp.add_argument("--suite", required=True, choices=sorted(checks.SUITES))
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("rates", help="fit decay rates from a written bundle")
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--combo", required=True, choices=list(asy.COMBOS))
    sp.add_argument("--norm", required=True, choices=["l2", "linf"])
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--window", type=float, nargs=2, default=None)
    sp.set_defaults(fn=_cmd_rates)

    sp = sub.add_parser("sweep", help="run many scenarios")
    sp.add_argument("--configs", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default="out")
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("kernel-table", help="dump the T(t) multiplier")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--L", type=float, default=40.0)
    sp.add_argument("--N", type=int, default=256)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_kernel_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
