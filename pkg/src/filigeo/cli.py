"""``filigeo`` command line: integrate one trajectory or run a scripted experiment."""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .errors import FiligeoError
from .filippov import demo_field, integrate_filippov
from .geodesics import hw_geodesic_family, hw_initial_velocity, shoot_geodesic
from .metric_zoo import bubble, flat, hw_lorentzian, hw_riemannian, lipschitz_toy

EXIT_CODES = {
    "Completed": 0,
    "RepulsiveStop": 3,
    "DomainExit": 4,
    "StepFailure": 5,
    "SlidingExit": 6,
}
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 1

METRICS = ("hw", "hw-lorentzian", "bubble", "toy-lipschitz", "flat", "demo-crossing", "demo-sliding", "demo-repulsive")
NEEDS_LAMBDA = ("hw", "hw-lorentzian", "bubble")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="filigeo", description="Filippov geodesics and causal structure for rough metrics.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, help="metric exponent")
    common.add_argument("--eps", type=float, help="HW geodesic parameter")
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--event-tol", dest="event_tol", type=float)
    common.add_argument("--out-dir", dest="out_dir", default=".")
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    it = sub.add_parser("integrate", parents=[common], help="integrate a geodesic or a demo field")
    it.add_argument("--metric", required=True, choices=METRICS)
    it.add_argument("--x0", type=_floats, help="initial point, comma separated")
    it.add_argument("--v0", type=_floats, help="initial velocity, comma separated")
    it.add_argument("--t-end", dest="t_end", type=float, help="final parameter value")
    it.add_argument("--samples", type=int, default=400)

    ex = sub.add_parser("experiment", parents=[common], help="run a scripted reproduction")
    ex.add_argument("name", choices=experiments.EXPERIMENTS)
    ex.add_argument("--grid-h", "--h", dest="grid_h", type=float, help="reachability grid spacing")
    ex.add_argument("--checks", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                    help="comma separated subset of check ids")
    ex.add_argument("--manifest", type=Path, help="manifest JSON; command line flags override it")
    return ap


@contextlib.contextmanager
def _thread_cap():
    n = os.environ.get("FILIGEO_THREADS")
    if not n:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=max(1, int(n))):
        yield


def _initial_data(args):
    """Default initial data per metric: ``(metric or field, x0, v0, t_end, is_demo)``."""
    name = args.metric
    if name.startswith("demo-"):
        x0 = args.x0 or {"demo-crossing": [-1.0], "demo-sliding": [1.0], "demo-repulsive": [0.0]}[name]
        return demo_field(name[5:]), x0, None, args.t_end or 3.0
    if name == "hw":
        m = hw_riemannian(args.lam)
        eps = args.eps if args.eps is not None else 0.25
        t_end = args.t_end or 2 * hw_geodesic_family(args.lam, eps).s0
        return m, args.x0 or [0.0, 0.0], args.v0 or list(hw_initial_velocity(eps)), t_end
    if name == "hw-lorentzian":
        m = hw_lorentzian(args.lam)
        eps = args.eps if args.eps is not None else 0.25
        t_end = args.t_end or 2 * hw_geodesic_family(args.lam, eps).s0
        return m, args.x0 or [0.0, 0.0, 0.0], args.v0 or [math.sqrt(2.0), *hw_initial_velocity(eps)], t_end
    if name == "bubble":
        return bubble(args.lam), args.x0 or [0.2, 0.0], args.v0 or [1.0, 0.0], args.t_end or 0.5
    if name == "toy-lipschitz":
        v = np.array([1.0, 0.5]) / math.sqrt(1.0 + 0.25 * 1.5)
        return lipschitz_toy(), args.x0 or [-0.5, 0.0], args.v0 or list(v), args.t_end or 2.0
    return flat(2), args.x0 or [0.0, 0.0], args.v0 or [1.0, 0.0], args.t_end or 1.0


def _tols(args) -> dict:
    return {
        "rtol": args.rtol if args.rtol is not None else 1e-10,
        "atol": args.atol if args.atol is not None else 1e-12,
        "event_tol": args.event_tol if args.event_tol is not None else 1e-10,
    }


def cmd_integrate(args) -> int:
    tol = _tols(args)
    if any(v <= 0 for v in tol.values()):
        raise FiligeoError("tolerances must be positive")
    obj, x0, v0, t_end = _initial_data(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if v0 is None:
        traj = integrate_filippov(obj, x0, (0.0, t_end), **tol)
        names = None
        n = traj.dim
    else:
        rec = shoot_geodesic(obj, x0, v0, (0.0, t_end), **tol)
        traj = rec.trajectory
        n = obj.dim
        names = [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]
    if args.format == "csv":
        traj.to_csv(out / "trajectory.csv", args.samples, names)
    else:
        ts, xs, sides = traj.sample(args.samples)
        payload = {"t": ts.tolist(), "state": xs.tolist(), "side": sides, "columns": names or [f"x{i + 1}" for i in range(n)]}
        (out / "trajectory.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
    traj.write_events(out / "events.json")
    manifest = {"command": "integrate", "metric": args.metric, "lambda": args.lam, "eps": args.eps,
                "x0": list(map(float, x0)), "v0": None if v0 is None else list(map(float, v0)), "t_end": t_end, **tol}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"{traj.termination}: {len(traj.events)} interface event(s), t_end={traj.t_end:.12g}")
    return EXIT_CODES[traj.termination]


def cmd_experiment(args) -> int:
    overrides = {"lambda": args.lam, "eps": args.eps, "rtol": args.rtol, "atol": args.atol,
                 "event_tol": args.event_tol, "grid_h": args.grid_h, "seed": args.seed}
    if args.manifest is not None:
        man = experiments.ExperimentManifest.from_json(args.manifest.read_text())
        if man.experiment != args.name:
            raise FiligeoError(f"manifest is for {man.experiment!r}, not {args.name!r}")
        man.params.update({k: v for k, v in overrides.items() if v is not None})
        if args.out_dir != ".":
            man.out_dir = args.out_dir
        if args.checks:
            man.checks = args.checks
    else:
        known = experiments.DEFAULTS[args.name]
        man = experiments.ExperimentManifest.build(
            args.name, {k: v for k, v in overrides.items() if k in known}, args.out_dir, args.checks
        )
    report = experiments.run(man)
    out = Path(man.out_dir)
    (out / "manifest.json").write_text(json.dumps(json.loads(man.to_json()), indent=2, sort_keys=True) + "\n")
    if args.format == "csv":
        with open(out / "checks.csv", "w") as fh:
            fh.write("id,name,passed\n")
            for c in report["checks"]:
                fh.write(f"{c['id']},{c['name']},{int(c['passed'])}\n")
    for c in report["checks"]:
        print(f"{c['id']:<22} {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    return 0 if report["passed"] else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "integrate" and args.metric in NEEDS_LAMBDA and args.lam is None:
        parser.error(f"--lambda is required for --metric {args.metric}")
    try:
        with _thread_cap():
            if args.command == "integrate":
                return cmd_integrate(args)
            return cmd_experiment(args)
    except (FiligeoError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"filigeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
