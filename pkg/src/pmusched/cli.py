"""Command-line entry point: ``pmusched <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 invalid input, 4 numerical failure.
Whenever ``--out`` is given, a ``*.manifest.json`` record is written next to
the outputs; ``pmusched replay`` re-runs it and reproduces the same files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detector import ConvergenceError, NoiseParams, glrt_test
from .electrical import SingularNetworkError, electrical_connectivity, resistance_distance
from .network import (CaseFormatError, NetworkValidationError, build_incidence, case_checksum,
                      dc_laplacian, load_case, nominal_susceptance)
from .pipeline import METHODS, plan
from .placement import InfeasiblePlacementError
from .scheduler import truncate_schedule
from .simulation import (SimConfig, SimulationError, add_noise, default_alpha_grid,
                         generate_truth, monte_carlo_pd, write_pd_csv)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


def _write_csv_matrix(path, M, fmt="%.17g"):
    np.savetxt(path, M, delimiter=",", fmt=fmt)


def _manifest(args, outputs):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    return {
        "subcommand": args.command,
        "config": cfg,
        "out": args.out,
        "case_sha256": case_checksum(args.case),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": outputs,
    }


def _write_manifest(args, path, outputs):
    Path(path).write_text(json.dumps(_manifest(args, outputs), indent=2, sort_keys=True) + "\n")


def _out_dir(args):
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_place(args):
    net = load_case(args.case)
    p = plan(net, args.method, reference_bus=args.ref)
    sol = p.placement
    print(f"N={sol.count}: " + " ".join(map(str, sol.pmu_buses)))
    outputs = []
    if args.emit:
        np.savetxt(args.emit, sol.decision, fmt="%d")
        outputs.append(str(args.emit))
    if args.out:
        d = _out_dir(args)
        np.savetxt(d / "placement.csv", sol.decision, fmt="%d")
        _write_csv_matrix(d / "connectivity.csv", p.connectivity, fmt="%d")
        outputs += [str(d / "placement.csv"), str(d / "connectivity.csv")]
        _write_manifest(args, d / "place.manifest.json", outputs)


def _schedule_rows(sched):
    return [(n + 1, bus, t) for n, (bus, t) in enumerate(zip(sched.order, sched.slot_boundaries))]


def cmd_schedule(args):
    net = load_case(args.case)
    sched = plan(net, args.method, T=args.T, reference_bus=args.ref).schedule
    if args.pmus is not None:
        sched = truncate_schedule(sched, args.pmus)
    print(" ".join(map(str, sched.order)))
    print("slot,bus,end_time")
    rows = _schedule_rows(sched)
    for row in rows:
        print(",".join(map(str, row)))
    outputs = []
    targets = [Path(args.emit)] if args.emit else []
    if args.out:
        targets.append(_out_dir(args) / "schedule.csv")
    for path in targets:
        with open(path, "w") as fh:
            fh.write("slot,bus,end_time\n")
            fh.writelines(",".join(map(str, r)) + "\n" for r in rows)
        outputs.append(str(path))
    if args.out:
        _write_manifest(args, Path(args.out) / "schedule.manifest.json", outputs)


def cmd_distance(args):
    net = load_case(args.case)
    L = dc_laplacian(net, nominal_susceptance(net))
    E = resistance_distance(L, args.ref).entries
    adj = None
    if args.adjacency is not None:
        adj = electrical_connectivity(E, args.adjacency, resolve_ties=True)
    if not args.out:
        _write_csv_matrix(sys.stdout, E)
        if adj is not None:
            print(f"lambda={adj.lam!r}")
            _write_csv_matrix(sys.stdout, adj.matrix, fmt="%d")
        return
    d = _out_dir(args)
    _write_csv_matrix(d / "distance.csv", E)
    outputs = [str(d / "distance.csv")]
    if adj is not None:
        _write_csv_matrix(d / "adjacency.csv", adj.matrix, fmt="%d")
        (d / "lambda.txt").write_text(f"{adj.lam!r}\n")
        outputs += [str(d / "adjacency.csv"), str(d / "lambda.txt")]
        print(f"lambda={adj.lam!r}")
    _write_manifest(args, d / "distance.manifest.json", outputs)


def cmd_detect(args):
    net = load_case(args.case)
    D = build_incidence(net)
    s0 = nominal_susceptance(net)
    noise = NoiseParams(args.sigma2_z, args.sigma2_theta)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    truth = generate_truth(s0, D, args.T, args.shift, rng)
    res = glrt_test(add_noise(truth, noise, rng), D, noise, s0, args.alpha)
    record = (
        f"statistic: {res.statistic!r}\n"
        f"threshold: {res.threshold!r}\n"
        f"alpha: {res.alpha!r}\n"
        f"dof: {res.dof}\n"
        f"decision: {res.decision}\n"
        f"T: {args.T}\n"
        f"shift: {args.shift!r}\n"
        f"seed: {args.seed}\n"
    )
    sys.stdout.write(record)
    if args.out:
        d = _out_dir(args)
        (d / "detect.txt").write_text(record)
        _write_manifest(args, d / "detect.manifest.json", [str(d / "detect.txt")])


def cmd_simulate(args):
    net = load_case(args.case)
    p = plan(net, args.method, T=args.T, reference_bus=args.ref)
    cfg = SimConfig(T=args.T, trials=args.trials, shift=args.shift,
                    alpha_grid=default_alpha_grid(args.alphas), seed=args.seed,
                    noise=NoiseParams(args.sigma2_z, args.sigma2_theta),
                    policy=args.policy, pmu_limit=args.pmus)
    curve = monte_carlo_pd(cfg, net, p.schedule, workers=args.workers)
    print("order: " + " ".join(map(str, curve.order)))
    print("slot,time,pd_scheduled,pd_random")
    for i, t in enumerate(curve.times):
        ps = "" if curve.pd_scheduled is None else f"{curve.pd_scheduled[i]:.4f}"
        pr = "" if curve.pd_random is None else f"{curve.pd_random[i]:.4f}"
        print(f"{i + 1},{t},{ps},{pr}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_pd_csv(curve, out)
        _write_manifest(args, out.with_suffix(".manifest.json"), [str(out)])


def cmd_replay(args):
    record = json.loads(Path(args.manifest).read_text())
    cfg = dict(record["config"])
    if case_checksum(cfg["case"]) != record["case_sha256"]:
        raise CaseFormatError(f"{cfg['case']}: contents differ from the manifest checksum")
    ns = argparse.Namespace(**cfg, out=record["out"], func=_COMMANDS[record["subcommand"]])
    ns.func(ns)


_COMMANDS = {
    "place": cmd_place,
    "schedule": cmd_schedule,
    "distance": cmd_distance,
    "detect": cmd_detect,
    "simulate": cmd_simulate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="pmusched",
                                     description="PMU placement, transmission scheduling "
                                                 "and susceptance-change detection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method=True):
        p.add_argument("--case", default="case14", help="case file path or shipped fixture name")
        p.add_argument("--ref", type=int, default=1, help="reference bus for resistance distance")
        if method:
            p.add_argument("--method", choices=METHODS, default="electrical")

    def noise(p):
        p.add_argument("--sigma2-z", type=float, default=0.01)
        p.add_argument("--sigma2-theta", type=float, default=0.01)

    p = sub.add_parser("place", help="optimal PMU placement")
    common(p)
    p.add_argument("--emit", help="write the decision vector d as CSV")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("schedule", help="transmission order of the placed PMUs")
    common(p)
    p.add_argument("--T", type=int, default=20, help="frame length in time units")
    p.add_argument("--pmus", type=int, help="keep only the first m transmitters")
    p.add_argument("--emit", help="write the slot table as CSV")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("distance", help="resistance-distance matrix as CSV")
    common(p, method=False)
    p.add_argument("--adjacency", type=int, metavar="K",
                   help="also emit the K-pair electrical adjacency and its threshold")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("detect", help="single TLS-GLRT run on simulated data")
    common(p, method=False)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--T", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", type=float, default=None,
                   help="relative susceptance change after the first time unit")
    noise(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="Monte Carlo Pd-versus-time curves")
    common(p)
    p.add_argument("--policy", choices=("scheduled", "random", "both"), default="both")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", type=float, default=-0.02)
    p.add_argument("--alphas", type=int, default=20, help="size of the false-alarm grid")
    p.add_argument("--T", type=int, default=20)
    p.add_argument("--pmus", type=int, help="limit transmitters to the first m of the schedule")
    p.add_argument("--workers", type=int, default=1)
    noise(p)
    p.add_argument("--out", help="CSV path for the Pd curve")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="re-run a manifest written by a previous command")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay, out=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    # LinAlgError is a ValueError, so it must be caught first
    except (SingularNetworkError, ConvergenceError, SimulationError, np.linalg.LinAlgError) as exc:
        print(f"pmusched: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CaseFormatError, NetworkValidationError, InfeasiblePlacementError,
            ValueError, IndexError, OSError) as exc:
        print(f"pmusched: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
