"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 degenerate instance, 3 internal
consistency failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import _io
from .errors import (
    ConclusionViolated,
    CrossCheckMismatch,
    DegenerateEndpoint,
    InputError,
    LiftError,
    Sp2IndexError,
)
from .sp2core import DEG_TOL
from .sympath import (
    HamiltonianSpec,
    StepControl,
    bott_check,
    index_report,
    integrate_fundamental,
    random_piecewise_spec,
)

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_INTERNAL = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _range3(text: str):
    """``lo:hi:n`` grid axis, or a comma list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}") from None
        if n < 1:
            raise argparse.ArgumentTypeError("grid resolution must be >= 1")
        return (lo, hi, n)
    vals = _floats(text)
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _out_path(args, name: Optional[str]) -> Optional[str]:
    if name is None:
        return None
    if os.path.isabs(name) or args.outdir is None:
        return name
    return os.path.join(args.outdir, name)


def _emit(args, text: str, name: Optional[str]) -> None:
    path = _out_path(args, name)
    if path:
        _io.atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _step(args) -> StepControl:
    return StepControl(local_tol=args.local_tol, abs_tol=0.1 * args.local_tol)


# ---------------------------------------------------------------------------
# Commands


def _index_spec(args) -> HamiltonianSpec:
    if args.schedule:
        with open(args.schedule) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{args.schedule}: {exc}") from None
        try:
            return HamiltonianSpec.piecewise(d["breaks"], d["mats"], label=args.schedule)
        except KeyError as exc:
            raise InputError(f"schedule needs 'breaks' and 'mats' ({exc})") from None
    if args.builtin == "mathieu":
        from .mathieu import MathieuParams, mathieu_spec

        return mathieu_spec(MathieuParams(args.omega2, args.eps))
    if args.builtin == "constant-S":
        e = args.entries
        if e is None or len(e) not in (3, 4):
            raise InputError("--entries needs s11,s12,s22 or the four entries of S")
        S = [[e[0], e[1]], [e[1], e[2]]] if len(e) == 3 else [[e[0], e[1]], [e[2], e[3]]]
        return HamiltonianSpec.constant(S, args.T if args.T is not None else 1.0)
    if args.builtin == "pendulum-linearized":
        from .actionlag import LoopRepr, linearize_extremal
        from .pendulum import PendulumProblem, TrigForcing

        T = args.T if args.T is not None else 2.0 * math.pi
        prob = PendulumProblem(args.beta, T, TrigForcing(T, args.forcing_cos or (), args.forcing_sin or ()))
        loop = LoopRepr.constant(args.u, T)
        if not prob.forcing.is_zero or args.solve:
            from .pendulum import solve_pendulum

            rep = solve_pendulum(prob)
            loop = (rep.q2 if args.orbit == "q2" else rep.q1).critical.loop
        return linearize_extremal(prob.lagrangian(), loop)
    raise InputError("give --builtin or --schedule")


def cmd_index(args) -> int:
    spec = _index_spec(args)
    path = integrate_fundamental(spec, step=_step(args))
    phis = args.phi if args.phi else [0.0, math.pi]
    rep = index_report(path, phis=phis, deg_tol=args.deg_tol, max_iterate=max(2, args.m))
    d = rep.to_dict()
    d["m"] = args.m
    _emit(args, _io.json_text(d), args.out)
    if rep.degenerate_flags:
        where = ", ".join(
            f"omega=exp(i*{f:.17g})" if isinstance(f, float) else str(f) for f in rep.degenerate_flags
        )
        print(f"degenerate endpoint: {where}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_mathieu_scan(args) -> int:
    from .mathieu import scan_plane, write_scan

    cells = scan_plane(args.omega2, args.eps, deg_tol=args.deg_tol, step=_step(args), jobs=args.jobs)
    csv_path = _out_path(args, args.csv)
    json_path = _out_path(args, args.json)
    if not csv_path and not json_path:
        from .mathieu import SCAN_HEADER

        sys.stdout.write(_io.csv_text(SCAN_HEADER, (c.row() for c in cells)))
    else:
        write_scan(cells, csv_path, json_path)
    n_deg = sum(c.degenerate for c in cells)
    print(f"{len(cells)} cells, {n_deg} degenerate", file=sys.stderr)
    return EXIT_OK


def cmd_mathieu_curves(args) -> int:
    from .mathieu import CURVE_HEADER, curve_rows, trace_transition_curves

    curves = trace_transition_curves(args.n_max, args.eps_max, args.step, jobs=args.jobs)
    _emit(args, _io.csv_text(CURVE_HEADER, curve_rows(curves)), args.csv)
    return EXIT_OK


def cmd_mathieu_crossection(args) -> int:
    from .mathieu import crossection

    cs = crossection(args.eps, args.n_max, args.step)
    _emit(args, _io.json_text(cs.to_dict()), args.json)
    print("i1: " + ",".join(map(str, cs.i1_sequence)), file=sys.stderr)
    print("i2: " + ",".join(map(str, cs.i2_sequence)), file=sys.stderr)
    return EXIT_OK


def cmd_pendulum(args) -> int:
    from .pendulum import PendulumProblem, solve_pendulum

    if args.problem:
        prob = PendulumProblem.from_json(args.problem)
    elif args.series:
        if args.beta is None or args.T is None:
            raise InputError("--series needs --beta and --T")
        prob = PendulumProblem.from_csv(args.series, args.beta, args.T, args.modes)
    else:
        prob = PendulumProblem.demo()
    rep = solve_pendulum(prob, N=args.N, deg_tol=args.deg_tol, step=_step(args))
    _emit(args, _io.json_text(rep.to_dict()), args.out)
    v = rep.verdicts
    print(f"q1: {v['q1'].value}, q2: {v['q2'].value}", file=sys.stderr)
    return EXIT_OK


def run_bott_trials(seed: int, trials: int, ms: Sequence[int], deg_tol: float = DEG_TOL, max_resample: int = 100):
    """Bott checks at z = 1 on reproducible random piecewise-constant specs."""
    rng = np.random.default_rng(seed)
    results = []
    resampled = 0
    for k in range(trials):
        for _ in range(max_resample):
            spec = random_piecewise_spec(rng)
            path = integrate_fundamental(spec)
            try:
                checks = [bott_check(path, m, 0.0, deg_tol) for m in ms]
                break
            except DegenerateEndpoint:
                resampled += 1
        else:
            raise InputError("could not draw a nondegenerate spec")
        for m, c in zip(ms, checks):
            results.append(
                {
                    "trial": k,
                    "m": m,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "holds": c.holds,
                    "terms": [[phi, i] for phi, i in c.terms],
                }
            )
    return {
        "seed": seed,
        "trials": trials,
        "m": list(ms),
        "resampled_degenerate": resampled,
        "vacuous": trials == 0,
        "all_hold": all(r["holds"] for r in results),
        "failures": sum(not r["holds"] for r in results),
        "results": results,
    }


def cmd_bott(args) -> int:
    summary = run_bott_trials(args.seed, args.trials, args.m, args.deg_tol)
    _emit(args, _io.json_text(summary), args.out)
    if summary["vacuous"]:
        print("0 trials: vacuous pass", file=sys.stderr)
    else:
        print(
            f"{args.trials} trials, m={args.m}: {summary['failures']} failures",
            file=sys.stderr,
        )
    return EXIT_OK if summary["all_hold"] else EXIT_INTERNAL


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--outdir", default=None, help="directory for relative output paths")
    common.add_argument("--deg-tol", type=_positive, default=DEG_TOL)
    common.add_argument("--local-tol", type=_positive, default=1e-12, help="integrator relative tolerance")
    common.add_argument("--jobs", type=int, default=1)

    p = argparse.ArgumentParser(prog="sp2index", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("index", parents=[common], help="indices of one periodic linear system")
    s.add_argument("--builtin", choices=["mathieu", "constant-S", "pendulum-linearized"])
    s.add_argument("--schedule", help="JSON {breaks: [...], mats: [[[..],[..]], ...]}")
    s.add_argument("--omega2", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--entries", type=_floats)
    s.add_argument("--T", type=_positive, default=None)
    s.add_argument("--beta", type=_positive, default=0.2)
    s.add_argument("--u", type=float, default=0.0, help="constant loop to linearize about")
    s.add_argument("--forcing-cos", type=_floats)
    s.add_argument("--forcing-sin", type=_floats)
    s.add_argument("--solve", action="store_true", help="linearize about a solved orbit")
    s.add_argument("--orbit", choices=["q1", "q2"], default="q2")
    s.add_argument("--phi", type=_floats, help="omega angles in [0, pi]")
    s.add_argument("--m", type=int, default=2, help="highest iterate to report")
    s.add_argument("--out")
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("mathieu-scan", parents=[common], help="index chart over a grid")
    s.add_argument("--omega2", type=_range3, required=True, help="lo:hi:n or list")
    s.add_argument("--eps", type=_range3, required=True, help="lo:hi:n or list")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_mathieu_scan)

    s = sub.add_parser("mathieu-curves", parents=[common], help="transition curves")
    s.add_argument("--n-max", type=int, default=4)
    s.add_argument("--eps-max", type=float, default=1.0)
    s.add_argument("--step", type=_positive, default=0.01)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_mathieu_curves)

    s = sub.add_parser("mathieu-crossection", parents=[common], help="regions along fixed eps")
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--n-max", type=int, default=4)
    s.add_argument("--step", type=_positive, default=0.01)
    s.add_argument("--json")
    s.set_defaults(func=cmd_mathieu_crossection)

    s = sub.add_parser("pendulum", parents=[common], help="forced pendulum pipeline")
    s.add_argument("--problem", help="JSON {beta, T, forcing: {cos: [...], sin: [...]}}")
    s.add_argument("--series", help="CSV t,f time series")
    s.add_argument("--beta", type=float)
    s.add_argument("--T", type=_positive)
    s.add_argument("--modes", type=int, default=16)
    s.add_argument("--N", type=int, default=64)
    s.add_argument("--out")
    s.set_defaults(func=cmd_pendulum)

    s = sub.add_parser("bott", parents=[common], help="random Bott-formula trials")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--m", type=_ints, default=[2, 3])
    s.add_argument("--out")
    s.set_defaults(func=cmd_bott)
    return p


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{ln}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    conf = _read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for k, v in conf.items():
        if k not in actions:
            raise InputError(f"unknown config key {k!r} for {args.command}")
        a = actions[k]
        if isinstance(a, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        else:
            defaults[k] = a.type(v) if a.type else v
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if getattr(args, "jobs", 1) < 1:
            raise InputError("--jobs must be >= 1")
        return args.func(args)
    except SystemExit as exc:  # argparse errors
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except DegenerateEndpoint as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (CrossCheckMismatch, ConclusionViolated, LiftError) as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, argparse.ArgumentTypeError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Sp2IndexError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
