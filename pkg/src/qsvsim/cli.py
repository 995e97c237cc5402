"""Command-line entry point: ``qsvsim {verify,sweep,metrics,appendix}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import attacks as atk
from . import verifier as V
from .channels import AlgebraObject, BlockState, dephasing, kraus_channel
from .errors import QSVError
from .metrics import diamond_lower_estimate, fidelity, fvdg_bounds, helstrom, trace_distance_half
from .protocols import Protocol, TargetSpec


def read_state(path) -> BlockState:
    """Load ``{"dims": [...], "entries": [[re, im], ...]}``, blocks in row-major order."""
    data = json.loads(Path(path).read_text())
    dims = [int(x) for x in data["dims"]]
    vals = np.array([complex(re, im) for re, im in data["entries"]], dtype=np.complex128)
    obj = AlgebraObject(tuple(dims))
    if vals.size != obj.vec_size:
        raise QSVError(f"{path}: expected {obj.vec_size} entries for dims {dims}, got {vals.size}")
    return BlockState.from_vec(obj, vals)


def read_kraus(path):
    """Load ``{"kraus": [[[ [re, im], ...], ...], ...]}`` as a channel."""
    data = json.loads(Path(path).read_text())
    ops = [np.array([[complex(re, im) for re, im in row] for row in k]) for k in data["kraus"]]
    return kraus_channel(ops, Path(path).stem)


def _write(data: bytes, out):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def _finish(reports, args) -> int:
    _write(V.emit(reports, args.format), args.out)
    bad = [r.config_id for r in reports if not r.passed]
    if bad:
        logging.error("negative margin in %d configuration(s): %s", len(bad), ", ".join(bad))
        return 1
    return 0


def cmd_sweep(args) -> int:
    text = Path(args.config).read_text()
    reports = V.run_sweep(text, jobs=args.jobs)
    return _finish(reports, args)


def cmd_verify(args) -> int:
    cfg = V.load_config(Path(args.config).read_text())
    n = len(V.expand(cfg))
    if n != 1:
        raise QSVError(f"verify expects a single configuration, the grid has {n}; use sweep")
    return _finish(V.run_sweep(cfg), args)


def cmd_metrics(args) -> int:
    out = {}
    if args.states:
        r0, r1 = read_state(args.states[0]), read_state(args.states[1])
        h = helstrom(r0, r1)
        out["trace_distance"] = trace_distance_half(r0, r1)
        out["helstrom_advantage"] = h.advantage
        if len(r0.blocks) == 1:
            out["fidelity"] = fidelity(r0, r1)
            out["fvdg"] = list(fvdg_bounds(r0, r1))
    if args.channel:
        a, b = read_kraus(args.channel[0]), read_kraus(args.channel[1])
        out["diamond_lower"] = diamond_lower_estimate(a, b, budget=args.budget, seed=args.seed)
    if not out:
        raise QSVError("give --states or --channel")
    _write((json.dumps(out, indent=2) + "\n").encode(), args.out)
    return 0


def cmd_appendix(args) -> int:
    reports = []
    for N in args.N:
        if args.mode == "measurement":
            t = TargetSpec.from_amplitudes(np.eye(args.d)[0], [args.d])
            a = atk.measurement_attack_construction(t, N)
            p = Protocol.simple(t, N, post=a.measurement)
            bound = V.theorem_bound("appendix-measurement", N)
            logging.info("N=%d gain %.12g, sin(eta)sin(2theta-eta) %.12g", N, a.params["gain"],
                         a.params["identity"])
        else:
            t = TargetSpec.from_amplitudes(np.eye(args.d)[0], [args.d])
            p = Protocol.simple(t, N, post=dephasing(args.d))
            w = atk.omega(t.matrix)
            a = atk.depolarized_attack_state(t, 1.0 / (2.0 * w * N))
            wp = atk.omega(p.post(t.state).matrix)
            bound = V.theorem_bound("appendix-unital", N, omega=w, omega_prime=wp)
        reports.append(V.make_report(f"{args.mode}.N{N}", bound.tag, p, a, bound, time.perf_counter()))
    return _finish(reports, args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsvsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        if config:
            p.add_argument("--config", required=True, help="JSON configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int, default=100, help="estimator evaluations")
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("verify", help="certify one configuration")
    common(p, config=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="certify a grid of configurations")
    common(p, config=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="distances between states or channels in JSON files")
    common(p)
    p.add_argument("--states", nargs=2, metavar=("RHO0", "RHO1"))
    p.add_argument("--channel", nargs=2, metavar=("KRAUS0", "KRAUS1"))
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("appendix", help="the measurement and unital output-channel bounds")
    common(p)
    p.add_argument("mode", choices=("measurement", "unital"))
    p.add_argument("--N", type=int, nargs="+", default=[4, 16])
    p.add_argument("--d", type=int, default=None)
    p.set_defaults(func=cmd_appendix)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "d", 0) is None:
        args.d = 3 if args.mode == "measurement" else 2
    try:
        return args.func(args)
    except (QSVError, OSError, json.JSONDecodeError, KeyError) as exc:
        logging.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
