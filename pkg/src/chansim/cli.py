"""Command-line entry point: ``chansim <command> [options]``.

Every output starts with a header recording the tool version, the full
configuration and the seed, so reruns with the same configuration are
byte-identical. CSV numbers use 9 significant digits.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bec_analytic import BEC_COLUMNS, bec_table
from .channel_sim import (CAP_ENUM, CAP_WORDS, Codebook, SimulationCode, draw_codebook, induced_distribution_exact,
                          softcover_tv, verify_converse)
from .errors import ChansimError, ValidationError
from .game_coord import Game, GameOptions, r0_curve
from .prob_core import Channel, Pmf, channel_from_json, pmf_from_json, triple_from_json, triple_to_json
from .rate_region import CURVE_COLUMNS, OptimizerOptions, ProblemSpec, boundary_curve


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v == 0.0:
        v = 0.0  # no negative zero
    return format(v, ".9g")


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` with inclusive endpoints, or a comma-separated list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return np.linspace(start, stop, count)
        return np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise ValidationError(f"bad grid {text!r}: expected start:stop:count or a comma list") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad integer list {text!r}") from None


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None


def _load(path: str, parser, what: str):
    obj = load_json(path)
    try:
        return parser(obj)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {what}: {exc}") from None


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def config_echo(args: argparse.Namespace) -> dict:
    cfg = {}
    for key, val in sorted(vars(args).items()):
        if key == "func":
            continue
        cfg[key] = val
        if key in ("source", "channel", "triple", "game", "codebook") and val:
            cfg[key + "_sha256"] = _digest(val)
    return cfg


def header(args) -> list[str]:
    return [
        f"# chansim {__version__}",
        f"# command: {args.command}",
        "# config: " + json.dumps(config_echo(args), sort_keys=True),
        f"# seed: {'none (deterministic command)' if args.seed is None else args.seed}",
    ]


def csv_text(args, columns, rows, notes=(), trailer=()) -> str:
    buf = io.StringIO()
    for line in header(args):
        buf.write(line + "\n")
    for note in notes:
        buf.write(f"# {note}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def json_text(args, payload: dict) -> str:
    meta = {"tool": f"chansim {__version__}", "command": args.command, "config": config_echo(args), "seed": args.seed}
    return json.dumps({"meta": meta, **payload}, indent=1, sort_keys=True) + "\n"


def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sidecar(args, payload: dict):
    path = args.certs or (args.out + ".certificates.json" if args.out else None)
    if path:
        Path(path).write_text(json_text(args, payload))


# ---------------------------------------------------------------------------
# commands


def cmd_region(args) -> int:
    source = _load(args.source, pmf_from_json, "source")
    channel = _load(args.channel, channel_from_json, "channel")
    spec = ProblemSpec(source, channel, args.u_card)
    grid = parse_grid(args.r2_grid)
    opts = OptimizerOptions(n_restarts=args.restarts, seed=args.seed)
    curve = boundary_curve(spec, grid, opts)
    notes = ["r1 values are upper bounds on the boundary (local search); each row has a certificate"]
    if curve.repairs:
        notes.append("monotone repair at rows " + ",".join(str(k) for k in curve.repairs))
    emit(csv_text(args, CURVE_COLUMNS, curve.rows(), notes), args.out)
    certs = []
    for rp, cert in curve.points:
        certs.append({"r2": rp.r2, "r1": rp.r1, "i_xu": cert.i_xu, "i_xyu": cert.i_xyu,
                      "marginal_gap": cert.marginal_gap, "accepted": cert.accepted,
                      "triple": triple_to_json(cert.triple)})
    _sidecar(args, {"certificates": certs, "repairs": curve.repairs})
    return 0


def cmd_bec(args) -> int:
    if args.pe is None:
        raise ValidationError("--pe is required")
    table = bec_table(args.pe, args.grid)
    emit(csv_text(args, BEC_COLUMNS, table.rows()), args.out)
    return 0


def _stats(vals: list[float]) -> tuple[float, float]:
    a = np.array(vals)
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def cmd_simulate(args) -> int:
    triple = _load(args.triple, triple_from_json, "triple")
    if args.r1 is None:
        raise ValidationError("--r1 is required")
    ns = parse_ints(args.n)
    rows, trailer = [], []
    pxy = np.einsum("u,ux,uy->xy", triple.pU.probs, triple.pXgU.kernel, triple.pYgU.kernel)
    for n in ns:
        vals = []
        for s in range(args.seeds):
            seed = args.seed + s
            cb = draw_codebook(triple.pU, n, args.r1, args.r2, seed, args.cap_words)
            if args.metric == "epsilon":
                code = SimulationCode.from_triple(cb, triple)
                v = induced_distribution_exact(code, args.cap_enum).epsilon
            elif args.metric == "tv-x":
                v = softcover_tv(cb, triple.pXgU, Pmf(pxy.sum(axis=1)), args.cap_enum)
            else:
                kern = np.einsum("ux,uy->uxy", triple.pXgU.kernel, triple.pYgU.kernel).reshape(triple.u_size, -1)
                v = softcover_tv(cb, Channel(kern), Pmf(pxy.ravel()), args.cap_enum)
            vals.append(v)
            rows.append((seed, n, args.r1, args.r2, args.metric, v))
        mean, se = _stats(vals)
        trailer.append(f"summary n={n} metric={args.metric} seeds={len(vals)} mean={fmt(mean)} se={fmt(se)}")
    emit(csv_text(args, ("seed", "n", "r1", "r2", "metric", "tv"), rows, trailer=trailer), args.out)
    return 0


def cmd_draw(args) -> int:
    triple = _load(args.triple, triple_from_json, "triple")
    if args.r1 is None:
        raise ValidationError("--r1 is required")
    n = parse_ints(args.n)
    if len(n) != 1:
        raise ValidationError("draw takes a single --n")
    cb = draw_codebook(triple.pU, n[0], args.r1, args.r2, args.seed, args.cap_words)
    emit(json.dumps(cb.to_json(), sort_keys=True) + "\n", args.out)
    return 0


def cmd_game(args) -> int:
    game = _load(args.game, Game.from_json, "game")
    grid = parse_grid(args.theta_grid)
    opts = GameOptions(seed=args.seed)
    curve = r0_curve(game, grid, opts)
    rows, certs = [], []
    for pt in curve:
        if pt.feasible:
            support = pt.strategy.pW.alphabet_size
            rows.append((pt.theta, pt.rate, support, pt.repaired, "ok"))
            certs.append({"theta": pt.theta, "rate": pt.rate, "pW": pt.strategy.pW.probs.tolist(),
                          "strategies": [s.probs.tolist() for s in pt.strategy.strategies]})
        else:
            rows.append((pt.theta, "", 0, 0, "infeasible"))
            certs.append({"theta": pt.theta, "infeasible": True})
    notes = ["rates are upper bounds (search over a finite strategy pool)"]
    emit(csv_text(args, ("theta", "rate", "w_support", "repair_flag", "status"), rows, notes), args.out)
    _sidecar(args, {"certificates": certs})
    return 0


def cmd_converse(args) -> int:
    triple = _load(args.triple, triple_from_json, "triple")
    cb = _load(args.codebook, lambda o: Codebook.from_json(o, triple.u_size), "codebook")
    code = SimulationCode.from_triple(cb, triple)
    ind = induced_distribution_exact(code, args.cap_enum)
    report = verify_converse(ind, cb.r1, cb.r2)
    emit(json_text(args, {"report": report.to_json(), "fallback_mass": ind.fallback_mass,
                          "source_gap": ind.source_gap}), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chansim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"chansim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help="output path (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
        return sp

    sp = common(sub.add_parser("region", help="numerical rate-region boundary"))
    sp.add_argument("--source", required=True, help='source pmf JSON {"probs": [...]}')
    sp.add_argument("--channel", required=True, help='channel JSON {"kernel": [[...], ...]}')
    sp.add_argument("--r2-grid", default="0:1:11", help="start:stop:count (inclusive)")
    sp.add_argument("--u-card", type=int, default=None, help="|U| used by the search (default |X||Y|+1)")
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--certs", help="certificate sidecar path (default: OUT.certificates.json)")
    sp.set_defaults(func=cmd_region)

    sp = common(sub.add_parser("bec", help="closed-form erasure-channel boundary"), seed=False)
    sp.add_argument("--pe", type=float, required=True)
    sp.add_argument("--grid", type=int, default=50, help="number of rows")
    sp.set_defaults(func=cmd_bec, seed=None)

    sp = common(sub.add_parser("simulate", help="per-seed soft-covering / exact-epsilon experiment"))
    sp.add_argument("--triple", required=True, help='triple JSON {"pU", "pXgU", "pYgU"}')
    sp.add_argument("--r1", type=float)
    sp.add_argument("--r2", type=float, default=0.0)
    sp.add_argument("--n", default="2,3,4", help="comma-separated block lengths")
    sp.add_argument("--seeds", type=int, default=50)
    sp.add_argument("--metric", choices=("epsilon", "tv-x", "tv-xy"), default="epsilon",
                    help="epsilon: exact induced TV; tv-x / tv-xy: soft-covering TV of the flat codebook")
    sp.add_argument("--cap-enum", type=int, default=CAP_ENUM)
    sp.add_argument("--cap-words", type=int, default=CAP_WORDS)
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("draw", help="draw and serialize one codebook"))
    sp.add_argument("--triple", required=True)
    sp.add_argument("--r1", type=float)
    sp.add_argument("--r2", type=float, default=0.0)
    sp.add_argument("--n", default="2")
    sp.add_argument("--cap-words", type=int, default=CAP_WORDS)
    sp.set_defaults(func=cmd_draw)

    sp = common(sub.add_parser("game", help="rate versus payoff-floor curve"))
    sp.add_argument("--game", required=True, help='game JSON {"sizes", "payoff"}')
    sp.add_argument("--theta-grid", required=True)
    sp.add_argument("--certs")
    sp.set_defaults(func=cmd_game)

    sp = common(sub.add_parser("converse", help="converse-chain report for a serialized code"), seed=False)
    sp.add_argument("--codebook", required=True)
    sp.add_argument("--triple", required=True)
    sp.add_argument("--cap-enum", type=int, default=CAP_ENUM)
    sp.set_defaults(func=cmd_converse, seed=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChansimError as exc:
        print(f"chansim {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
