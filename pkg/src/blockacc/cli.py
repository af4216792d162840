"""Command-line front end.

Every run serializes its full effective configuration (defaults included)
into the output header, so any emitted file can be reproduced from its own
metadata.  Output is CSV with '#'-prefixed metadata lines or JSON with a
{meta, rows} object; numbers carry 12 significant digits.  Exit codes:
0 success, 2 usage error, 1 computation error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import delta_min, gvb_delta, spectral_curve
from .codec import CodecSpec, encode_frame
from .enumerator import EnsembleSpec, dmin_bound_curve, ensemble_avg_we_table
from .linear_code import code_from_token, weight_enumerator
from .simulate import (DEFAULT_IA_GRID, ber_curve, bpsk_capacity_threshold,
                       exit_curves, threshold_search, uncoded_ber_curve)

__all__ = ["parse_and_dispatch", "main", "emit_table"]

OUTDIR_ENV = "BLOCKACC_OUTDIR"


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit_table(rows: list[dict], meta: dict, fmt: str = "csv", out: str | None = None):
    """Write records as CSV (with '#' metadata header) or a JSON object."""
    if fmt == "csv":
        lines = [f"# blockacc {meta.get('version', __version__)}"]
        lines.append("# config: " + json.dumps(meta.get("config", {}), sort_keys=True))
        if rows:
            cols = list(rows[0].keys())
            lines.append(",".join(cols))
            for row in rows:
                lines.append(",".join(_fmt(row[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        text = json.dumps({"meta": meta, "rows": rows}, sort_keys=True, indent=1,
                          default=_fmt) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _resolve_out(path: str | None) -> str | None:
    import os

    if path is None:
        return None
    outdir = os.environ.get(OUTDIR_ENV)
    p = Path(path)
    if outdir and not p.is_absolute():
        return str(Path(outdir) / p)
    return str(p)


def _parse_rate(text: str) -> float:
    frac = Fraction(text)
    if not 0 < frac < 1:
        raise ValueError(f"rate must be in (0, 1), got {text}")
    return float(frac)


def _parse_floats(text: str) -> list[float]:
    """Comma list 'a,b,c' or range 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(np.arange(start, stop + 0.5 * step, step))
    return [float(t) for t in text.split(",")]


def _parse_bits(text: str) -> np.ndarray:
    if text.startswith("@"):
        text = Path(text[1:]).read_text().strip()
    text = text.strip()
    if text.startswith(("0x", "0X")):
        nbits = 4 * (len(text) - 2)
        value = int(text, 16)
        return np.array([(value >> (nbits - 1 - i)) & 1 for i in range(nbits)], dtype=np.uint8)
    if set(text) - {"0", "1"}:
        raise ValueError("message must be 0/1 text or 0x-prefixed hex")
    return np.array([int(c) for c in text], dtype=np.uint8)


def _add_ensemble_args(sub, need_l=True):
    sub.add_argument("--outer", required=True,
                     help="outer code token: hamming:m | ehamming:m | rep:n | custom:<path>")
    sub.add_argument("--stages", type=int, default=2, choices=(1, 2),
                     help="number of accumulate stages")
    if need_l:
        sub.add_argument("--L", type=int, default=1, help="outer codewords per frame")


def _add_output_args(sub):
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--format", default="csv", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockacc",
        description="Ensemble analysis and decoding of block-accumulate codes")
    parser.add_argument("--version", action="version", version=f"blockacc {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("code-we", help="exact weight enumerator of an outer code")
    s.add_argument("--outer", required=True)
    s.add_argument("--method", default="auto", choices=("auto", "closed-form", "brute-force"))
    _add_output_args(s)

    s = subs.add_parser("ensemble-we", help="ensemble-average log weight enumerator")
    _add_ensemble_args(s)
    s.add_argument("--max-weight", type=int, default=None)
    _add_output_args(s)

    s = subs.add_parser("dmin-bound", help="probabilistic minimum-distance bound vs N")
    _add_ensemble_args(s, need_l=False)
    s.add_argument("--N-list", required=True, help="comma list of block lengths")
    s.add_argument("--prob-target", type=float, default=0.5)
    _add_output_args(s)

    s = subs.add_parser("spectral-shape", help="asymptotic spectral shape r(delta)")
    _add_ensemble_args(s, need_l=False)
    s.add_argument("--deltas", default="0:0.5:0.01", help="comma list or start:stop:step")
    s.add_argument("--grid-points", type=int, default=401)
    _add_output_args(s)

    s = subs.add_parser("delta-min", help="minimum-distance growth rate")
    _add_ensemble_args(s, need_l=False)
    s.add_argument("--epsilon", type=float, default=1e-6)
    s.add_argument("--resolution", type=float, default=1e-5)
    _add_output_args(s)

    s = subs.add_parser("gvb", help="normalized Gilbert-Varshamov distance")
    s.add_argument("--rate", required=True, help="code rate, fraction (26/31) or decimal")
    _add_output_args(s)

    s = subs.add_parser("encode", help="encode a message frame")
    _add_ensemble_args(s)
    s.add_argument("--message", required=True, help="K bits as 0/1 text, 0x hex, or @file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dump-perm", default=None, help="write interleaver permutations as JSON")
    _add_output_args(s)

    s = subs.add_parser("ber", help="Monte-Carlo bit error rate curve")
    _add_ensemble_args(s)
    s.add_argument("--ebn0", required=True, help="Eb/N0 dB list or range")
    s.add_argument("--min-frame-errors", type=int, default=100)
    s.add_argument("--max-frames", type=int, default=10000)
    s.add_argument("--max-iterations", type=int, default=30)
    s.add_argument("--uncoded", action="store_true", help="uncoded BPSK reference mode")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    _add_output_args(s)

    s = subs.add_parser("exit", help="EXIT transfer curves at one Eb/N0")
    _add_ensemble_args(s)
    s.add_argument("--ebn0", type=float, required=True)
    s.add_argument("--ia-grid", default=None, help="a-priori MI list or range")
    s.add_argument("--samples", type=int, default=4)
    s.add_argument("--inner-activations", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    _add_output_args(s)

    s = subs.add_parser("threshold", help="iterative convergence threshold search")
    _add_ensemble_args(s, need_l=False)
    s.add_argument("--window", required=True, help="dB window 'lo,hi'")
    s.add_argument("--step", type=float, default=0.05)
    s.add_argument("--target-N", type=int, default=8184)
    s.add_argument("--frames", type=int, default=4)
    s.add_argument("--inner-activations", type=int, default=10)
    s.add_argument("--activation-sensitivity", action="store_true",
                   help="re-measure the tunnel margin at 5 and 20 activations")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    _add_output_args(s)

    s = subs.add_parser("capacity", help="BPSK constrained-capacity Eb/N0 threshold")
    s.add_argument("--rate", required=True)
    _add_output_args(s)

    return parser


def _config_dict(args: argparse.Namespace) -> dict:
    # The destination path is a side channel, not part of the computation:
    # identical configs must produce byte-identical files anywhere.
    skip = {"command", "out", "dump_perm"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _meta(args: argparse.Namespace) -> dict:
    return {"version": __version__, "command": args.command, "config": _config_dict(args)}


def _dispatch(args: argparse.Namespace) -> int:
    out = _resolve_out(args.out) if hasattr(args, "out") else None
    fmt = getattr(args, "format", "csv")

    if args.command == "code-we":
        code = code_from_token(args.outer)
        spectrum = weight_enumerator(code, args.method)
        rows = [{"h": h, "A_h": c} for h, c in enumerate(spectrum.counts)]
        emit_table(rows, _meta(args), fmt, out)
        return 0

    if args.command == "ensemble-we":
        ens = EnsembleSpec(code_from_token(args.outer), args.L, args.stages)
        table = ensemble_avg_we_table(ens, args.max_weight)
        rows = [{"h": h, "ln_avg_A_h": float(v)} for h, v in enumerate(table)]
        emit_table(rows, _meta(args), fmt, out)
        return 0

    if args.command == "dmin-bound":
        outer = code_from_token(args.outer)
        n_list = [int(float(t)) for t in args.N_list.split(",")]
        bounds = dmin_bound_curve(outer, args.stages, n_list, args.prob_target)
        rows = [{"N": b.N, "d_star": b.d_star, "ln_bound_at_d_star": b.ln_bound_at_d_star}
                for b in bounds]
        emit_table(rows, _meta(args), fmt, out)
        return 0

    if args.command == "spectral-shape":
        ens = EnsembleSpec(code_from_token(args.outer), 1, args.stages)
        curve = spectral_curve(ens, _parse_floats(args.deltas), grid_points=args.grid_points)
        rows = [{"delta": p.delta, "r_nats": p.r_nats, "beta0": p.beta0, "beta1": p.beta1}
                for p in curve.samples]
        emit_table(rows, _meta(args), fmt, out)
        return 0

    if args.command == "delta-min":
        ens = EnsembleSpec(code_from_token(args.outer), 1, args.stages)
        report = delta_min(ens, epsilon=args.epsilon, resolution=args.resolution)
        payload = {
            "ensemble": report.ensemble,
            "delta_min": report.delta_min,
            "delta_gv": report.delta_gv,
            "epsilon": report.epsilon,
            "resolution": report.resolution,
            "diagnostics": {k: v for k, v in report.diagnostics.items() if k != "evaluations"},
        }
        emit_table([payload], _meta(args), "json", out)
        return 0

    if args.command == "gvb":
        value = gvb_delta(_parse_rate(args.rate))
        if out is None and fmt == "csv":
            sys.stdout.write(f"{value:.12g}\n")
        else:
            emit_table([{"rate": args.rate, "delta_gv": value}], _meta(args), fmt, out)
        return 0

    if args.command == "encode":
        ens = EnsembleSpec(code_from_token(args.outer), args.L, args.stages)
        codec = CodecSpec.from_seed(ens, args.seed)
        message = _parse_bits(args.message)
        if message.size != ens.K:
            raise ValueError(f"message has {message.size} bits, expected K = {ens.K}")
        frame = encode_frame(codec, message)
        if args.dump_perm:
            perms = {"pi1": codec.pi1.permutation.tolist()}
            if codec.pi2 is not None:
                perms["pi2"] = codec.pi2.permutation.tolist()
            Path(_resolve_out(args.dump_perm)).write_text(json.dumps(perms))
        text = "".join(str(int(b)) for b in frame)
        if out is None:
            sys.stdout.write(text + "\n")
        else:
            Path(out).write_text(text + "\n")
        return 0

    if args.command == "ber":
        ebn0 = _parse_floats(args.ebn0)
        if args.uncoded:
            report = uncoded_ber_curve(ebn0, args.min_frame_errors, args.max_frames,
                                       seed=args.seed)
        else:
            ens = EnsembleSpec(code_from_token(args.outer), args.L, args.stages)
            codec = CodecSpec.from_seed(ens, args.seed)
            report = ber_curve(codec, ebn0, args.min_frame_errors, args.max_frames,
                               seed=args.seed, workers=args.workers,
                               max_iterations=args.max_iterations)
        emit_table(report.to_rows(), _meta(args), fmt, out)
        return 0

    if args.command == "exit":
        ens = EnsembleSpec(code_from_token(args.outer), args.L, args.stages)
        codec = CodecSpec.from_seed(ens, args.seed)
        ia = DEFAULT_IA_GRID if args.ia_grid is None else _parse_floats(args.ia_grid)
        outer_curve, inner_curve = exit_curves(codec, args.ebn0, ia, samples=args.samples,
                                               seed=args.seed,
                                               inner_activations=args.inner_activations)
        rows = [{"i_a": float(a), "i_e_outer": float(o), "i_e_inner": float(i)}
                for a, o, i in zip(outer_curve.i_a, outer_curve.i_e, inner_curve.i_e)]
        emit_table(rows, _meta(args), fmt, out)
        return 0

    if args.command == "threshold":
        outer = code_from_token(args.outer)
        window = tuple(_parse_floats(args.window))
        if len(window) != 2:
            raise ValueError("window must be 'lo,hi'")
        result = threshold_search(outer, args.stages, window, step=args.step,
                                  target_n=args.target_N, frames=args.frames,
                                  inner_activations=args.inner_activations,
                                  activation_sensitivity=args.activation_sensitivity,
                                  seed=args.seed)
        emit_table([result], _meta(args), "json", out)
        return 0

    if args.command == "capacity":
        rate = _parse_rate(args.rate)
        value = bpsk_capacity_threshold(rate)
        emit_table([{"rate": args.rate, "ebn0_db": value}], _meta(args), "json", out)
        return 0

    raise ValueError(f"unknown command {args.command!r}")


def parse_and_dispatch(argv=None) -> int:
    """Parse argv and run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _dispatch(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"blockacc: error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
