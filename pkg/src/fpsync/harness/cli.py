"""Command line entry point.

On failure a single JSON line ``{"status": "error", "error": ..., "message": ...}`` is
written to stderr and the exit code is nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentSpec, load_config
from .sweeps import (run_crlb, run_mse_sweep, run_music_demo, run_simulate, run_theory_curves,
                     run_window_gallery, write_mse_csv)

COMMANDS = ("simulate", "mse-sweep", "windows", "theory", "crlb", "music-demo")
EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, EXIT_USAGE)


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"status": "error", "error": kind, "message": str(message)}) + "\n")
    raise SystemExit(code)


def _float_list(text):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty SNR list")
    return vals


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fpsync", description="Fingerprint-spectrum CFO/TO drift estimation experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="TOML or JSON experiment file")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="output file prefix")
    p.add_argument("--trials", type=int)
    p.add_argument("--snr", type=_float_list, help="comma separated SNRs in dB, e.g. --snr=-20,-10,0")
    p.add_argument("--estimator", help="comma separated: rectangular, hamming, hann, blackman, music")
    p.add_argument("--row-lock", action="store_true", help="search only the fingerprint row")
    p.add_argument("--q-convention", choices=("cdf", "tail"))
    return p


def _join_negative_lists(argv):
    """Lets ``--snr -20,-10`` through argparse by rewriting it as ``--snr=-20,-10``."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a == "--snr" and i + 1 < len(argv):
            out.append(f"--snr={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def resolve_spec(args) -> ExperimentSpec:
    spec = load_config(args.config) if args.config else ExperimentSpec()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["out"] = args.out
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.snr is not None:
        changes["snr_db"] = args.snr
    if args.estimator:
        changes["estimators"] = tuple(e.strip() for e in args.estimator.split(",") if e.strip())
    if args.row_lock:
        changes["row_lock"] = True
    if args.q_convention:
        changes["q_convention"] = args.q_convention
    try:
        return spec.with_(**changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run(args) -> list:
    spec = resolve_spec(args)
    if args.command == "mse-sweep":
        from ..spectrum import make_window
        for e in spec.estimators:
            if e != "music":
                make_window(e, 1)
        return write_mse_csv(spec.out, run_mse_sweep(spec))
    if args.command == "windows":
        return run_window_gallery(spec)
    if args.command == "theory":
        return run_theory_curves(spec)
    if args.command == "crlb":
        return run_crlb(spec)
    if args.command == "simulate":
        return run_simulate(spec)
    return run_music_demo(spec)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_lists(argv))
    try:
        paths = run(args)
    except ConfigError as exc:
        _fail("config", exc, EXIT_CONFIG)
    except (ValueError, RuntimeError, OSError, ArithmeticError) as exc:
        _fail(type(exc).__name__, exc, EXIT_RUNTIME)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
