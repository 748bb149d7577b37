"""Command-line entry point: ``patternclt <subcommand> [flags]``.

Exit codes: 0 success, 1 a checked property failed on some sample (outputs
are still written), 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import check_combinatorial, drift_probe, find_tau_witness, witness_copies
from .decomposition import (MODES, NoWitnessError, decompose, estimate_mu_s, gluing_check,
                            make_block_config, write_trace_csv)
from .montecarlo import (distribution_moments, estimate_clt, exact_distribution, run_trials,
                         trial_rng)
from .patterns import PatternSyntaxError, follows, format_pattern, parse_pattern
from .subsequence import BRUTEFORCE_MAX_N, longest, longest_bruteforce

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    args: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        data = data.get("config", data)
        return cls(data["command"], dict(data.get("args", {})))


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pattern(args):
    if args.pattern is None:
        raise UsageError("--pattern is required")
    try:
        return parse_pattern(args.pattern)
    except (PatternSyntaxError, ValueError) as exc:
        raise UsageError(f"invalid pattern: {exc}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


def _emit(args, payload: dict, started: float) -> None:
    payload = dict(payload)
    payload["config"] = ExperimentConfig(args.command, _config_args(args)).to_json()
    if not args.deterministic:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()
        payload["wall_time_s"] = time.perf_counter() - started
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _write(args, text, suffix=".json")


def _write(args, text: str, suffix: str) -> None:
    if args.out:
        path = Path(args.out)
        if path.is_dir():
            path = path / f"{args.command}{suffix}"
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _config_args(args) -> dict:
    skip = {"command", "func", "config", "config_out", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_pattern(args, started):
    p = _pattern(args)
    info = {
        "pattern": format_pattern(p),
        "r": p.r,
        "k": p.k,
        "positions": {str(i): sorted("".join(map(str, perm)) for perm in s)
                      for i, s in enumerate(p.allowed)},
    }
    if args.format == "json":
        _emit(args, info, started)
    else:
        lines = [f"pattern: {info['pattern']}", f"r: {p.r}", f"k: {p.k}"]
        lines += [f"  {i}: {{{', '.join(v)}}}" for i, v in info["positions"].items()]
        _write(args, "\n".join(lines) + "\n", ".txt")
    return EXIT_OK


def _read_sequence(args) -> np.ndarray:
    if args.seq is not None and args.file is not None:
        raise UsageError("give either --seq or --file, not both")
    text = None
    if args.seq is not None:
        text = args.seq
    elif args.file is not None:
        text = Path(args.file).read_text()
    if text is not None:
        words = text.replace(",", " ").split()
        try:
            if all(w.lstrip("-").isdigit() for w in words):
                return np.array([int(w) for w in words], dtype=np.int64)
            return np.array([float(w) for w in words], dtype=np.float64)
        except ValueError as exc:
            raise UsageError(f"bad sequence: {exc}")
    if args.n is None:
        raise UsageError("give --seq, --file or --n for a random sequence")
    rng = trial_rng(args.seed, 0)
    if args.model == "permutation":
        return rng.permutation(args.n).astype(np.int64) + 1
    return rng.random(args.n)


def cmd_longest(args, started):
    p = _pattern(args)
    seq = _read_sequence(args)
    res = longest(seq, p)
    out = {"pattern": format_pattern(p), "n": int(seq.size), "length": res.length,
           "witness": list(res.witness)}
    code = EXIT_OK
    if args.oracle:
        if seq.size > BRUTEFORCE_MAX_N:
            raise UsageError(f"--oracle needs n <= {BRUTEFORCE_MAX_N}")
        ref = longest_bruteforce(seq, p).length
        out["oracle_length"] = ref
        out["oracle_agrees"] = ref == res.length
        if ref != res.length:
            code = EXIT_FINDING
    if args.format == "json":
        _emit(args, out, started)
    else:
        lines = [f"length: {res.length}", "witness: " + " ".join(map(str, res.witness))]
        if args.oracle:
            lines.append(f"oracle: {out['oracle_length']} ({'agrees' if out['oracle_agrees'] else 'DISAGREES'})")
        _write(args, "\n".join(lines) + "\n", ".txt")
    return code


def _tau_info(p):
    tau = find_tau_witness(p)
    if tau is None:
        return {"tau": None, "verified_copies": None, "recheck": None}
    m = witness_copies(p)
    recheck = {str(c): follows(tau.power(c), p) for c in (m, m + 1)}
    return {"tau": list(tau.tau), "verified_copies": tau.verified_copies, "recheck": recheck}


def cmd_check(args, started):
    p = _pattern(args)
    try:
        verdict = check_combinatorial(p, args.bound)
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        tau = _tau_info(p)
    except ValueError:
        tau = {"tau": None, "verified_copies": None, "recheck": None}
    _emit(args, {"pattern": format_pattern(p), "r": p.r, "k": p.k,
                 "combinatorial": verdict.to_dict(), **tau}, started)
    return EXIT_OK


def cmd_tau(args, started):
    p = _pattern(args)
    try:
        info = _tau_info(p)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(args, {"pattern": format_pattern(p), **info}, started)
    return EXIT_OK


def cmd_simulate(args, started):
    p = _pattern(args)
    if args.n is None:
        raise UsageError("--n is required")
    batch = run_trials(p, args.n, args.trials, args.seed, args.model, threads=args.threads)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "n", "length"])
        for i, length in enumerate(batch.lengths):
            w.writerow([i, args.n, int(length)])
        _write(args, buf.getvalue(), ".csv")
    else:
        m = batch.moments()
        _emit(args, {"pattern": format_pattern(p), "n": args.n, "trials": batch.trials,
                     "seed": args.seed, "model": args.model,
                     "mean": m.mean if m.count else None,
                     "variance": m.variance if m.count > 1 else None,
                     "lengths": batch.lengths.tolist()}, started)
    return EXIT_OK


def cmd_clt(args, started):
    p = _pattern(args)
    if not args.grid or len(args.grid) < 3:
        raise UsageError("--grid needs at least 3 values")
    final = args.final_trials or args.trials
    batches = [run_trials(p, n, final if n == max(args.grid) else args.trials, args.seed,
                          args.model, threads=args.threads) for n in args.grid]
    est = estimate_clt(batches)
    _emit(args, {"pattern": format_pattern(p), "seed": args.seed, "model": args.model,
                 "trials": args.trials, "final_trials": final,
                 "convention": "per element of the permutation", **est.summary()}, started)
    return EXIT_OK


def cmd_exact(args, started):
    p = _pattern(args)
    if args.n is None:
        raise UsageError("--n is required")
    try:
        dist = exact_distribution(p, args.n)
    except ValueError as exc:
        raise UsageError(str(exc))
    mean, var = distribution_moments(dist)
    _emit(args, {"pattern": format_pattern(p), "n": args.n,
                 "distribution": {str(k): v for k, v in sorted(dist.items())},
                 "total": sum(dist.values()), "mean": mean, "variance": var}, started)
    return EXIT_OK


def cmd_drift(args, started):
    p = _pattern(args)
    if not args.grid:
        raise UsageError("--grid is required")
    rep = drift_probe(p, args.grid, args.trials, args.seed, threads=args.threads)
    _emit(args, rep.to_dict(), started)
    return EXIT_OK


def cmd_decompose(args, started):
    p = _pattern(args)
    if args.n is None:
        raise UsageError("--n (number of blocks) is required")
    geometry = "paper" if args.mode == "planted" else args.mode
    try:
        cfg = make_block_config(p, geometry)
    except (NoWitnessError, ValueError) as exc:
        raise UsageError(str(exc))
    plant = args.plant
    if plant is None and args.mode == "planted":
        plant = [max(1, round(args.n * f)) for f in (0.2, 0.5, 0.8)]
        plant = sorted(set(plant))
    plant = plant or []
    mu_s, mu_s_se = estimate_mu_s(cfg, args.pilot_segments, seed=args.seed)
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    runs, finding = [], False
    for i in range(args.runs):
        rng = trial_rng(args.seed, i)
        try:
            run = decompose(cfg, args.n, rng, mu_s, plant_at=plant,
                            plant_tail=args.mode != "fat")
        except IndexError as exc:
            raise UsageError(str(exc))
        summary = run.summary()
        if run.terms is not None and not args.no_gluing:
            reports = [gluing_check(run.sample, run.scan, cfg, j).to_dict()
                       for j in range(run.scan.D_at(args.n))]
            summary["gluing"] = reports
            if not all(r["ok"] for r in reports):
                finding = True
        if run.identity_ok is False or summary["segment_bound_violations"]:
            finding = True
        summary["run"] = i
        runs.append(summary)
        if out_dir is not None:
            write_trace_csv(out_dir / f"trace_{i:04d}.csv", run.scan, run.seg)
    payload = {"pattern": format_pattern(p), "mode": args.mode, "n": args.n,
               "seed": args.seed, "mu_s": mu_s, "mu_s_stderr": mu_s_se,
               "mu_d": cfg.volume, "plant_at": plant, "runs": runs,
               "identity_ok": all(r["identity_ok"] is not False for r in runs),
               "finding": finding}
    if out_dir is not None:
        args_out, args.out = args.out, str(out_dir / "summary.json")
        _emit(args, payload, started)
        args.out = args_out
    else:
        _emit(args, payload, started)
    return EXIT_FINDING if finding else EXIT_OK


COMMANDS = {
    "pattern": (cmd_pattern, "parse, validate and print a pattern"),
    "longest": (cmd_longest, "longest following subsequence of one sequence"),
    "check": (cmd_check, "bounded combinatoriality check and tau witness"),
    "tau": (cmd_tau, "search for tau whose powers follow the pattern"),
    "simulate": (cmd_simulate, "Monte Carlo batch of longest lengths"),
    "clt": (cmd_clt, "fit mean/variance slopes and test normality"),
    "decompose": (cmd_decompose, "renewal decomposition with identity and gluing checks"),
    "exact": (cmd_exact, "exact length distribution over all permutations"),
    "drift-probe": (cmd_drift, "growth exponent of the mean length"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pattern", help="pattern text, e.g. UD or 'r=3; 0:123; ...'")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--n", type=int)
    common.add_argument("--grid", type=_int_list)
    common.add_argument("--mode", choices=MODES + ("planted",), default="fat")
    common.add_argument("--model", choices=("uniform", "permutation"), default="uniform")
    common.add_argument("--out", help="output file (or directory for decompose)")
    common.add_argument("--format", choices=("csv", "json", "text"), default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--deterministic", action="store_true",
                        help="omit timestamp and wall time so reruns are byte-identical")

    parser = argparse.ArgumentParser(
        prog="patternclt", description=__doc__.splitlines()[0],
        epilog=f"kernels: {kernels.BACKEND_NAME} (set {kernels.BACKEND_ENV}=numpy to switch)")
    parser.add_argument("--config", help="re-run a config emitted in a JSON output")
    parser.add_argument("--config-out", help="where a --config re-run writes its output")
    sub = parser.add_subparsers(dest="command")
    parsers = {}
    for name, (func, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        parsers[name] = sp
    parsers["longest"].add_argument("--seq", help="comma or space separated values")
    parsers["longest"].add_argument("--file", help="file of whitespace/comma separated values")
    parsers["longest"].add_argument("--oracle", action="store_true",
                                    help="cross-check against brute force (n <= 22)")
    parsers["check"].add_argument("--bound", type=int, default=8)
    parsers["clt"].add_argument("--final-trials", type=int,
                                help="trials at the largest grid point (default --trials)")
    parsers["decompose"].add_argument("--plant", type=_int_list,
                                      help="1-based blocks to plant events in")
    parsers["decompose"].add_argument("--runs", type=int, default=1)
    parsers["decompose"].add_argument("--pilot-segments", type=int, default=1000)
    parsers["decompose"].add_argument("--no-gluing", action="store_true")
    return parser


_DEFAULT_FORMAT = {"pattern": "text", "longest": "text", "simulate": "csv"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.config:
        try:
            cfg = ExperimentConfig.from_json(json.loads(Path(args.config).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            print(f"patternclt: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        base = parser.parse_args([cfg.command])
        for key, value in cfg.args.items():
            setattr(base, key, value)
        base.out = args.config_out
        args = base
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if args.format is None:
        args.format = _DEFAULT_FORMAT.get(args.command, "json")
    started = time.perf_counter()
    try:
        return args.func(args, started)
    except UsageError as exc:
        print(f"patternclt {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
