"""Batch command-line front end.

    mixcoin run     --protocol coin-force --n 1000 --ell 16 --seed 1 --out runs.jsonl
    mixcoin attack  --protocol coin-force --strategy enforce-alice --target 0xbeef
    mixcoin replay  runs.jsonl
    mixcoin zkpk    sample|prove|verify|simulate ...
    mixcoin ot run  --m0 00ff --m1 ff00 --choice 1
    mixcoin sfe run --f and --x1 1 --x2 1 --mode composed

Exit codes: 0 success, 2 bad configuration or input file, 3 protocol abort
(with --strict), 4 replay mismatch, 5 attack impossible in this mode.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor

from .harness import FlavorMismatch, RewindingForbidden, first_difference
from .scenarios import ATTACKS, PROTOCOLS, ConfigError, RunConfig, load_transcripts, rep_seed, replay, run_one, summarize
from .zkpk import instance_to_text, sample_gi_instance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_MISMATCH = 4
EXIT_IMPOSSIBLE = 5


def _int(text: str) -> int:
    return int(text, 0)


def _hex(text: str) -> int:
    return int(text, 16)


def _common(p: argparse.ArgumentParser, protocol: bool = True) -> None:
    if protocol:
        p.add_argument("--protocol", default="coin-force", help=f"one of: {', '.join(PROTOCOLS)}")
    p.add_argument("--n", type=int, default=1, help="number of sessions")
    p.add_argument("--seed", type=_int, default=0, help="master seed")
    p.add_argument("--sigma", type=int, default=8)
    p.add_argument("--Sigma", type=int, default=None, help="must equal 4*sigma when given")
    p.add_argument("--kappa", type=int, default=128)
    p.add_argument("--ell", type=int, default=16, help="coin length in bits")
    p.add_argument("--field-bits", type=int, default=16, help="binary field GF(2^w)")
    p.add_argument("--vertices", type=int, default=3, help="graph size for zkpk")
    p.add_argument("--backend", choices=("ideal", "lwe"), default="ideal")
    p.add_argument("--mode", choices=("hybrid", "composed", "quantum-realistic"), default="hybrid")
    p.add_argument("--out", default=None, help="write transcripts (JSON lines) here")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    p.add_argument("--strict", action="store_true", help="exit 3 if any session aborted")
    p.add_argument("--workers", type=int, default=1, help="processes to spread repetitions over")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixcoin", description="coin flipping, commitments, ZK, OT and SFE sessions")
    sub = ap.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("run", help="run honest sessions"))

    p = sub.add_parser("attack", help="run a simulator or cheating strategy")
    _common(p)
    p.add_argument("--strategy", required=True, help=f"one of: {', '.join(ATTACKS)}")
    p.add_argument("--target", type=_hex, default=None, help="coin value to enforce, hex")

    p = sub.add_parser("replay", help="re-run transcripts and compare byte for byte")
    p.add_argument("file")

    zk = sub.add_parser("zkpk", help="graph isomorphism proofs of knowledge").add_subparsers(dest="action", required=True)
    p = zk.add_parser("sample", help="write a random instance with witness")
    p.add_argument("--vertices", type=int, default=4)
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("--out", required=True)
    for name, text in (("prove", "honest prover with the file's witness"),
                       ("simulate", "zero-knowledge simulator, witness unused")):
        p = zk.add_parser(name, help=text)
        _common(p, protocol=False)
        p.add_argument("--instance", required=True)
    p = zk.add_parser("verify", help="replay proof transcripts and report the verifier's judgment")
    p.add_argument("file")

    p = sub.add_parser("ot", help="oblivious transfer").add_subparsers(dest="action", required=True).add_parser("run")
    _common(p, protocol=False)
    p.add_argument("--m0", default=None, help="hex")
    p.add_argument("--m1", default=None, help="hex")
    p.add_argument("--choice", type=int, default=None)

    p = sub.add_parser("sfe", help="secure evaluation of xor/and").add_subparsers(dest="action", required=True).add_parser("run")
    _common(p, protocol=False)
    p.add_argument("--f", choices=("xor", "and"), default="xor")
    p.add_argument("--x1", type=_int, default=None)
    p.add_argument("--x2", type=_int, default=None)
    p.add_argument("--deviation", default=None, help="let Alice deviate: flip-message, wrong-randomness, substitute-input")
    return ap


def _config(args, **over) -> RunConfig:
    kw = dict(protocol=getattr(args, "protocol", "coin-force"), ell=args.ell, sigma=args.sigma, Sigma=args.Sigma,
              kappa=args.kappa, field_bits=args.field_bits, backend=args.backend, mode=args.mode,
              vertices=args.vertices, strategy=getattr(args, "strategy", None), target=getattr(args, "target", None))
    kw.update(over)
    return RunConfig(**kw)


def _execute(cfg: RunConfig, n: int, seed, workers: int):
    seeds = [rep_seed(seed, i) for i in range(n)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(run_one, [cfg] * n, seeds, chunksize=max(1, n // (4 * workers))))
    return [run_one(cfg, s) for s in seeds]


def _report(transcripts, args, out=None) -> int:
    out = out or sys.stdout
    summary = summarize(transcripts)
    if args.out:
        with open(args.out, "w") as fh:
            for t in transcripts:
                fh.write(t.to_jsonl())
    if args.json:
        print(json.dumps(summary, sort_keys=True), file=out)
    else:
        print(f"sessions {summary['sessions']}  aborts {summary['aborts']}  abort rate {summary['abort_rate']:.4f}", file=out)
        if summary["hit_rate"] is not None:
            print(f"hit rate {summary['hit_rate']:.4f} ({summary['hits']} hits)", file=out)
        print(f"distinct outcomes {summary['distinct_outcomes']}", file=out)
        for k, v in summary["histogram"].items():
            print(f"  {v:8d}  {k}", file=out)
    if args.strict and summary["aborts"]:
        return EXIT_ABORT
    return EXIT_OK


def _run(args, **over) -> int:
    cfg = _config(args, **over)
    try:
        transcripts = _execute(cfg, args.n, args.seed, args.workers)
    except (RewindingForbidden, FlavorMismatch) as err:
        print(f"attack failed: {err}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    return _report(transcripts, args)


def _replay_file(path: str, verbose_judgment: bool = False) -> int:
    try:
        with open(path) as fh:
            transcripts = load_transcripts(fh.read())
        redo = [replay(t) for t in transcripts]
    except (OSError, ValueError, KeyError, TypeError) as err:
        print(f"cannot replay {path}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    bad = 0
    for i, (t, r) in enumerate(zip(transcripts, redo)):
        diff = first_difference(t, r)
        line = f"session {i}: " + ("MATCH" if diff is None else f"MISMATCH at {diff}")
        if verbose_judgment:
            line += f"  verifier {t.output('B')}"
        print(line)
        bad += diff is not None
    return EXIT_MISMATCH if bad else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "attack":
            return _run(args)
        if args.command == "replay":
            return _replay_file(args.file)
        if args.command == "zkpk":
            if args.action == "sample":
                x, w = sample_gi_instance(args.vertices, random.Random(args.seed))
                with open(args.out, "w") as fh:
                    fh.write(instance_to_text(x, w))
                return EXIT_OK
            if args.action == "verify":
                return _replay_file(args.file, verbose_judgment=True)
            with open(args.instance) as fh:
                text = fh.read()
            strategy = "zk-simulate" if args.action == "simulate" else None
            return _run(args, protocol="zkpk", instance=text, strategy=strategy)
        if args.command == "ot":
            inputs = None
            if args.m0 is not None or args.m1 is not None or args.choice is not None:
                if args.m0 is None or args.m1 is None or args.choice is None:
                    raise ConfigError("give --m0, --m1 and --choice together")
                inputs = (args.m0, args.m1, args.choice)
            return _run(args, protocol="ot", inputs=inputs)
        if args.command == "sfe":
            inputs = None
            if args.x1 is not None or args.x2 is not None:
                if args.x1 is None or args.x2 is None:
                    raise ConfigError("give --x1 and --x2 together")
                inputs = (args.x1, args.x2)
            strategy = f"sfe-{args.deviation}" if args.deviation else None
            return _run(args, protocol=f"sfe-{args.f}", inputs=inputs, strategy=strategy)
    except (ConfigError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
