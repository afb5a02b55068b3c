"""Command-line front end.

Exit codes: 0 success (accepted, no flags), 1 failure (rejected, flagged,
harness mismatch), 2 usage or input errors.  Every command prints one summary
line, either ``key=value`` pairs or a JSON object with ``--format structured``.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path
from typing import Sequence

from .cards import CardError, isqrt_exact
from .config import ProtocolConfig
from .fixtures import sample_puzzle, sample_solution, honest_fixture
from .grid import GridError, read_grid
from .mutations import MUTATIONS, run_mutant
from .plan import expected_counts
from .protocol import run_honest
from .transcript import Transcript, TranscriptError
from .verifier import replay

SEED_ENV = "CARDSUDOKU_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def format_summary(fields: dict, style: str) -> str:
    if style == "structured":
        return json.dumps(fields, sort_keys=False)
    parts = []
    for k, v in fields.items():
        if isinstance(v, bool):
            v = str(v).lower()
        elif v is None:
            v = "-"
        parts.append(f"{k}={v}")
    return " ".join(parts)


def parse_summary(line: str) -> dict:
    """Inverse of :func:`format_summary` for either style."""
    line = line.strip()
    if line.startswith("{"):
        return json.loads(line)
    out: dict = {}
    for part in line.split(" "):
        k, _, v = part.partition("=")
        if v in ("true", "false"):
            out[k] = v == "true"
        elif v == "-":
            out[k] = None
        else:
            try:
                out[k] = int(v)
            except ValueError:
                try:
                    out[k] = float(v)
                except ValueError:
                    out[k] = v
    return out


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _config(args: argparse.Namespace, n: int | None = None) -> ProtocolConfig:
    try:
        return ProtocolConfig(n or args.n, args.method.upper(), args.optimized, args.seed)
    except CardError as e:
        raise UsageError(str(e)) from None


def _fixture(args: argparse.Namespace, n: int):
    if getattr(args, "puzzle", None):
        if not getattr(args, "solution", None):
            raise UsageError("--puzzle needs --solution")
        return _read(args.puzzle), _read(args.solution)
    if n == 9:
        return sample_puzzle(), sample_solution()
    return honest_fixture(n, args.seed)


def _read(path: str):
    try:
        return read_grid(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except GridError as e:
        raise UsageError(f"{path}: {e}") from None


def cmd_verify(args: argparse.Namespace) -> int:
    puzzle, claimed = _read(args.puzzle), _read(args.solution)
    if puzzle.n != claimed.n:
        raise UsageError(f"puzzle is {puzzle.n}x{puzzle.n}, solution is {claimed.n}x{claimed.n}")
    config = _config(args, puzzle.n)
    verdict, transcript = run_honest(puzzle, claimed, config)
    if args.trace:
        transcript.write(args.trace)
    s = verdict.stats
    fields = {
        "verdict": "accepted" if verdict.accepted else "rejected",
        "cards": s.cards,
        "shuffles": s.shuffles,
        "check": verdict.failed_check,
    }
    print(format_summary(fields, args.format))
    if not verdict.accepted:
        print(f"reason: {verdict.rejection_reason}", file=sys.stderr)
    return EXIT_OK if verdict.accepted else EXIT_FAIL


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        isqrt_exact(args.n)
    except CardError as e:
        raise UsageError(str(e)) from None
    config = _config(args)
    cards, shuffles = expected_counts(config)
    fields: dict = {"cards": cards, "shuffles": shuffles}
    ok = True
    if args.simulate:
        puzzle, solution = _fixture(args, args.n)
        verdict, _ = run_honest(puzzle, solution, config)
        ok = verdict.accepted and verdict.stats.shuffles == shuffles and verdict.stats.cards == cards
        fields.update(measured_cards=verdict.stats.cards, measured_shuffles=verdict.stats.shuffles, match=ok)
    print(format_summary(fields, args.format))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_zk_test(args: argparse.Namespace) -> int:
    from .zk import (
        SampleTooSmall,
        check_sample_size,
        compare_counts,
        core_statistics,
        default_statistics,
        real_transcripts,
        simulated_transcripts,
        tally,
    )

    config = _config(args)
    runs = args.runs
    core = core_statistics(config)
    try:
        check_sample_size(config, core, runs)
    except SampleTooSmall as e:
        raise UsageError(f"sample too small: {e}") from None
    stats = default_statistics(config, runs)
    puzzle, solution = _fixture(args, config.n)
    base = args.seed
    real = tally(real_transcripts(puzzle, solution, config, range(base + 1, base + runs + 1), rigged=args.rigged), stats)
    sim = tally(simulated_transcripts(puzzle, config, range(base + runs + 1, base + 2 * runs + 1)), stats)
    report = compare_counts(config, stats, real, sim)
    if args.report:
        Path(args.report).write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    flagged = report.flagged
    fields = {"runs": runs, "statistics": len(stats), "flagged": len(flagged), "names": ",".join(flagged) or None}
    print(format_summary(fields, args.format))
    return EXIT_FAIL if flagged else EXIT_OK


def cmd_soundness_test(args: argparse.Namespace) -> int:
    config = _config(args)
    puzzle, solution = _fixture(args, config.n)
    kinds = list(MUTATIONS)
    rejected = total = accepted = 0
    failures = []
    for seed in range(args.seed, args.seed + args.seeds):
        cfg = config.with_seed(seed)
        honest, _ = run_honest(puzzle, solution, cfg, check_rows=not args.disable_row_check)
        accepted += honest.accepted
        for kind in kinds:
            total += 1
            verdict = run_mutant(puzzle, solution, cfg, kind, check_rows=not args.disable_row_check)
            if verdict.accepted:
                failures.append(f"{kind}@{seed}")
            else:
                rejected += 1
    ok = rejected == total and accepted == args.seeds
    fields = {
        "rejected": f"{rejected}/{total}",
        "accepted": f"{accepted}/{args.seeds}",
        "ok": ok,
    }
    print(format_summary(fields, args.format))
    for f in failures[:10]:
        print(f"accepted mutant: {f}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_trace(args: argparse.Namespace) -> int:
    if args.replay:
        try:
            transcript = Transcript.read(args.replay)
        except FileNotFoundError:
            raise UsageError(f"no such file: {args.replay}") from None
        except (TranscriptError, json.JSONDecodeError, KeyError) as e:
            raise UsageError(f"{args.replay}: {e}") from None
        verdict = replay(transcript)
    else:
        config = _config(args)
        if args.simulate:
            from .zk import simulate_transcript

            puzzle = _read(args.puzzle) if args.puzzle else _fixture(args, config.n)[0]
            config = _config(args, puzzle.n)
            transcript = simulate_transcript(puzzle, config, random.Random(f"sim/{config.seed}"))
            verdict = replay(transcript)
        else:
            puzzle, solution = _fixture(args, config.n)
            config = _config(args, puzzle.n)
            verdict, transcript = run_honest(puzzle, solution, config)
        text = transcript.dumps()
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
            return EXIT_OK if verdict.accepted else EXIT_FAIL
    fields = {
        "verdict": "accepted" if verdict.accepted else "rejected",
        "events": len(transcript),
        "shuffles": verdict.stats.shuffles,
    }
    print(format_summary(fields, args.format))
    return EXIT_OK if verdict.accepted else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--method", choices=["a", "b", "A", "B"], default="b")
    common.add_argument(
        "--optimized",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="use the optimized variant (default); --no-optimized for the plain one",
    )
    common.add_argument("--unoptimized", dest="optimized", action="store_false", help="same as --no-optimized")
    common.add_argument("--seed", type=int, default=seed, help=f"run seed (default ${SEED_ENV} or 0)")
    common.add_argument("--format", choices=["plain", "structured"], default="plain")

    p = argparse.ArgumentParser(prog="cardsudoku", description="Card-based zero-knowledge Sudoku verification")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run the protocol on a puzzle and claimed solution")
    v.add_argument("--puzzle", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--trace", help="write the transcript here")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", parents=[common], help="closed-form card and shuffle counts")
    s.add_argument("--n", type=int, default=9)
    s.add_argument("--simulate", action="store_true", help="also count an instrumented honest run")
    s.set_defaults(func=cmd_stats)

    z = sub.add_parser("zk-test", parents=[common], help="compare real and simulated verifier views")
    z.add_argument("--n", type=int, default=9)
    z.add_argument("--runs", type=int, default=6000)
    z.add_argument("--report")
    z.add_argument("--rigged", action="store_true", help="debug: leak x1's row to test the harness")
    z.add_argument("--puzzle")
    z.add_argument("--solution")
    z.set_defaults(func=cmd_zk_test)

    t = sub.add_parser("soundness-test", parents=[common], help="mutation battery plus honest controls")
    t.add_argument("--n", type=int, default=9)
    t.add_argument("--seeds", type=int, default=100)
    t.add_argument("--disable-row-check", action="store_true", help="debug: break the verifier on purpose")
    t.add_argument("--puzzle")
    t.add_argument("--solution")
    t.set_defaults(func=cmd_soundness_test)

    r = sub.add_parser("trace", parents=[common], help="export or replay a transcript")
    r.add_argument("--n", type=int, default=9)
    r.add_argument("--puzzle")
    r.add_argument("--solution")
    r.add_argument("--simulate", action="store_true", help="export a simulated transcript instead")
    r.add_argument("--replay", help="recompute the verdict of a saved transcript")
    r.add_argument("--out")
    r.set_defaults(func=cmd_trace)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
