"""btcvote command line: run scenarios, audit transcripts, print census tables.

Exit codes: 0 success, 1 input or verification failure, 2 protocol abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import audit
from .errors import ConfigError
from .sim import dump_transcript, load_config, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_ABORT = 0, 1, 2


def _load_transcript(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_run(config_path: str, out_path: str, seed: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
        if seed is not None:
            try:
                cfg = replace(cfg, master_seed=bytes.fromhex(seed))
            except ValueError:
                raise ConfigError("seed", "must be a hex string") from None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_FAIL
    transcript = run_scenario(cfg)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_transcript(transcript))
    print(f"# outcome: {audit.census(transcript)['outcome']}")
    print(f"# accepted_transactions: {transcript['accepted_transactions']}")
    return EXIT_ABORT if transcript["outcome"]["kind"] == "aborted" else EXIT_OK


def cmd_verify(transcript_path: str) -> int:
    try:
        tr = _load_transcript(transcript_path)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"# first failing check: read ({exc})")
        return EXIT_FAIL
    results = audit.verify_transcript(tr) if isinstance(tr, dict) else [
        audit.CheckResult("schema", False, "transcript is not a JSON object")
    ]
    for r in results:
        print(f"{r.name}: {'PASS' if r.ok else 'FAIL'}" + (f" ({r.detail})" if r.detail else ""))
    failed = [r for r in results if not r.ok]
    if failed:
        print(f"# first failing check: {failed[0].name}")
        return EXIT_FAIL
    print("# all checks passed")
    return EXIT_OK


def cmd_census(transcript_path: str) -> int:
    try:
        tr = _load_transcript(transcript_path)
        row = audit.census(tr)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"cannot read transcript: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"# transcript: {transcript_path}")
    print(f"# format: {tr.get('format')}")
    print(f"{'n':>4} {'m':>4} {'t':>4} {'accepted_txs':>13}  outcome")
    print(f"{row['n']:>4} {row['m']:>4} {row['t']:>4} {row['accepted_txs']:>13}  {row['outcome']}")
    print()
    print(f"{'identity':<14} {'delta':>8}")
    for name, delta in row["deltas"].items():
        print(f"{name:<14} {delta:>+8d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btcvote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario config and write its transcript")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", help="hex master seed overriding the config")

    ver = sub.add_parser("verify", help="audit a transcript without re-running the protocol")
    ver.add_argument("--transcript", required=True)

    cen = sub.add_parser("census", help="print the transaction census of a transcript")
    cen.add_argument("--transcript", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "verify":
        return cmd_verify(args.transcript)
    return cmd_census(args.transcript)


if __name__ == "__main__":
    sys.exit(main())
