"""Command-line laboratory.

Subcommands:
  simulate       estimate a policy's competitive ratio (exact or Monte Carlo)
  verify         run one exact lemma verifier over a drawn instance
  game           the nested-bins coin game (minimax value, B-first value, MC)
  tight-example  the star-graph family whose ratio approaches 4
  mechanism      posted-price mechanism welfare/revenue estimation

Exit codes: 0 success, 1 a verification failed (lemma or game value), 2 usage
or input error, 3 a size cap was exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .analysis import (
    LEMMA_IDS,
    exhaustive_game_value,
    game_monte_carlo,
    verify_lemma,
)
from .core import CapExceededError, trial_rng
from .harness import (
    emit_report,
    estimate_ratio,
    render_report,
    tight_example,
)
from .instances import InstanceFormatError, load_instance
from .mechanism import (
    MECHANISM_CSV_HEADER,
    RegimeError,
    estimate_mechanism_ratios,
    mechanism_report_fields,
)
from .policies import POLICY_NAMES

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_CAP = 3


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_simulate(args) -> int:
    instance = load_instance(args.instance)
    report = estimate_ratio(
        instance,
        args.policy,
        adversary=args.adversary,
        trials=args.trials,
        seed=args.seed,
        mode=args.mode,
    )
    _write(render_report(report, args.format), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.lemma == "game-value":
        report = verify_lemma("game-value")
    else:
        if args.instance is None:
            raise InstanceFormatError("--instance", "this lemma needs an instance file")
        instance = load_instance(args.instance)
        realizations = instance.draw_realizations(trial_rng(args.seed, 0))
        report = verify_lemma(args.lemma, instance.structure, realizations)
    status = "PASS" if report.passed else "FAIL"
    line = (
        f"{report.lemma}: {status} lhs={report.lhs} rhs={report.rhs} "
        f"configurations={report.configurations}"
    )
    if report.detail:
        line += f" ({report.detail})"
    payload = {
        "lemma": report.lemma,
        "passed": report.passed,
        "lhs": str(report.lhs),
        "rhs": str(report.rhs),
        "configurations": report.configurations,
        "detail": report.detail,
    }
    if args.format == "json":
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _write(line + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED


def _cmd_game(args) -> int:
    expected = Fraction(1, 4)
    if args.mode == "mc":
        value: object = game_monte_carlo(args.rr, args.rb, args.trials, args.seed)
        passed = True
    else:
        strategy = "optimal" if args.mode == "optimal" else "b-first"
        exact = exhaustive_game_value(args.rr, args.rb, strategy)
        value = f"{exact.numerator}/{exact.denominator}"
        passed = exact == expected
    payload = {
        "rr": args.rr,
        "rb": args.rb,
        "mode": args.mode,
        "p2_win": value,
        "expected": "1/4",
    }
    if args.format == "json":
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _write(
            f"game rr={args.rr} rb={args.rb} mode={args.mode} p2_win={value}\n",
            args.out,
        )
    return EXIT_OK if passed else EXIT_VERIFICATION_FAILED


def _cmd_tight_example(args) -> int:
    report = tight_example(args.k, trials=args.trials, seed=args.seed)
    _write(render_report(report, args.format), args.out)
    return EXIT_OK


def _cmd_mechanism(args) -> int:
    instance = load_instance(args.instance)
    report = estimate_mechanism_ratios(
        instance, args.policy, trials=args.trials, seed=args.seed,
        regime=args.regime,
    )
    fields = mechanism_report_fields(report)
    if args.format == "json":
        _write(json.dumps(fields, indent=2) + "\n", args.out)
    else:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(MECHANISM_CSV_HEADER)
        writer.writerow([fields[k] for k in MECHANISM_CSV_HEADER])
        _write(buf.getvalue(), args.out)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags, accepted before or after the subcommand."""
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument(
        "--seed", type=int, help="master seed",
        **({"default": d} if suppress else {"default": 0}),
    )
    parser.add_argument(
        "--trials", type=int, help="Monte Carlo trials",
        **({"default": d} if suppress else {"default": 10000}),
    )
    parser.add_argument(
        "--out", help="output path (default stdout)",
        **({"default": d} if suppress else {"default": None}),
    )
    parser.add_argument(
        "--format", choices=("csv", "json"),
        **({"default": d} if suppress else {"default": "json"}),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sspi-lab",
        description="Single-sample prophet inequality laboratory",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sub(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_common(p, suppress=True)
        return p

    p = add_sub("simulate", "competitive-ratio estimation")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True, choices=POLICY_NAMES)
    p.add_argument(
        "--adversary",
        choices=("fixed", "increasing", "random", "exhaustive-min"),
        default="increasing",
    )
    p.add_argument("--mode", choices=("mc", "exact"), default="mc")
    p.set_defaults(func=_cmd_simulate)

    p = add_sub("verify", "exact lemma verification")
    p.add_argument("--lemma", required=True, choices=LEMMA_IDS)
    p.add_argument("--instance", default=None)
    p.set_defaults(func=_cmd_verify)

    p = add_sub("game", "nested-bins coin game")
    p.add_argument("--rr", type=int, required=True)
    p.add_argument("--rb", type=int, required=True)
    p.add_argument("--mode", choices=("optimal", "exhaustive", "mc"), default="optimal")
    p.set_defaults(func=_cmd_game)

    p = add_sub("tight-example", "star-graph ratio experiment")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_cmd_tight_example)

    p = add_sub("mechanism", "posted-price mechanism estimation")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True, choices=POLICY_NAMES)
    p.add_argument("--regime", choices=("mhr", "iid-regular"), default=None)
    p.set_defaults(func=_cmd_mechanism)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InstanceFormatError, RegimeError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
