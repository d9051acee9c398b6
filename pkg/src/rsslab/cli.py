"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 verification failure.
Set ``RSS_LAB_THREADS`` to cap the number of worker processes.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Iterable, Sequence

from . import bounds, montecarlo
from .oracle import MAX_BRUTE_FORCE_N, oracle_check

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def summary_path(path: Path) -> Path:
    return path.with_name(path.stem + ".summary" + (path.suffix or ".csv"))


def _epsilon(text: str) -> float:
    v = float(text)
    if not 0 < v < 1 / 3:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1/3), got {text}")
    return v


def _beta(text: str) -> float:
    v = float(text)
    if not 0 < v < 1 / 8:
        raise argparse.ArgumentTypeError(f"beta must lie in (0, 1/8), got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= montecarlo.MASK64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _horizon_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad horizon list {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("horizon list needs non-negative integers")
    return values


def cmd_simulate(args) -> int:
    config = montecarlo.TrialConfig(
        args.epsilon, args.horizon, args.trials, args.seed, keep_snapshots=args.keep_snapshots
    )
    reports = montecarlo.run_trials(config)
    traces = csv_text(
        ["trial", "t", "v_t"],
        ((r.index, t, float(v)) for r in reports for t, v in enumerate(r.trace)),
    )
    summary = csv_text(
        ["trial", "tau1", "tau2", "tau", "censored", "eps_covered", "two_eps_covered"],
        (
            (r.index, r.times.tau1, r.times.tau2, r.times.tau, r.times.censored, r.eps_covered, r.two_eps_covered)
            for r in reports
        ),
    )
    if args.csv is None:
        emit(summary, None)
    else:
        emit(traces, args.csv)
        emit(summary, summary_path(args.csv))
    covered = sum(r.two_eps_covered for r in reports)
    print(f"{config.trials} trials, eps={config.epsilon}, n={config.horizon}: "
          f"2eps-covered in {covered}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    _, growth, exits = montecarlo.verify_state_bank(
        args.epsilon, args.seed, args.beta, args.replays, args.states_per_level
    )
    config = montecarlo.TrialConfig(args.epsilon, args.horizon, args.trials, args.seed)
    reports = montecarlo.run_trials(config)
    rows = montecarlo.estimate_tau_tails(config, args.beta, reports)
    tails = montecarlo.tail_reports(rows, config.trials, montecarlo.censored_counts(reports))
    checks = growth + exits + tails
    emit(
        csv_text(
            ["check", "param_t_or_state", "empirical", "stderr", "bound", "applicable", "violation"],
            ((c.check, c.label, c.point, c.stderr, c.bound, c.applicable, c.violation) for c in checks),
        ),
        args.csv,
    )
    bad = [c for c in checks if c.violation]
    print(f"{len(checks)} checks ({sum(c.applicable for c in checks)} applicable), "
          f"{len(bad)} violations", file=sys.stderr)
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_coverage(args) -> int:
    curve = montecarlo.coverage_curve(args.epsilon, args.horizon_list, args.trials, args.seed)
    emit(
        csv_text(
            ["n", "coverage_fraction", "ci_lo", "ci_hi", "trials"],
            ((int(c.label.split("=")[1]), c.point, c.ci_lo, c.ci_hi, c.n_samples) for c in curve),
        ),
        args.csv,
    )
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    report = oracle_check(args.max_n, args.cases, args.seed)
    print(
        f"{report.instances} instances, {report.queries} queries: "
        f"{report.membership_mismatches} membership mismatches, "
        f"{report.reconstruction_failures}/{report.reconstructions} failed reconstructions, "
        f"{report.grid_mismatches}/{report.grid_queries} grid mismatches",
        file=sys.stderr,
    )
    for line in report.failures[:10]:
        print("  " + line, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rss-lab", description="Random subset-sum process lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run trials and write volume traces")
    p.add_argument("--epsilon", type=_epsilon, required=True)
    p.add_argument("--horizon", type=_non_negative, required=True)
    p.add_argument("--trials", type=_positive, default=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--keep-snapshots", action="store_true")
    p.add_argument("--csv", type=Path, help="trace CSV path; the summary goes next to it as *.summary.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-bounds", help="check the growth, exit and tail bounds empirically")
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--beta", type=_beta, default=bounds.DEFAULT_BETA)
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--horizon", type=_non_negative, default=200)
    p.add_argument("--replays", type=_positive, default=montecarlo.DEFAULT_REPLAYS)
    p.add_argument("--states-per-level", type=_positive, default=5)
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("coverage", help="2-eps coverage probability per horizon")
    p.add_argument("--epsilon", type=_epsilon, required=True)
    p.add_argument("--horizon-list", type=_horizon_list, required=True)
    p.add_argument("--trials", type=_positive, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("oracle-check", help="compare against brute-force enumeration")
    p.add_argument("--max-n", type=_positive, default=12)
    p.add_argument("--cases", type=_positive, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "oracle-check" and args.max_n > MAX_BRUTE_FORCE_N:
        parser.error(f"--max-n must be at most {MAX_BRUTE_FORCE_N}")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"rss-lab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
