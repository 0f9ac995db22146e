"""Command-line interface: learn, evaluate, experiment, gap-curve, verify.

Exit codes: 0 success (and all requested criteria pass), 1 criterion failure,
2 malformed input (CSV/JSON) with line/column diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .analysis import run_suite
from .errors import InvalidInputError
from .harness import ExperimentConfig, build_sampler, gap_curve, run_experiment
from .learner import learn_reserve
from .orderstats import top_two_cdfs
from .revenue import ar_revenue


class DataError(Exception):
    """Malformed user input; maps to exit code 2."""


def load_samples_csv(path: str) -> np.ndarray:
    """Plain decimal CSV, one sample vector per line, optional header row."""
    rows: list[list[float]] = []
    width = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                row = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                bad = next(i for i, c in enumerate(cells) if not _is_float(c))
                raise DataError(
                    f"{path}:{lineno}:{bad + 1}: not a decimal value: {cells[bad].strip()!r}"
                ) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"{path}:{lineno}: expected {width} columns, found {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no sample rows found")
    return np.asarray(rows, dtype=float)


def _is_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _emit(payload: dict | list, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_learn(args) -> int:
    matrix = load_samples_csv(args.samples)
    override = args.beta_override if args.unsafe_test_hooks else None
    out = learn_reserve(matrix, delta=args.delta, beta_override=override)
    _emit(
        {
            "reserve": out.reserve,
            "beta": out.beta,
            "m": out.m,
            "n": out.n,
            "degenerate": out.degenerate,
        },
        args.out,
    )
    return 0


def _cmd_evaluate(args) -> int:
    spec = load_json(args.instance)
    _, inst = build_sampler(spec)
    if inst is None:
        raise DataError("evaluate needs a product instance (analytic top-two CDFs)")
    pair = top_two_cdfs(inst)
    revenue = ar_revenue(args.reserve, pair, tol=args.tol)
    _emit({"reserve": args.reserve, "revenue": revenue}, args.out)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(load_json(args.config))
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    report = run_experiment(cfg)
    _emit(report.to_dict(), args.out)
    if args.trial_csv:
        keys = sorted({k for rec in report.trials for k in rec})
        with open(args.trial_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(report.trials)
    return 0 if report.failure_count <= report.failure_threshold else 1


def _cmd_gap_curve(args) -> int:
    cfg = ExperimentConfig.from_dict(load_json(args.config))
    if args.seed is not None:
        cfg.master_seed = args.seed
    try:
        m_list = [int(x) for x in args.m_list.split(",") if x.strip()]
    except ValueError as exc:
        raise DataError(f"--m-list must be comma-separated integers: {args.m_list!r}") from exc
    rows = gap_curve(cfg, m_list)
    _emit(rows, args.out)
    return 0


def _cmd_verify(args) -> int:
    manifest = load_json(args.suite)
    if not isinstance(manifest, list):
        raise DataError(f"{args.suite}: suite manifest must be a JSON array of checks")
    reports = run_suite(manifest, seed=args.seed)
    payload = [r.to_dict() for r in reports]
    _emit(payload, args.out)
    failing = [r.name for r in reports if not r.passed and not r.skipped]
    if failing:
        print(f"FAILED: {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reservelearn",
        description="Learn and validate anonymous-reserve prices from samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a reserve price from a sample CSV")
    p.add_argument("--samples", required=True, help="CSV of sample vectors, one row each")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability")
    p.add_argument("--out", default=None, help="write the JSON result here instead of stdout")
    p.add_argument("--unsafe-test-hooks", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--beta-override", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(fn=_cmd_learn)

    p = sub.add_parser("evaluate", help="expected revenue of a reserve on an instance")
    p.add_argument("--reserve", type=float, required=True)
    p.add_argument("--instance", required=True, help="instance spec JSON")
    p.add_argument("--tol", type=float, default=1e-9, help="quadrature tolerance")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("experiment", help="run seeded Monte-Carlo trials of the learner")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel trial workers")
    p.add_argument("--trial-csv", default=None, help="also write per-trial rows as CSV")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("gap-curve", help="revenue gap vs sample count")
    p.add_argument("--config", required=True)
    p.add_argument("--m-list", required=True, help="comma-separated ascending sample counts")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_gap_curve)

    p = sub.add_parser("verify", help="run a manifest of lemma/fact checks")
    p.add_argument("--suite", required=True, help="JSON array of {check, instance, params}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
