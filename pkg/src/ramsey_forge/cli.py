"""Command line: run, sweep, validate, traj."""
from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .core import ColoringFileError, ProcessConfig, read_coloring
from .pipeline import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, EXIT_USAGE, run_pipeline
from .telemetry import FAMILIES, SamplePlan
from .trajectories import ERRORS, table
from .validator import (
    CertificateError,
    IncompleteColoring,
    census,
    lower_bound_certificate,
    verify_45,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stop(value: str) -> int | None:
    """'natural' or 'max_steps=N' (a bare N also works)."""
    if value == "natural":
        return None
    raw = value.split("=", 1)[1] if value.startswith("max_steps=") else value
    try:
        steps = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --stop value {value!r}") from None
    if steps < 0:
        raise argparse.ArgumentTypeError("max_steps must be nonnegative")
    return steps


def _seeds(value: str) -> list[int]:
    """'1-10', '1,4,9' or a plain count N meaning 1..N."""
    out = []
    for part in value.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif "," in value:
            out.append(int(part))
        else:
            out.extend(range(1, int(part) + 1))
    return out


def _process_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of vertices (at least 4)")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--on-no-pair", choices=("terminate", "skip"), default="skip",
                   help="what Phase 1 does when a drawn triangle has no color pair")
    p.add_argument("--stop", type=_stop, default=None, metavar="natural|max_steps=N")
    p.add_argument("--checkpoint-every", type=int, default=0,
                   help="steps between telemetry snapshots (0: off)")
    p.add_argument("--phase2-budget", type=int, default=1_000_000,
                   help="resampling rounds per reserved-palette size")
    p.add_argument("--max-enlargements", type=int, default=None,
                   help="cap on reserved-palette growth (0 disables the fallback)")
    p.add_argument("--mode", choices=("auto", "exhaustive", "pairwise", "sampled"), default="auto")
    p.add_argument("--samples", type=int, default=32, help="telemetry samples per family")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ramsey-forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one full run")
    _process_flags(run)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", type=Path, default=Path("out"))

    sweep = sub.add_parser("sweep", help="many seeds, in parallel")
    _process_flags(sweep)
    sweep.add_argument("--seeds", type=_seeds, default=_seeds("1-10"),
                       help="'1-10', '3,5,8' or a count")
    sweep.add_argument("--out", type=Path, default=Path("sweep"))

    val = sub.add_parser("validate", help="check a coloring file")
    val.add_argument("path", type=Path)
    val.add_argument("--mode", choices=("auto", "exhaustive", "pairwise", "sampled"), default="auto")

    tr = sub.add_parser("traj", help="CSV table of the deterministic trajectories")
    tr.add_argument("--epsilon", type=float, default=0.1)
    tr.add_argument("--points", type=int, default=50)
    tr.add_argument("--lo", type=float, default=0.01)
    tr.add_argument("--hi", type=float, default=0.15)
    tr.add_argument("--n", type=float, default=None,
                    help="also emit log error widths for this n")
    tr.add_argument("--out", type=Path, default=None, help="file (default: stdout)")
    return parser


def _config(args, seed: int) -> ProcessConfig:
    try:
        return ProcessConfig(n=args.n, epsilon=args.epsilon, seed=seed,
                             on_no_pair=args.on_no_pair, max_steps=args.stop,
                             checkpoint_every=args.checkpoint_every,
                             phase2_budget=args.phase2_budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _plan(args) -> SamplePlan:
    return SamplePlan(m=max(1, args.samples), m_expensive=max(1, min(8, args.samples)))


def cmd_run(args) -> int:
    config = _config(args, args.seed)
    res = run_pipeline(config, out_dir=args.out, mode=args.mode, plan=_plan(args),
                       max_enlargements=args.max_enlargements)
    r = res.report
    print(f"n={config.n} seed={config.seed} colors_used={r['colors_used']} "
          f"palette={r['palette']['total']} enlargements={r['fallback_enlargements']} "
          f"violations={r['validation']['violations']} exit={res.exit_code}")
    return res.exit_code


def _sweep_one(job):
    args, seed = job
    config = _config(args, seed)
    res = run_pipeline(config, out_dir=args.out / f"seed_{seed}", mode=args.mode,
                       plan=_plan(args), max_enlargements=args.max_enlargements)
    per_family: dict[str, dict[int, list[float]]] = {}
    for rec in res.telemetry:
        if rec.predicted > 0 and rec.family in FAMILIES:
            per_family.setdefault(rec.family, {}).setdefault(rec.step, []).append(abs(rec.rel_dev))
    return seed, res.exit_code, res.report, per_family


def threads() -> int:
    cap = os.environ.get("RAMSEY_FORGE_THREADS")
    try:
        limit = int(cap) if cap else os.cpu_count() or 1
    except ValueError:
        limit = 1
    return max(1, limit)


def aggregate(results) -> dict:
    """Sweep summary; independent of the order in which seeds finished."""
    results = sorted(results, key=lambda r: r[0])
    runs = []
    pooled: dict[str, dict[int, list[float]]] = {}
    for seed, code, report, fams in results:
        runs.append({"seed": seed, "exit_code": code, "colors_used": report["colors_used"],
                     "colors_used_over_n": report["colors_used_over_n"],
                     "phase1_coverage": report["phase1_coverage"],
                     "fallback_enlargements": report["fallback_enlargements"]})
        for fam, by_step in fams.items():
            for stepi, devs in by_step.items():
                pooled.setdefault(fam, {}).setdefault(stepi, []).extend(devs)
    deviations = {fam: {str(s): statistics.median(v) for s, v in sorted(by_step.items())}
                  for fam, by_step in sorted(pooled.items())}
    return {"runs": runs, "median_abs_rel_dev": deviations,
            "worst_exit_code": max((r["exit_code"] for r in runs), default=0)}


def cmd_sweep(args) -> int:
    for seed in args.seeds:
        _config(args, seed)
    args.out.mkdir(parents=True, exist_ok=True)
    jobs = [(args, s) for s in args.seeds]
    workers = min(threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    agg = aggregate(results)
    (args.out / "aggregate.json").write_text(json.dumps(agg, indent=2) + "\n")
    for r in agg["runs"]:
        print(f"seed={r['seed']} colors_used/n={r['colors_used_over_n']:.4f} "
              f"coverage={r['phase1_coverage']:.4f} exit={r['exit_code']}")
    return agg["worst_exit_code"]


def cmd_validate(args) -> int:
    try:
        colors, _total = read_coloring(args.path)
    except (ColoringFileError, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    cen = census(colors)
    out = {"violations": None, "x0": cen.x0, "x1": cen.x1, "x2": cen.x2,
           "colors_used": cen.colors_used, "lb_slack": None}
    code = EXIT_OK
    try:
        out["violations"] = len(verify_45(colors, args.mode))
    except IncompleteColoring as exc:
        out["error"] = str(exc)
        code = EXIT_INVALID
    if code == EXIT_OK:
        try:
            out["lb_slack"] = lower_bound_certificate(colors).slack
        except CertificateError as exc:
            out["error"] = str(exc)
            code = EXIT_INVALID
        if out["violations"]:
            code = EXIT_INVALID
    print(json.dumps(out))
    return code


def cmd_traj(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be positive")
    if not 0 < args.epsilon < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    if not 0 <= args.lo <= args.hi < 1 / 6:
        raise UsageError("need 0 <= lo <= hi < 1/6")
    rows = table(args.epsilon, args.points, args.lo, args.hi, n=args.n)
    fields = ["t", "p", "r", "q", "y", "a", "c1", "c2", "c", "d", "z0", "z1", "z2"]
    if args.n is not None:
        fields += [f"log_{e}" for e in ERRORS]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(row[k]) for k in fields})
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate, "traj": cmd_traj}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ramsey-forge: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


__all__ = ["EXIT_BUDGET", "EXIT_INVALID", "EXIT_OK", "EXIT_USAGE", "main"]
