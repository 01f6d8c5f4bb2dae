"""End-to-end run: Phase 1 with telemetry, Phase 2 repair, validation, outputs."""
from __future__ import annotations

import dataclasses
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .core import ColoringState, ProcessConfig, format_coloring, init_state
from .phase1 import Phase1Report, StepOutcome, run_phase1
from .phase2 import BudgetExceeded, Phase2Report, lll_diagnostic, random_complete, resample
from .rng import PHASE1, PHASE2, SPECIAL_SETS, TELEMETRY, substream, substream_seeds
from .telemetry import SamplePlan, TelemetryRecord, snapshot, write_csv
from .validator import CertificateError, census, lower_bound_certificate, verify_45

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64


@dataclass
class RunResult:
    config: ProcessConfig
    exit_code: int
    coloring: np.ndarray
    num_colors: int
    phase1: Phase1Report
    phase2: Phase2Report | None
    violations: int
    telemetry: list[TelemetryRecord] = field(default_factory=list)
    report: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    state: ColoringState | None = None


def manifest(config: ProcessConfig, mode: str, outputs: dict[str, str]) -> dict:
    pal = config.palette
    return {
        "config": dataclasses.asdict(config),
        "palette": {"total": pal.total, "phase1": pal.phase1, "reserved": pal.reserved},
        "substreams": substream_seeds(config.seed),
        "validation_mode": mode,
        "outputs": outputs,
        "versions": {"ramsey_forge": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }


def run_pipeline(
    config: ProcessConfig,
    out_dir: str | Path | None = None,
    mode: str = "auto",
    plan: SamplePlan | None = None,
    checkpoint_steps: list[int] | None = None,
    max_enlargements: int | None = None,
    on_step: Callable[[ColoringState, StepOutcome], None] | None = None,
    keep_state: bool = False,
) -> RunResult:
    """Run both phases and validate. Writes files only when ``out_dir`` is given.

    Telemetry snapshots are taken every ``config.checkpoint_every`` steps, or
    at the explicit ``checkpoint_steps`` when those are given.
    """
    start = time.perf_counter()
    state = init_state(config, substream(config.seed, SPECIAL_SETS))
    tel_rng = substream(config.seed, TELEMETRY)
    plan = plan or SamplePlan()
    records: list[TelemetryRecord] = []

    def take(s: ColoringState) -> None:
        records.extend(snapshot(s, plan, tel_rng, config.epsilon))

    on_checkpoint = take if config.checkpoint_every else None
    step_hook = on_step
    if checkpoint_steps:
        wanted = set(checkpoint_steps)

        def step_hook(s, out):
            if on_step is not None:
                on_step(s, out)
            if s.step_index in wanted:
                take(s)

    p1 = run_phase1(state, substream(config.seed, PHASE1), config,
                    on_checkpoint=on_checkpoint, on_step=step_hook)
    phase1_colored = state.colored
    total_edges = config.n * (config.n - 1) // 2
    p2_rng = substream(config.seed, PHASE2)
    leftover = random_complete(state, p2_rng)
    diagnostic = lll_diagnostic(state, config.epsilon)
    exit_code = EXIT_OK
    try:
        p2 = resample(state, p2_rng, budget=config.phase2_budget,
                      max_enlargements=max_enlargements, uncolored_at_start=len(leftover))
    except BudgetExceeded as exc:
        p2 = exc.report
        exit_code = EXIT_BUDGET
    p2.diagnostics = diagnostic

    colors = state.matrix()
    violations = verify_45(colors, mode)
    cen = census(colors)
    lb = None
    lb_error = None
    if exit_code == EXIT_OK:
        try:
            lb = lower_bound_certificate(colors)
        except CertificateError as exc:
            lb_error = str(exc)
        if violations or lb_error:
            exit_code = EXIT_INVALID
    pal = config.palette
    report = {
        "n": config.n,
        "epsilon": config.epsilon,
        "seed": config.seed,
        "exit_code": exit_code,
        "palette": {"total": pal.total, "phase1": pal.phase1, "reserved": pal.reserved,
                    "final": state.num_colors},
        "colors_used": cen.colors_used,
        "colors_used_over_n": cen.colors_used / config.n,
        "within_palette": cen.colors_used <= pal.total,
        "fallback_enlargements": p2.enlargements,
        "phase1": p1.to_json(),
        "phase1_coverage": phase1_colored / total_edges,
        "phase2": p2.to_json(),
        "validation": {"mode": mode, "violations": len(violations),
                       "examples": [v.to_json() for v in violations[:10]]},
        "census": cen.to_json(),
        "lower_bound": lb.to_json() if lb else None,
        "lower_bound_error": lb_error,
        "telemetry_records": len(records),
        "seconds": round(time.perf_counter() - start, 3),
    }
    outputs = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs = {"coloring": "coloring.txt", "telemetry": "telemetry.csv",
                   "report": "report.json", "manifest": "manifest.json"}
        (out / "coloring.txt").write_text(format_coloring(colors, state.num_colors))
        with open(out / "telemetry.csv", "w", newline="") as fh:
            write_csv(records, fh)
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    man = manifest(config, mode, outputs)
    if out_dir is not None:
        (Path(out_dir) / "manifest.json").write_text(json.dumps(man, indent=2) + "\n")
    return RunResult(config=config, exit_code=exit_code, coloring=colors,
                     num_colors=state.num_colors, phase1=p1, phase2=p2,
                     violations=len(violations), telemetry=records, report=report,
                     manifest=man, state=state if keep_state else None)
