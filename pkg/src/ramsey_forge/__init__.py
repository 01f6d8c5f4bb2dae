"""Randomized (4,5)-colorings of complete graphs via a triangle-coloring process."""
from __future__ import annotations

__version__ = "0.1.0"

from .core import PaletteSpec, ProcessConfig, init_state  # noqa: E402
from .pipeline import RunResult, run_pipeline  # noqa: E402
from .validator import census, lower_bound_certificate, verify_45  # noqa: E402

__all__ = [
    "PaletteSpec", "ProcessConfig", "RunResult", "census", "init_state",
    "lower_bound_certificate", "run_pipeline", "verify_45", "__version__",
]
