"""Figure renderer for recovery-scheme sweep CSVs.

Reads the sweep CSV schema emitted by the simulator CLI and renders the
standard panels: recorded expectations, success probability, and fidelity
versus the measurement angle, with analytic-curve overlays and shot-noise
error bars when present.
"""

from .renderer import (
    PLOTTABLE_COLUMNS,
    SWEEP_SCHEMA,
    FigureSpec,
    PanelSnapshot,
    RenderResult,
    SchemaError,
    SeriesSnapshot,
    load_sweep_csv,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "PLOTTABLE_COLUMNS",
    "SWEEP_SCHEMA",
    "FigureSpec",
    "PanelSnapshot",
    "RenderResult",
    "SchemaError",
    "SeriesSnapshot",
    "load_sweep_csv",
    "render",
]
