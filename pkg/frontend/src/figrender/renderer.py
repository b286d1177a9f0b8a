"""Panel rendering over the published sweep CSV schema.

The schema below is the external contract with the simulator CLI; it is
validated verbatim so a renamed or reordered column fails loudly, naming
the offending position, instead of silently plotting the wrong quantity.

Testing is structural rather than pixel-based: :func:`render` returns a
snapshot of what was actually drawn (series per panel, their data arrays,
axis ranges), extracted from the rendered axes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

#: The sweep CSV contract, column for column.
SWEEP_SCHEMA = (
    "scheme",
    "backend",
    "theta_rad",
    "rx2",
    "p_est",
    "sigma_c_x",
    "sigma_a_x",
    "p_succ",
    "fidelity",
    "fidelity_analytic",
    "ci_low",
    "ci_high",
    "shots",
    "seed",
)

PLOTTABLE_COLUMNS = (
    "rx2",
    "p_est",
    "sigma_c_x",
    "sigma_a_x",
    "p_succ",
    "fidelity",
)

_PANEL_LABELS = {
    "rx2": "squared x component",
    "p_est": "recovery rate",
    "sigma_c_x": "control x expectation",
    "sigma_a_x": "auxiliary x expectation",
    "p_succ": "success probability",
    "fidelity": "fidelity",
}


class SchemaError(ValueError):
    """The input file does not match the published sweep schema."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[Path, ...]
    panels: tuple[str, ...]
    out: Path
    overlay: bool = True
    format: str = "svg"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "panels", tuple(self.panels))
        object.__setattr__(self, "out", Path(self.out))
        if not self.inputs:
            raise ValueError("need at least one input CSV")
        if not self.panels:
            raise ValueError("need at least one panel")
        for panel in self.panels:
            if panel not in PLOTTABLE_COLUMNS:
                raise SchemaError(
                    f"panel {panel!r} is not a plottable column; choose from "
                    f"{PLOTTABLE_COLUMNS}"
                )
        if self.format not in ("svg", "png"):
            raise ValueError(f"format must be svg or png, got {self.format!r}")


@dataclass(frozen=True)
class SeriesSnapshot:
    label: str
    kind: str  # "data" | "overlay"
    x: tuple[float, ...]
    y: tuple[float, ...]
    has_error_bars: bool

    @property
    def n_points(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class PanelSnapshot:
    panel: str
    series: tuple[SeriesSnapshot, ...]
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    image_path: Path


@dataclass(frozen=True)
class RenderResult:
    panels: tuple[PanelSnapshot, ...]


def _parse_float(text: str) -> float | None:
    return None if text == "" else float(text)


def load_sweep_csv(path) -> list[dict]:
    """Parse and validate one sweep CSV against the published schema."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if tuple(header) != SWEEP_SCHEMA:
            for i, want in enumerate(SWEEP_SCHEMA):
                got = header[i] if i < len(header) else "<missing>"
                if got != want:
                    raise SchemaError(
                        f"{path}: column {i} is {got!r}, expected {want!r}"
                    )
            raise SchemaError(
                f"{path}: {len(header)} columns, expected {len(SWEEP_SCHEMA)}"
            )
        rows = []
        for lineno, parts in enumerate(reader, 2):
            if len(parts) != len(SWEEP_SCHEMA):
                raise SchemaError(
                    f"{path}:{lineno}: row has {len(parts)} fields, expected "
                    f"{len(SWEEP_SCHEMA)}"
                )
            row = dict(zip(SWEEP_SCHEMA, parts))
            for key in SWEEP_SCHEMA[2:13]:
                row[key] = _parse_float(row[key])
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _panel_path(spec: FigureSpec, panel: str) -> Path:
    out = spec.out
    if len(spec.panels) == 1:
        return out if out.suffix else out.with_suffix(f".{spec.format}")
    stem = out.stem if out.suffix else out.name
    parent = out.parent
    return parent / f"{stem}_{panel}.{spec.format}"


def _snapshot_axes(ax, panel: str, image_path: Path) -> PanelSnapshot:
    series = []
    for line in ax.get_lines():
        label = line.get_label()
        if label.startswith("_"):
            continue  # error-bar caps and other helper artists
        x = tuple(float(v) for v in line.get_xdata())
        y = tuple(float(v) for v in line.get_ydata())
        kind = "overlay" if label.endswith("(analytic)") else "data"
        has_bars = bool(getattr(line, "_figrender_error_bars", False))
        series.append(SeriesSnapshot(label, kind, x, y, has_bars))
    return PanelSnapshot(
        panel=panel,
        series=tuple(series),
        xlim=tuple(float(v) for v in ax.get_xlim()),
        ylim=tuple(float(v) for v in ax.get_ylim()),
        image_path=image_path,
    )


def render(spec: FigureSpec) -> RenderResult:
    """Render every requested panel, one image per panel.

    Inputs are read-only; the same CSVs always produce the same geometry
    (series, point counts, axis ranges).
    """
    tables = [(path, load_sweep_csv(path)) for path in spec.inputs]
    snapshots = []
    for panel in spec.panels:
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        try:
            for path, rows in tables:
                xs = [row["theta_rad"] for row in rows]
                ys = [row[panel] for row in rows]
                if all(y is None for y in ys):
                    continue
                label = f"{rows[0]['scheme']} [{path.name}]"
                yerr = None
                if panel == "fidelity":
                    lows = [row["ci_low"] for row in rows]
                    highs = [row["ci_high"] for row in rows]
                    if all(v is not None for v in lows + highs):
                        # interval endpoints can sit a float-epsilon past the
                        # estimate; matplotlib rejects negative bar lengths
                        yerr = (
                            [max(0.0, y - lo) for y, lo in zip(ys, lows)],
                            [max(0.0, hi - y) for y, hi in zip(ys, highs)],
                        )
                if yerr is not None:
                    container = ax.errorbar(
                        xs, ys, yerr=yerr, fmt="o", markersize=3, capsize=2
                    )
                    # label the data line itself so both the legend and the
                    # structural snapshot see one series
                    container.lines[0].set_label(label)
                    container.lines[0]._figrender_error_bars = True
                else:
                    ax.plot(xs, ys, marker="o", markersize=3, linestyle="-",
                            label=label)
                if spec.overlay and panel == "fidelity":
                    overlay_ys = [row["fidelity_analytic"] for row in rows]
                    if all(v is not None for v in overlay_ys):
                        ax.plot(
                            xs, overlay_ys, linestyle="--", linewidth=1.2,
                            label=f"{rows[0]['scheme']} (analytic)",
                        )
            ax.set_xlabel("measurement angle (rad)")
            ax.set_ylabel(_PANEL_LABELS[panel])
            ax.legend(fontsize=7)
            image_path = _panel_path(spec, panel)
            image_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(image_path, format=spec.format)
            snapshots.append(_snapshot_axes(ax, panel, image_path))
        finally:
            plt.close(fig)
    return RenderResult(tuple(snapshots))
