"""The three figure kinds.

heatmap        one transition-histogram CSV -> (s, h) heatmap
loglog         one transfer-compare sweep CSV -> error vs radius with the
               fitted slope read from the file
density-panel  two density-grid CSVs -> side-by-side spatial panels with
               the TV annotation read from the files

Figures are deterministic: fixed sizes, fixed colormaps, color scales
normalized to each file's own total mass (the scale is recorded in the
image metadata).  Statistics are never recomputed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, read_density, read_sweep, read_transition

KINDS = ("heatmap", "loglog", "density-panel")

_CMAP = "viridis"
_FIGSIZE = {"heatmap": (6.0, 4.5), "loglog": (5.0, 4.0),
            "density-panel": (9.0, 4.0)}
_DPI = 150


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input CSV path(s), plot kind, output image path."""

    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        need = 2 if self.kind == "density-panel" else 1
        if len(self.inputs) != need:
            raise SchemaError(
                f"{self.kind} needs exactly {need} input file(s), "
                f"got {len(self.inputs)}"
            )


def _tv_annotations(meta: dict) -> list[str]:
    """Every tv_* statistic present in a CSV header, formatted."""
    out = []
    for key in sorted(meta):
        if key.startswith("tv_") or key.endswith("_tv") or key == "tv":
            out.append(f"{key} = {float(meta[key].strip(chr(39))):.4f}")
    return out


def _heatmap(spec: PlotSpec):
    data = read_transition(spec.inputs[0])
    fig, ax = plt.subplots(figsize=_FIGSIZE["heatmap"])
    total = data.counts.sum() + data.overflow
    dens = data.counts / total if total > 0 else data.counts
    mesh = ax.pcolormesh(data.s_edges, data.h_edges, dens.T, cmap=_CMAP,
                         vmin=0.0)
    fig.colorbar(mesh, ax=ax, label="probability per bin")
    ax.set_xlabel("s")
    ax.set_ylabel("h")
    lines = [f"h' = {data.h_prime:g}"]
    if data.overflow:
        lines.append(f"overflow mass = {data.overflow / total:.4f}")
    lines.extend(_tv_annotations(data.meta))
    ax.set_title("\n".join(lines), fontsize=9)
    return fig, f"color scale: 0..{dens.max():.3e} probability per bin"


def _loglog(spec: PlotSpec):
    data = read_sweep(spec.inputs[0])
    fig, ax = plt.subplots(figsize=_FIGSIZE["loglog"])
    ax.loglog(data.r, data.median_s_err, "o-", label="median |s error|")
    # guide line with the slope read from the file, anchored at the
    # smallest radius
    anchor = data.median_s_err[-1]
    guide = anchor * (data.r / data.r[-1]) ** data.slope
    ax.loglog(data.r, guide, "--", color="gray",
              label=f"slope = {data.slope:.3f}")
    ax.set_xlabel("r")
    ax.set_ylabel("median |s error|")
    ax.legend()
    ax.set_title(f"fitted slope = {data.slope:.3f}", fontsize=10)
    return fig, "log-log axes; guide line uses the slope from the CSV"


def _density_panel(spec: PlotSpec):
    grids = [read_density(p) for p in spec.inputs]
    if grids[0].weights.shape != grids[1].weights.shape:
        raise SchemaError(
            "density-panel inputs have different grid shapes: "
            f"{grids[0].weights.shape} vs {grids[1].weights.shape}"
        )
    fig, axes = plt.subplots(1, 2, figsize=_FIGSIZE["density-panel"])
    spatial = [g.weights.sum(axis=2) for g in grids]
    vmax = max(float(s.max()) for s in spatial)
    for ax, g, s in zip(axes, grids, spatial):
        ax.pcolormesh(g.x_edges, g.y_edges, s.T, cmap=_CMAP, vmin=0.0,
                      vmax=vmax)
        ax.set_title(f"{g.label} (t = {g.t:g})", fontsize=10)
        ax.set_xlabel("x")
        ax.set_aspect("equal")
    axes[0].set_ylabel("y")
    notes = _tv_annotations(grids[0].meta) or _tv_annotations(grids[1].meta)
    if notes:
        fig.suptitle("; ".join(notes), fontsize=10)
    return fig, f"shared color scale: 0..{vmax:.3e} mass per column"


_BUILDERS = {"heatmap": _heatmap, "loglog": _loglog,
             "density-panel": _density_panel}


def build_figure(spec: PlotSpec):
    """The matplotlib Figure for a spec plus its color-scale note."""
    return _BUILDERS[spec.kind](spec)


def render(spec: PlotSpec) -> str:
    """Render a spec to its output image; returns the output path.

    The color-scale description is stored in the image metadata so the
    scale is documented alongside the pixels.
    """
    fig, scale_note = build_figure(spec)
    try:
        fig.savefig(spec.output, dpi=_DPI,
                    metadata={"Description": scale_note}
                    if spec.output.endswith(".png") else None)
    finally:
        plt.close(fig)
    return spec.output
