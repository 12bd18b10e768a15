"""Figure assembly: one curve per trace, optional log y-axis."""
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .traces import Y_COLUMNS, read_series

LOG_FLOOR = 1e-16

_Y_LABELS = {
    "error": "optimality error",
    "weak_opt": "weak optimality residual",
    "leakage_x": "residual-space leakage",
}


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: labeled trace files, the column, axis mode, output."""

    inputs: tuple  # ((path, label), ...)
    out: str
    y: str = "error"
    logy: bool = True
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple((str(p), str(l)) for p, l in self.inputs))
        if not self.inputs:
            raise ValueError("need at least one input trace")
        labels = [label for _, label in self.inputs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be unique, got {labels}")
        if self.y not in Y_COLUMNS:
            raise ValueError(f"y must be one of {', '.join(Y_COLUMNS)}, got {self.y!r}")
        if not self.out:
            raise ValueError("output path must be non-empty")


def load_curves(spec):
    """Read every input series, clipping to the log floor when needed.

    The clip keeps exact zeros and noise-floor values drawable on a log
    axis without inventing structure above 1e-16.
    """
    curves = []
    for path, label in spec.inputs:
        iters, values = read_series(path, spec.y)
        if spec.logy:
            values = [max(v, LOG_FLOOR) for v in values]
        curves.append((label, iters, values))
    return curves


def build_figure(spec):
    curves = load_curves(spec)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, iters, values in curves:
        ax.plot(iters, values, label=label, linewidth=1.6)
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(_Y_LABELS[spec.y])
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec):
    """Write the figure for `spec` and return the output path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out
