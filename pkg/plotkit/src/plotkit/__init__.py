"""Figure rendering for benchmark trace CSVs."""
from .render import LOG_FLOOR, PlotSpec, build_figure, load_curves, render
from .traces import SchemaError, Y_COLUMNS, read_series

__version__ = "0.1.0"

__all__ = [
    "LOG_FLOOR",
    "PlotSpec",
    "SchemaError",
    "Y_COLUMNS",
    "build_figure",
    "load_curves",
    "read_series",
    "render",
    "__version__",
]
