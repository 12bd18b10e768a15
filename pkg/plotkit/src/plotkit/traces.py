"""Reader for the flat trace CSVs emitted by the benchmark harness.

The file format is plain CSV with two leading comment lines:

    # config: <one-line config echo>
    # termination: <reason>
    iter,error,sigma_r_core,leakage_x,leakage_y,weak_opt,eta_used,elapsed_ns
    0,2.88,...

Only the columns a plot actually asks for are extracted, so files with
extra columns keep working; a file that lacks a requested column is a
schema error that names the column.
"""

Y_COLUMNS = ("error", "weak_opt", "leakage_x")


class SchemaError(Exception):
    """Trace file does not match the expected schema.

    Carries the offending path and, when the problem is a missing column,
    its name in ``column``.
    """

    def __init__(self, path, detail, column=None):
        self.path = str(path)
        self.column = column
        super().__init__(f"{path}: {detail}")


def read_series(path, column):
    """Return (iterations, values) for one column of one trace file.

    Raises SchemaError on a missing or malformed header, a missing column,
    or a non-numeric cell. Raises OSError when the file cannot be read.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = None
    header_line = 0
    rows = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            header_line = line_no
            continue
        rows.append((line_no, line.split(",")))
    if header is None:
        raise SchemaError(path, "no header row found")
    for name in ("iter", column):
        if name not in header:
            raise SchemaError(
                path,
                f"missing column {name!r} (header line {header_line})",
                column=name,
            )
    t_idx = header.index("iter")
    y_idx = header.index(column)
    width = len(header)
    iters = []
    values = []
    for line_no, cells in rows:
        if len(cells) != width:
            raise SchemaError(
                path, f"line {line_no}: expected {width} cells, got {len(cells)}"
            )
        try:
            iters.append(int(cells[t_idx]))
            values.append(float(cells[y_idx]))
        except ValueError as exc:
            raise SchemaError(path, f"line {line_no}: {exc}") from exc
    return iters, values
