"""
Flat-file formats: per-run trace CSVs and the verdict summary CSV.

The trace schema is the stable interface consumed by downstream tooling:
a leading `# config:` comment carrying the canonical config line, then the
fixed header, then one row per iteration with floats at 17 significant
digits (enough to round-trip float64).
"""
import math

from .diagnostics import IterRecord, Trace

TRACE_HEADER = "iter,error,sigma_r_core,leakage_x,leakage_y,weak_opt,eta_used,elapsed_ns"
VERDICT_HEADER = (
    "run_id,verdict,phase2_slope,termination,"
    "align_ok,sigma_bound_ok,quad_contract_ok,weakopt_plateau_ok"
)
_TRACE_COLUMNS = TRACE_HEADER.split(",")


class TraceFormatError(Exception):
    """Malformed trace file; carries the path and 1-based line number."""

    def __init__(self, path, line_no, detail):
        self.path = str(path)
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"{path}:{line_no}: {detail}")


def format_float(value):
    return f"{float(value):.17g}"


def write_trace(path, trace, config_line=""):
    """Write one run's records; the termination reason rides in the comment."""
    lines = [f"# config: {config_line}", f"# termination: {trace.termination}"]
    lines.append(TRACE_HEADER)
    for rec in trace.records:
        lines.append(
            ",".join(
                [
                    str(rec.t),
                    format_float(rec.error),
                    format_float(rec.sigma_r_core),
                    format_float(rec.leakage_x),
                    format_float(rec.leakage_y),
                    format_float(rec.weak_opt),
                    format_float(rec.eta_used),
                    str(int(rec.elapsed_ns)),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path):
    """Parse a trace CSV back into a Trace.

    Returns a Trace whose config dict holds the raw canonical line under
    "canonical" and the termination comment under "termination". Any schema
    deviation raises TraceFormatError with the offending line number.
    """
    with open(path) as fh:
        raw_lines = fh.read().splitlines()
    config_line = ""
    termination = ""
    records = []
    header_seen = False
    if not raw_lines:
        raise TraceFormatError(path, 1, "empty file")
    for line_no, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("config:"):
                config_line = body[len("config:"):].strip()
            elif body.startswith("termination:"):
                termination = body[len("termination:"):].strip()
            continue
        if not header_seen:
            if line != TRACE_HEADER:
                raise TraceFormatError(
                    path, line_no, f"bad header {line!r}, expected {TRACE_HEADER!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != len(_TRACE_COLUMNS):
            raise TraceFormatError(
                path, line_no, f"expected {len(_TRACE_COLUMNS)} columns, got {len(parts)}"
            )
        try:
            records.append(
                IterRecord(
                    t=int(parts[0]),
                    error=float(parts[1]),
                    sigma_r_core=float(parts[2]),
                    leakage_x=float(parts[3]),
                    leakage_y=float(parts[4]),
                    weak_opt=float(parts[5]),
                    eta_used=float(parts[6]),
                    elapsed_ns=int(parts[7]),
                )
            )
        except ValueError as exc:
            raise TraceFormatError(path, line_no, f"bad value: {exc}") from exc
    if not header_seen:
        raise TraceFormatError(path, len(raw_lines), "missing header row")
    return Trace(
        records=records,
        termination=termination or "budget",
        config={"canonical": config_line, "termination": termination},
    )


def _flag(value):
    if value is None:
        return "na"
    return "true" if value else "false"


def verdict_row(run_id, verdict, phase2_slope, termination, align_ok, sigma_bound_ok,
                quad_contract_ok, weakopt_plateau_ok):
    slope = "nan" if phase2_slope is None or math.isnan(phase2_slope) else format_float(phase2_slope)
    return ",".join(
        [
            run_id,
            verdict,
            slope,
            termination,
            _flag(align_ok),
            _flag(sigma_bound_ok),
            _flag(quad_contract_ok),
            _flag(weakopt_plateau_ok),
        ]
    )


def write_verdicts(path, rows):
    """rows are pre-rendered verdict_row strings, written in given order."""
    with open(path, "w") as fh:
        fh.write(VERDICT_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
