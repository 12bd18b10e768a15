"""
Per-run certification: rate verdict plus the invariant-check bitmap.

Each check returns True/False when it applies to the run and None when it
does not (rendered as "na" in the verdict CSV). Applicability is decided
from the canonical config echoed in the trace; a trace without one gets the
rate verdict only. Under-parameterized runs are classified on the
weak-optimality residual, everything else on the optimality error.
"""
import math
from dataclasses import dataclass

from .diagnostics import (
    InsufficientData,
    classify_rate,
    core_sigma_floor,
    rate_fit_floor,
)
from .problems import UP, classify_regime, parse_spectrum
from .tracefile import verdict_row

ALIGN_LIMIT = 1e-9
SIGMA_SLACK = 1e-9
CONTRACT_SLACK = 1e-12
PLATEAU_WINDOW = 50
PLATEAU_RATIO = 0.9

_SKETCH_INITS = ("nystrom", "grad")
_SCALED_SOLVERS = ("scaledgd", "scaledgd-pinv", "scaledgd-lambda")


def check_alignment(trace, limit=ALIGN_LIMIT):
    """True when every recorded leakage stays under the limit."""
    worst = 0.0
    seen = False
    for rec in trace.records:
        for leak in (rec.leakage_x, rec.leakage_y):
            if math.isfinite(leak):
                seen = True
                worst = max(worst, leak)
    if not seen:
        return None
    return worst <= limit


def check_sigma_floor(trace, eta, sigma_r_a, slack=SIGMA_SLACK):
    """Core sigma_r must dominate its predicted geometric floor at every t."""
    recs = trace.records
    if len(recs) < 2 or not math.isfinite(recs[0].sigma_r_core):
        return None
    b0 = recs[0].sigma_r_core
    for rec in recs[1:]:
        bound = core_sigma_floor(rec.t - 1, eta, b0, sigma_r_a)
        if not rec.sigma_r_core >= bound - slack:
            return False
    return True


def check_quad_contraction(trace, kappa, sigma_min_a, slack=CONTRACT_SLACK):
    """After entry, each error must contract quadratically.

    Entry is the first iteration with error <= 2/(3 kappa^2) and core sigma
    at least sigma_min_a / 3. Returns None when the run never enters.
    """
    recs = trace.records
    entry_error = 2.0 / (3.0 * kappa**2)
    start = None
    for i, rec in enumerate(recs):
        if (
            math.isfinite(rec.error)
            and rec.error <= entry_error
            and math.isfinite(rec.sigma_r_core)
            and rec.sigma_r_core >= sigma_min_a / 3.0
        ):
            start = i
            break
    if start is None:
        return None
    factor = 3.0 * kappa**2 / 4.0
    for prev, nxt in zip(recs[start:], recs[start + 1:]):
        if not nxt.error <= factor * prev.error**2 + slack:
            return False
    return True


def check_weakopt_plateau(trace, window=20, ratio=PLATEAU_RATIO):
    """True when the weak-opt residual has settled (or the run converged)."""
    if trace.termination == "converged":
        return True
    values = [rec.weak_opt for rec in trace.records if math.isfinite(rec.weak_opt)]
    if len(values) < 3:
        return False
    tail = values[-(window + 1):]
    ratios = sorted(
        nxt / prev for prev, nxt in zip(tail, tail[1:]) if prev > 0
    )
    if not ratios:
        return False
    mid = len(ratios) // 2
    med = ratios[mid] if len(ratios) % 2 else (ratios[mid - 1] + ratios[mid]) / 2.0
    return med >= ratio and values[-1] > 0


def plateau_level(trace, window=PLATEAU_WINDOW):
    """Median weak-opt residual over the trailing window."""
    values = [rec.weak_opt for rec in trace.records if math.isfinite(rec.weak_opt)]
    if not values:
        return math.nan
    tail = sorted(values[-window:])
    mid = len(tail) // 2
    return tail[mid] if len(tail) % 2 else (tail[mid - 1] + tail[mid]) / 2.0


@dataclass(frozen=True)
class VerdictSummary:
    verdict: str
    phase2_slope: float
    termination: str
    align_ok: object
    sigma_bound_ok: object
    quad_contract_ok: object
    weakopt_plateau_ok: object

    def to_row(self, run_id):
        return verdict_row(
            run_id,
            self.verdict,
            self.phase2_slope,
            self.termination,
            self.align_ok,
            self.sigma_bound_ok,
            self.quad_contract_ok,
            self.weakopt_plateau_ok,
        )


def _sketch_like(cfg):
    if cfg.init in _SKETCH_INITS:
        return True
    return cfg.init == "perturbed" and cfg.xi_n == 0.0


def summarize(trace, cfg=None):
    """Build the VerdictSummary for one trace.

    cfg is the parsed ExperimentConfig behind the run; without it only the
    rate verdict is computed (bitmap all na, floor at zero).
    """
    regime = None
    floor = 0.0
    sigma_min_a = None
    kappa = None
    if cfg is not None:
        spectrum = parse_spectrum(cfg.spectrum)
        regime = classify_regime(len(spectrum), cfg.r)
        floor = rate_fit_floor(math.sqrt(sum(s * s for s in spectrum)))
        sigma_min_a = min(spectrum)
        kappa = max(spectrum) / min(spectrum)
    if regime == UP:
        series = [rec.weak_opt for rec in trace.records]
    else:
        series = [rec.error for rec in trace.records]
    try:
        rate = classify_rate(series, floor)
        verdict, slope = rate.verdict, rate.phase2_slope
    except InsufficientData:
        verdict, slope = "insufficient_data", math.nan

    align = sigma = contract = plateau = None
    if cfg is not None:
        scaled = cfg.solver in _SCALED_SOLVERS
        if scaled and _sketch_like(cfg):
            align = check_alignment(trace)
        if (
            cfg.kind == "sym"
            and regime == "ep"
            and cfg.schedule == "fixed"
            and cfg.solver == "scaledgd"
            and _sketch_like(cfg)
        ):
            sigma = check_sigma_floor(trace, cfg.eta, sigma_min_a)
        if (
            cfg.kind == "sym"
            and regime in ("ep", "op")
            and cfg.schedule == "fixed"
            and cfg.eta == 0.5
            and cfg.solver in ("scaledgd", "scaledgd-pinv")
            and _sketch_like(cfg)
        ):
            contract = check_quad_contraction(trace, kappa, sigma_min_a)
        if regime == UP:
            plateau = check_weakopt_plateau(trace)
    return VerdictSummary(
        verdict=verdict,
        phase2_slope=slope,
        termination=trace.termination,
        align_ok=align,
        sigma_bound_ok=sigma,
        quad_contract_ok=contract,
        weakopt_plateau_ok=plateau,
    )
