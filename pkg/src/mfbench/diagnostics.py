"""
Per-iteration metrics, bound evaluation, and the convergence-rate classifier.

Everything here is a pure function of matrices already in hand. The pseudo
inverse of the target is computed once per run by the caller and passed in.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import EPS

ONE_STEP = "one_step"
QUADRATIC = "quadratic"
LINEAR = "linear"
SUBLINEAR = "sublinear"
STALLED = "stalled"

CONVERGED = "converged"
BUDGET = "budget"
DIVERGED = "diverged"
SINGULAR_GRAM = "singular-gram"
REFUSED_START = "refused-start"

RATIO_ONE_STEP = 1e-8
RATIO_STALLED = 0.999
FIT_WINDOW = 5
FIT_RESIDUAL_LIMIT = 0.15


class InsufficientData(ValueError):
    """Raised when a trace is too short or too degenerate to classify."""


@dataclass(frozen=True)
class IterRecord:
    t: int
    error: float
    sigma_r_core: float
    leakage_x: float
    leakage_y: float
    weak_opt: float
    eta_used: float
    elapsed_ns: int


@dataclass
class Trace:
    """Ordered iteration records plus how the run ended and its full config."""

    records: list = field(default_factory=list)
    termination: str = BUDGET
    config: dict = field(default_factory=dict)

    def errors(self):
        return [rec.error for rec in self.records]

    @property
    def final(self):
        if not self.records:
            raise IndexError("trace has no records")
        return self.records[-1]


@dataclass(frozen=True)
class RateEstimate:
    """Classifier output: verdict, fitted exponent, window, fit quality."""

    verdict: str
    phase2_slope: float
    window: tuple
    confidence: float
    confident: bool


def optimality_error(x, a, y=None):
    """Frobenius residual of the current factorization against the target.

    Overflow is a legitimate outcome here (a diverging iterate reports inf),
    so the intermediate products run with overflow warnings suppressed.
    """
    right = x if y is None else y
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.linalg.norm(x @ right.T - a))


def weak_opt_residual(x, a_pinv, y=None):
    """How far the factors are from satisfying the pseudo-inverse identity.

    Symmetric runs measure x.T @ pinv(A) @ x - I, asymmetric ones substitute
    y.T on the left.
    """
    left = x if y is None else y
    core = left.T @ a_pinv @ x
    return float(np.linalg.norm(core - np.eye(x.shape[1])))


def residual_leakage(x, col_basis_q):
    """Relative mass of x outside the span of the given orthonormal basis."""
    resid = x - col_basis_q @ (col_basis_q.T @ x)
    return float(np.linalg.norm(resid) / max(np.linalg.norm(x), EPS))


def core_sigma_min(x, u_basis, y=None, v_basis=None, a_pinv=None, underparam=False):
    """Smallest singular value of the aligned core matrix.

    Exactly and over-parameterized runs project the factors onto the target's
    bases and report sigma_min of the product; under-parameterized runs use
    the r-by-r pseudo-inverse core instead, since the projected core is
    rank-deficient by construction there.
    """
    if underparam:
        left = x if y is None else y
        core = left.T @ a_pinv @ x
    else:
        phi = u_basis.T @ x
        if y is None:
            core = phi @ phi.T
        else:
            psi = (v_basis if v_basis is not None else u_basis).T @ y
            core = phi @ psi.T
    sv = np.linalg.svd(core, compute_uv=False)
    return float(sv[-1]) if sv.size else 0.0


def core_sigma_floor(t, eta, sigma_r_b0, sigma_r_a):
    """Lower bound on sigma_r of the aligned core after t + 1 steps.

    Evaluates (1-eta)^(2t+2) * s_b0 + (1-eta) * s_a - (1-eta)^(2t+3) * s_a
    for eta in (0, 1]. At eta = 1 every term vanishes.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    if sigma_r_b0 < 0 or sigma_r_a < 0:
        raise ValueError("singular values must be non-negative")
    decay = 1.0 - eta
    return (
        decay ** (2 * t + 2) * sigma_r_b0
        + decay * sigma_r_a
        - decay ** (2 * t + 3) * sigma_r_a
    )


def rate_fit_floor(a_fro_norm):
    """Error level below which values measure round-off, not contraction."""
    return 100.0 * EPS * a_fro_norm


def classify_rate(errors, floor=0.0):
    """Classify a positive error sequence as one_step/quadratic/linear/....

    The fit regresses log e_{t+1} on log e_t over the last FIT_WINDOW usable
    points (finite and strictly above the floor), using only consecutive
    iteration pairs. A quadratic verdict needs slope in [1.7, 2.3], linear
    needs [0.8, 1.2] with a contracting median ratio, and a median ratio at
    or above RATIO_STALLED short-circuits to stalled.
    """
    errors = [float(e) for e in errors]
    if len(errors) >= 2 and errors[0] > 0:
        if errors[1] / errors[0] <= RATIO_ONE_STEP:
            return RateEstimate(
                verdict=ONE_STEP,
                phase2_slope=float("nan"),
                window=(0, 1),
                confidence=0.0,
                confident=True,
            )
    usable = [
        (t, e) for t, e in enumerate(errors) if math.isfinite(e) and e > floor
    ]
    if len(usable) < 3:
        raise InsufficientData(
            f"need at least 3 usable error values above the floor, have {len(usable)}"
        )
    tail = usable[-FIT_WINDOW:]
    pairs = [
        (e_now, e_next)
        for (t_now, e_now), (t_next, e_next) in zip(tail, tail[1:])
        if t_next == t_now + 1
    ]
    if len(pairs) < 2:
        raise InsufficientData("fewer than 2 consecutive iteration pairs in the window")
    window = (tail[0][0], tail[-1][0])
    ratios = sorted(e_next / e_now for e_now, e_next in pairs)
    mid = len(ratios) // 2
    med_ratio = (
        ratios[mid] if len(ratios) % 2 else (ratios[mid - 1] + ratios[mid]) / 2.0
    )
    if med_ratio >= RATIO_STALLED:
        return RateEstimate(
            verdict=STALLED,
            phase2_slope=float("nan"),
            window=window,
            confidence=float("nan"),
            confident=True,
        )
    xs = np.log([e_now for e_now, _ in pairs])
    ys = np.log([e_next for _, e_next in pairs])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    if 1.7 <= slope <= 2.3:
        verdict = QUADRATIC
    elif 0.8 <= slope <= 1.2 and med_ratio < 1.0:
        verdict = LINEAR
    else:
        verdict = SUBLINEAR
    return RateEstimate(
        verdict=verdict,
        phase2_slope=float(slope),
        window=window,
        confidence=resid,
        confident=resid <= FIT_RESIDUAL_LIMIT,
    )


def procrustes_distance(x, x_star):
    """min over orthogonal R of ||x @ R - x_star||_F."""
    if x.shape != x_star.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_star.shape}")
    m = x_star.T @ x
    u, _, vt = np.linalg.svd(m, full_matrices=False)
    rot = (u @ vt).T
    return float(np.linalg.norm(x @ rot - x_star))
