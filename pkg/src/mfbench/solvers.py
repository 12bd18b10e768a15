"""
Step kernels, learning-rate schedules, and the run loop that produces traces.

Kernels are pure array-in/array-out functions. The run loop owns termination
logic: it records diagnostics for the current iterate first, then decides
whether to stop, then advances. Under-parameterized runs stop on the
weak-optimality residual because their optimality error has a floor.
"""
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .diagnostics import (
    BUDGET,
    CONVERGED,
    DIVERGED,
    REFUSED_START,
    SINGULAR_GRAM,
    IterRecord,
    Trace,
    core_sigma_min,
    optimality_error,
    residual_leakage,
    weak_opt_residual,
)
from .linalg import SingularGramError, gram_solve, pinv, svd
from .problems import UP

GD = "gd"
SCALEDGD = "scaledgd"
SCALEDGD_PINV = "scaledgd_pinv"
SCALEDGD_LAMBDA = "scaledgd_lambda"
_METHODS = (GD, SCALEDGD, SCALEDGD_PINV, SCALEDGD_LAMBDA)

INVERSE = "inverse"
PSEUDO = "pseudo"

FIXED = "fixed"
TWO_PHASE = "two_phase"
STEP_DECAY = "step_decay"


@dataclass(frozen=True)
class Schedule:
    """Learning-rate schedule: fixed, two_phase, or step_decay.

    two_phase runs eta1 until iteration t1 (or until the run loop latches
    phase 2 early on the error threshold), then eta2. step_decay walks the
    levels every switch_every iterations and stays on the last one.
    """

    kind: str = FIXED
    eta: float = 0.5
    eta1: float = 0.0
    t1: int = 0
    eta2: float = 0.0
    levels: tuple = ()
    switch_every: int = 0

    def __post_init__(self):
        if self.kind == FIXED:
            _check_eta(self.eta, "eta")
        elif self.kind == TWO_PHASE:
            _check_eta(self.eta1, "eta1")
            _check_eta(self.eta2, "eta2")
            if self.t1 < 0:
                raise ValueError(f"t1 must be >= 0, got {self.t1}")
        elif self.kind == STEP_DECAY:
            object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
            if not self.levels:
                raise ValueError("step_decay needs at least one level")
            for v in self.levels:
                _check_eta(v, "level")
            if self.switch_every < 1:
                raise ValueError(f"switch_every must be >= 1, got {self.switch_every}")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def eta_at(self, t, phase2=False):
        if self.kind == FIXED:
            return self.eta
        if self.kind == TWO_PHASE:
            return self.eta2 if (phase2 or t >= self.t1) else self.eta1
        return self.levels[min(t // self.switch_every, len(self.levels) - 1)]


def _check_eta(value, name):
    if not 0 < value <= 1:
        raise ValueError(f"{name} must be in (0, 1], got {value}")


def fixed_schedule(eta):
    return Schedule(kind=FIXED, eta=eta)


def step_decay_schedule(levels, switch_every):
    return Schedule(kind=STEP_DECAY, levels=tuple(levels), switch_every=switch_every)


def two_phase_schedule(kappa, a_fro_norm, r, max_iters, c=1.0, eta2=0.5):
    """Conservative-then-fast schedule derived from the condition number.

    eta1 = min(c / (kappa^3 ||A||_F), 1) and t1 = ceil(kappa^3 sqrt(r) ln kappa)
    capped at max_iters. The run loop may still switch to eta2 earlier once
    the error clears the phase-2 entry threshold.
    """
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    eta1 = min(c / (kappa**3 * a_fro_norm), 1.0)
    t1 = min(int(math.ceil(kappa**3 * math.sqrt(r) * math.log(kappa))), max_iters)
    return Schedule(kind=TWO_PHASE, eta1=eta1, t1=t1, eta2=eta2)


def default_schedule(regime):
    """Fixed 0.5 for exact/over-parameterized runs, a decay ladder for UP."""
    if regime == UP:
        return step_decay_schedule((0.5, 0.1, 0.01, 0.001), 50)
    return fixed_schedule(0.5)


@dataclass(frozen=True)
class SolverConfig:
    method: str = SCALEDGD
    schedule: Schedule = Schedule()
    lam: float = 0.01
    max_iters: int = 200
    tol: float = 1e-12
    record_diagnostics: bool = True

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class IterState:
    t: int
    x: np.ndarray
    y: np.ndarray
    last_error: float


def _gram_pinv(x):
    """Pseudo-inverse of the symmetrized Gram x.T @ x.

    Truncating on the Gram's own scale matters: its rank tolerance maps to a
    sqrt(eps)-level cutoff on the singular values of x, which keeps the
    round-off directions a step injects out of the preconditioner. A cutoff
    at x's scale would let 1/s^2 amplify them and blow the iterate up.
    """
    g = x.T @ x
    return pinv((g + g.T) / 2.0)


def _precondition(grad, x, mode):
    """grad @ inv(x.T @ x) or the pseudo-inverse variant."""
    if mode == PSEUDO:
        return grad @ _gram_pinv(x)
    return gram_solve(x, grad)


def scaledgd_sym_step(x, a, eta, mode=INVERSE):
    """x - eta * (x x^T - a) x (x^T x)^{-1}; pseudo mode never fails on rank."""
    grad = (x @ x.T - a) @ x
    return x - eta * _precondition(grad, x, mode)


def scaledgd_asym_step(state, a, eta, mode=INVERSE):
    """One asymmetric step. The X factor stays frozen at t = 0.

    Both preconditioners use the pre-update iterates, so the Y update at any
    t sees the same X it is preconditioned by.
    """
    x, y, t = state.x, state.y, state.t
    residual = x @ y.T - a
    y_new = y - eta * _precondition(residual.T @ x, x, mode)
    if t == 0:
        x_new = x
    else:
        x_new = x - eta * _precondition(residual @ y, y, mode)
    return IterState(t=t + 1, x=x_new, y=y_new, last_error=state.last_error)


def gd_step(state, a, eta):
    """Plain gradient step; asymmetric updates both factors simultaneously."""
    x, y = state.x, state.y
    if y is None:
        x_new = x - eta * (x @ x.T - a) @ x
        y_new = None
    else:
        residual = x @ y.T - a
        x_new = x - eta * residual @ y
        y_new = y - eta * residual.T @ x
    return IterState(t=state.t + 1, x=x_new, y=y_new, last_error=state.last_error)


def scaledgd_lambda_step(x, a, eta, lam):
    """Damped preconditioner (x^T x + lam I)^{-1}; defined for any rank."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    grad = (x @ x.T - a) @ x
    if lam == 0:
        return x - eta * gram_solve(x, grad)
    g = x.T @ x
    g = (g + g.T) / 2.0 + lam * np.eye(x.shape[1])
    c, low = scipy.linalg.cho_factor(g, check_finite=False)
    return x - eta * scipy.linalg.cho_solve((c, low), grad.T, check_finite=False).T


def _advance(x, y, a, eta, config, t):
    if config.method == GD:
        st = gd_step(IterState(t=t, x=x, y=y, last_error=math.nan), a, eta)
        return st.x, st.y
    if config.method == SCALEDGD_LAMBDA:
        return scaledgd_lambda_step(x, a, eta, config.lam), None
    mode = PSEUDO if config.method == SCALEDGD_PINV else INVERSE
    if y is None:
        return scaledgd_sym_step(x, a, eta, mode), None
    st = scaledgd_asym_step(IterState(t=t, x=x, y=y, last_error=math.nan), a, eta, mode)
    return st.x, st.y


def run(problem, init, config, config_echo=None):
    """Iterate on the problem from the given init until a stop condition.

    Records one IterRecord per visited iterate (including the final one), so
    a budget-terminated run with max_iters = N holds records t = 0 .. N.
    max_iters = 0 short-circuits to an empty budget trace. Reruns with
    identical inputs produce identical traces except for elapsed_ns.
    """
    symmetric = init.y0 is None
    if symmetric != problem.symmetric:
        raise ValueError("init and problem disagree about symmetry")
    if config.method == SCALEDGD_LAMBDA and not symmetric:
        raise ValueError("the damped method is defined for symmetric problems only")
    trace = Trace(records=[], termination=BUDGET, config=dict(config_echo or {}))
    if config.max_iters == 0:
        return trace
    if config.method == SCALEDGD and not init.rank_ok:
        trace.termination = REFUSED_START
        return trace

    a = problem.a
    x = np.array(init.x0, dtype=np.float64)
    y = None if init.y0 is None else np.array(init.y0, dtype=np.float64)
    a_pinv = pinv(a)
    u_basis, v_basis = problem.u, problem.v
    underparam = problem.regime == UP
    entry = 2.0 / (3.0 * problem.kappa**2)
    phase2 = False
    start = time.perf_counter_ns()
    t = 0
    while True:
        error = optimality_error(x, a, y)
        finite = math.isfinite(error)
        if finite and (underparam or config.record_diagnostics):
            wopt = weak_opt_residual(x, a_pinv, y)
        else:
            wopt = math.nan
        if finite and config.record_diagnostics:
            score = core_sigma_min(
                x,
                u_basis,
                y=y,
                v_basis=None if y is None else v_basis,
                a_pinv=a_pinv,
                underparam=underparam,
            )
            leak_x = residual_leakage(x, u_basis)
            leak_y = math.nan if y is None else residual_leakage(y, v_basis)
        else:
            score = leak_x = leak_y = math.nan
        if config.schedule.kind == TWO_PHASE and math.isfinite(error):
            phase2 = phase2 or error <= entry
        eta_t = config.schedule.eta_at(t, phase2)
        trace.records.append(
            IterRecord(
                t=t,
                error=error,
                sigma_r_core=score,
                leakage_x=leak_x,
                leakage_y=leak_y,
                weak_opt=wopt,
                eta_used=eta_t,
                elapsed_ns=time.perf_counter_ns() - start,
            )
        )
        if not finite:
            trace.termination = DIVERGED
            return trace
        metric = wopt if underparam else error
        if metric <= config.tol:
            trace.termination = CONVERGED
            return trace
        if t >= config.max_iters:
            trace.termination = BUDGET
            return trace
        try:
            x, y = _advance(x, y, a, eta_t, config, t)
        except SingularGramError:
            trace.termination = SINGULAR_GRAM
            return trace
        t += 1
