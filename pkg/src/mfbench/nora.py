"""
Adapter finetuning of a linear model, driven as asymmetric factorization.

Training W0 + X Y^T toward a target B is the factorization problem on
a_eff = B - W0, so every diagnostic here is reported against a_eff. Two
variants: plain descent from the sketch init, and the preconditioned one
with damped Gram inverses and optional Frobenius normalization.
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
    SINGULAR_GRAM,
    IterRecord,
    Trace,
    core_sigma_min,
    optimality_error,
    residual_leakage,
    weak_opt_residual,
)
from .linalg import SingularGramError, as_matrix, gaussian, gram_solve, svd
from .solvers import IterState

NORA = "nora"
NORA_PLUS = "nora_plus"
_VARIANTS = (NORA, NORA_PLUS)


@dataclass(frozen=True)
class LinearFinetuneProblem:
    """Pretrained weight w0, whitened-data target b, and the adapter rank."""

    w0: np.ndarray
    b: np.ndarray
    r: int

    def __post_init__(self):
        w0 = as_matrix(self.w0, "w0")
        b = as_matrix(self.b, "b")
        if w0.shape != b.shape:
            raise ValueError(f"w0 and b shapes differ: {w0.shape} vs {b.shape}")
        if self.r < 1:
            raise ValueError(f"adapter rank must be >= 1, got {self.r}")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "b", b)

    @property
    def a_eff(self):
        """The factorization target this finetune is equivalent to."""
        return self.b - self.w0


@dataclass(frozen=True)
class NoraConfig:
    xi: float = 0.1
    lam: float = 1e-6
    lr: float = 0.5
    normalize: bool = True
    max_iters: int = 500
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"xi must be > 0, got {self.xi}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


def nora_init(problem, xi, seed):
    """x0 = w0 @ Omega, y0 = 0: the adapter starts as an exact no-op."""
    n = problem.w0.shape[1]
    omega = gaussian(n, problem.r, xi, seed)
    x0 = problem.w0 @ omega
    y0 = np.zeros((n, problem.r))
    return x0, y0


def _damped_precondition(grad, factor, lam, normalize):
    """grad @ (factor^T factor + lam I)^{-1}, optionally Frobenius-normalized.

    The normalization divides the product by the Frobenius norm of the
    inverted matrix (multiply, then scale), with that norm taken from the
    eigenvalues so the inverse is never formed.
    """
    if lam == 0 and not normalize:
        return gram_solve(factor, grad)
    k = factor.shape[1]
    g = factor.T @ factor
    g = (g + g.T) / 2.0
    if lam > 0:
        g = g + lam * np.eye(k)
    try:
        c, low = scipy.linalg.cho_factor(g, check_finite=False)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(g)
        raise SingularGramError(math.sqrt(max(float(eig[0]), 0.0)))
    out = scipy.linalg.cho_solve((c, low), grad.T, check_finite=False).T
    if normalize:
        eig = np.linalg.eigvalsh(g)
        out = out / math.sqrt(float(np.sum(1.0 / eig**2)))
    return out


def nora_step(state, problem, config):
    """Plain descent on both adapter factors."""
    x, y = state.x, state.y
    residual = problem.w0 + x @ y.T - problem.b
    x_new = x - config.lr * (residual @ y)
    y_new = y - config.lr * (residual.T @ x)
    return IterState(t=state.t + 1, x=x_new, y=y_new, last_error=state.last_error)


def nora_plus_step(state, problem, config):
    """Preconditioned descent; the X factor is guarded at t = 0.

    Y's gradient is always right-multiplied by the damped inverse of X's
    Gram. X's gradient gets the symmetric treatment only for t > 0; at t = 0
    it is applied raw, which is a no-op because y starts at zero.
    """
    x, y, t = state.x, state.y, state.t
    residual = problem.w0 + x @ y.T - problem.b
    g_x = residual @ y
    g_y = _damped_precondition(residual.T @ x, x, config.lam, config.normalize)
    if t > 0:
        g_x = _damped_precondition(g_x, y, config.lam, config.normalize)
    return IterState(
        t=t + 1,
        x=x - config.lr * g_x,
        y=y - config.lr * g_y,
        last_error=state.last_error,
    )


def run_nora(problem, config, variant=NORA_PLUS):
    """Train the adapter and trace diagnostics against a_eff = b - w0.

    Termination mirrors the solver run loop: converged when the metric
    (weak-optimality residual if the adapter rank is below rank(a_eff), else
    the optimality error) reaches tol, budget at max_iters, diverged on
    non-finite error, singular-gram if a damped solve fails at lam = 0.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    x0, y0 = nora_init(problem, config.xi, config.seed)
    a_eff = problem.a_eff
    d = svd(a_eff)
    if d.rank:
        a_pinv = (d.v / d.s) @ d.u.T
    else:
        a_pinv = np.zeros((a_eff.shape[1], a_eff.shape[0]))
    u_basis, v_basis = d.u, d.v
    underparam = problem.r < d.rank
    step = nora_plus_step if variant == NORA_PLUS else nora_step
    trace = Trace(
        records=[],
        termination=BUDGET,
        config={
            "task": "nora",
            "variant": variant,
            "m": problem.w0.shape[0],
            "n": problem.w0.shape[1],
            "r": problem.r,
            "r_a": d.rank,
            "xi": config.xi,
            "lambda": config.lam,
            "lr": config.lr,
            "normalize": config.normalize,
            "max_iters": config.max_iters,
            "tol": config.tol,
            "seed": config.seed,
        },
    )
    if config.max_iters == 0:
        return trace
    state = IterState(t=0, x=x0, y=y0, last_error=math.nan)
    start = time.perf_counter_ns()
    while True:
        error = optimality_error(state.x, a_eff, state.y)
        wopt = weak_opt_residual(state.x, a_pinv, state.y)
        score = core_sigma_min(
            state.x,
            u_basis,
            y=state.y,
            v_basis=v_basis,
            a_pinv=a_pinv,
            underparam=underparam,
        )
        trace.records.append(
            IterRecord(
                t=state.t,
                error=error,
                sigma_r_core=score,
                leakage_x=residual_leakage(state.x, u_basis),
                leakage_y=residual_leakage(state.y, v_basis),
                weak_opt=wopt,
                eta_used=config.lr,
                elapsed_ns=time.perf_counter_ns() - start,
            )
        )
        if not math.isfinite(error):
            trace.termination = DIVERGED
            return trace
        metric = wopt if underparam else error
        if metric <= config.tol:
            trace.termination = CONVERGED
            return trace
        if state.t >= config.max_iters:
            trace.termination = BUDGET
            return trace
        try:
            state = step(state, problem, config)
        except SingularGramError:
            trace.termination = SINGULAR_GRAM
            return trace
