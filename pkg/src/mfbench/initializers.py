"""
Initial factor construction: sketch-based, small Gaussian, perturbed sketch,
and a gradient-oracle route that never touches the target matrix directly.
"""
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, gaussian, numerical_rank

NYSTROM = "nystrom"
SMALL_GAUSSIAN = "small_gaussian"
PERTURBED_NYSTROM = "perturbed_nystrom"
NYSTROM_VIA_GRADIENT = "nystrom_via_gradient"

_KINDS = (NYSTROM, SMALL_GAUSSIAN, PERTURBED_NYSTROM, NYSTROM_VIA_GRADIENT)


@dataclass(frozen=True)
class InitSpec:
    """Which initializer to run and the stds it needs.

    xi is the sketch std, zeta the small-init std, xi_n the additive
    perturbation std. Only the parameters of the chosen kind are validated.
    """

    kind: str = NYSTROM
    xi: float = 1.0
    zeta: float = 1e-3
    xi_n: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown init kind {self.kind!r}")
        if self.kind in (NYSTROM, PERTURBED_NYSTROM, NYSTROM_VIA_GRADIENT):
            if not self.xi > 0:
                raise ValueError(f"sketch std xi must be > 0, got {self.xi}")
        if self.kind == SMALL_GAUSSIAN:
            if not self.zeta > 0:
                raise ValueError(f"small-init std zeta must be > 0, got {self.zeta}")
        if self.kind == PERTURBED_NYSTROM:
            if not self.xi_n >= 0:
                raise ValueError(f"perturbation std xi_n must be >= 0, got {self.xi_n}")


@dataclass(frozen=True)
class InitResult:
    """Initial factors plus the post-hoc rank check.

    y0 is None for symmetric problems. rank_ok records whether the numerical
    rank of x0 equals min(r, r_a); solvers refuse to start when it is false
    rather than iterating on a degenerate draw.
    """

    x0: np.ndarray
    y0: np.ndarray
    rank_ok: bool


def _rank_ok(x0, r, r_a):
    expected = min(r, r_a) if r_a is not None else min(r, min(x0.shape))
    return numerical_rank(x0) == expected


def _sketch(n_rows, r, spec):
    return gaussian(n_rows, r, spec.xi, spec.seed)


def nystrom_init(a, r, spec, symmetric=True, r_a=None):
    """x0 = A @ Omega with Omega ~ N(0, xi^2); asymmetric adds y0 = 0.

    The sketch has m rows for symmetric targets and n rows otherwise. When
    r_a is not given it is measured from A.
    """
    a = as_matrix(a, "a")
    if r < 1:
        raise ValueError(f"factor rank must be >= 1, got {r}")
    if spec.kind != NYSTROM:
        raise ValueError(f"nystrom_init called with kind {spec.kind!r}")
    m, n = a.shape
    if symmetric and m != n:
        raise ValueError("symmetric init needs a square target")
    omega = _sketch(m if symmetric else n, r, spec)
    x0 = a @ omega
    if r_a is None:
        r_a = numerical_rank(a)
    y0 = None if symmetric else np.zeros((n, r))
    return InitResult(x0=x0, y0=y0, rank_ok=_rank_ok(x0, r, r_a))


def small_gaussian_init(shape, r, spec, symmetric=True):
    """Both factors i.i.d. N(0, zeta^2); the classic tiny random start."""
    m, n = shape
    if r < 1:
        raise ValueError(f"factor rank must be >= 1, got {r}")
    if spec.kind != SMALL_GAUSSIAN:
        raise ValueError(f"small_gaussian_init called with kind {spec.kind!r}")
    x0 = gaussian(m, r, spec.zeta, spec.seed)
    y0 = None if symmetric else gaussian(n, r, spec.zeta, spec.seed + 1)
    return InitResult(x0=x0, y0=y0, rank_ok=_rank_ok(x0, r, None))


def perturbed_nystrom_init(a, r, spec, symmetric=True, r_a=None):
    """x0 = A @ Omega + N with N ~ N(0, xi_n^2).

    xi_n = 0 skips the noise draw entirely, so the output is bit-identical
    to nystrom_init at the same seed. The noise uses seed + 1.
    """
    a = as_matrix(a, "a")
    if r < 1:
        raise ValueError(f"factor rank must be >= 1, got {r}")
    if spec.kind != PERTURBED_NYSTROM:
        raise ValueError(f"perturbed_nystrom_init called with kind {spec.kind!r}")
    m, n = a.shape
    if symmetric and m != n:
        raise ValueError("symmetric init needs a square target")
    omega = _sketch(m if symmetric else n, r, spec)
    x0 = a @ omega
    if spec.xi_n > 0:
        x0 = x0 + gaussian(m, r, spec.xi_n, spec.seed + 1)
    if r_a is None:
        r_a = numerical_rank(a)
    y0 = None if symmetric else np.zeros((n, r))
    return InitResult(x0=x0, y0=y0, rank_ok=_rank_ok(x0, r, r_a))


def nystrom_via_gradient(grad_oracle, shape, r, spec, symmetric=True, r_a=None):
    """Recover the sketch init from gradient evaluations alone.

    Symmetric: x0 = -G0 + Omega (Omega^T Omega) where G0 is the gradient at
    Omega. Asymmetric: x0 is the negated X-gradient at (0, Omega) and y0 = 0;
    that path is a pure sign flip so it matches nystrom_init bit for bit.
    The symmetric path agrees up to cancellation round-off.

    rank_ok compares against min(r, r_a) when r_a is given; without it the
    target is assumed to have rank at least r.
    """
    m, n = shape
    if r < 1:
        raise ValueError(f"factor rank must be >= 1, got {r}")
    if spec.kind != NYSTROM_VIA_GRADIENT:
        raise ValueError(f"nystrom_via_gradient called with kind {spec.kind!r}")
    if symmetric:
        if m != n:
            raise ValueError("symmetric init needs a square target")
        omega = _sketch(m, r, spec)
        g0 = np.asarray(grad_oracle(omega))
        if g0.shape != (m, r):
            raise ValueError(
                f"gradient oracle returned shape {g0.shape}, expected {(m, r)}"
            )
        x0 = omega @ (omega.T @ omega) - g0
        y0 = None
    else:
        omega = _sketch(n, r, spec)
        g0 = np.asarray(grad_oracle(np.zeros((m, r)), omega))
        if g0.shape != (m, r):
            raise ValueError(
                f"gradient oracle returned shape {g0.shape}, expected {(m, r)}"
            )
        x0 = -g0
        y0 = np.zeros((n, r))
    expected_r_a = r_a if r_a is not None else max(m, n)
    return InitResult(x0=x0, y0=y0, rank_ok=_rank_ok(x0, r, expected_r_a))
