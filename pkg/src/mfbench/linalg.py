"""
Dense linear-algebra kernels shared by every other module.

Matrices are plain numpy float64 arrays in C (row-major) order. All functions
here are pure: same inputs, same outputs, no hidden state.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

EPS = np.finfo(np.float64).eps


class NumericalFailure(Exception):
    """The underlying decomposition did not converge."""


class SingularGramError(Exception):
    """x has (numerically) rank-deficient columns, so (x^T x)^{-1} is undefined.

    Carries ``sigma_min``, the offending smallest singular value of x.
    """

    def __init__(self, sigma_min):
        super().__init__(f"gram matrix is numerically singular (sigma_min(x) = {sigma_min:.3e})")
        self.sigma_min = float(sigma_min)


def as_matrix(a, name="matrix"):
    """Validate and return `a` as a finite float64 2-d array.

    Rejects NaN/Inf entries and non-2-d shapes. Used at problem-construction
    boundaries; inner loops operate on already-validated arrays.
    """
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(out)


def gaussian(rows, cols, std, seed):
    """Sample a rows x cols matrix with i.i.d. N(0, std^2) entries.

    The stream is keyed by `seed` (PCG64) and fills in row-major order, so the
    same (shape, std, seed) always yields the bit-identical matrix.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"gaussian shape must be positive, got ({rows}, {cols})")
    if not std > 0:
        raise ValueError(f"gaussian std must be > 0, got {std}")
    rng = np.random.default_rng(seed)
    return std * rng.standard_normal((rows, cols))


@dataclass(frozen=True)
class SvdResult:
    """Compact SVD truncated at numerical rank: a = u @ diag(s) @ v.T."""

    u: np.ndarray  # (m, k), orthonormal columns
    s: np.ndarray  # (k,), descending, all > 0
    v: np.ndarray  # (n, k), orthonormal columns

    @property
    def rank(self):
        return self.s.size


def rank_tolerance(shape, s0):
    """Singular values at or below this value count as zero."""
    return max(shape) * EPS * s0


def svd(a):
    """Compact SVD of `a`, truncated at the numerical rank.

    Singular values sigma_i <= max(m, n) * eps * sigma_1 are treated as zero
    and dropped. A zero matrix yields empty factors (k = 0).
    """
    a = np.asarray(a, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"svd did not converge: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        k = 0
    else:
        k = int(np.count_nonzero(s > rank_tolerance(a.shape, s[0])))
    return SvdResult(u=u[:, :k].copy(), s=s[:k].copy(), v=vt[:k].T.copy())


def numerical_rank(a):
    """Rank of `a` under the standard max(m,n)*eps*sigma_1 threshold."""
    return svd(a).rank


def pinv(a):
    """Moore-Penrose pseudo-inverse via the truncated compact SVD."""
    d = svd(a)
    if d.rank == 0:
        return np.zeros((a.shape[1], a.shape[0]))
    return (d.v / d.s) @ d.u.T


def gram_solve(x, b):
    """Return b @ (x^T x)^{-1} via a Cholesky factorization of the Gram matrix.

    Args:
        x: (m, r) matrix with full column rank.
        b: (k, r) right-hand side.

    Raises:
        SingularGramError: when x is numerically rank deficient, carrying
            sigma_min(x). Callers choosing pseudo-inverse semantics should use
            ``b @ pinv(x.T @ x)`` instead.

    The Gram matrix is symmetrized before factorization, and the solve goes
    through triangular systems rather than an explicit inverse (the explicit
    inverse loses roughly two digits on ill-conditioned factors).
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, r = x.shape
    sv = np.linalg.svd(x, compute_uv=False)
    sigma_min = float(sv[-1]) if r <= m and sv.size == r else 0.0
    if sv.size == 0 or sv[0] == 0.0 or sigma_min <= rank_tolerance(x.shape, sv[0]):
        raise SingularGramError(sigma_min)
    g = x.T @ x
    g = (g + g.T) / 2.0
    try:
        c, low = scipy.linalg.cho_factor(g)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by the rank check
        raise SingularGramError(sigma_min) from exc
    return scipy.linalg.cho_solve((c, low), b.T).T
