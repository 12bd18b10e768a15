"""
Target synthesis with a controlled spectrum, and EP/OP/UP regime bookkeeping.

A target is built from its declared singular values: orthonormal factors come
from QR of seeded Gaussian draws, so the same TargetSpec always produces the
same matrix and the spectrum of the output is exactly the declared one (up to
rounding in the two matrix products).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import gaussian, svd

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"

EP = "ep"
OP = "op"
UP = "up"


@dataclass(frozen=True)
class TargetSpec:
    """Declarative description of a synthetic target matrix."""

    m: int
    n: int
    spectrum: tuple
    symmetric: bool
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "spectrum", tuple(float(s) for s in self.spectrum))
        if self.m < 1 or self.n < 1:
            raise ValueError(f"target shape must be positive, got ({self.m}, {self.n})")
        if self.symmetric and self.m != self.n:
            raise ValueError("symmetric targets must be square")
        if len(self.spectrum) == 0:
            raise ValueError("spectrum must be non-empty")
        if len(self.spectrum) > min(self.m, self.n):
            raise ValueError(
                f"spectrum has {len(self.spectrum)} values but min(m, n) = {min(self.m, self.n)}"
            )
        if any(s <= 0 for s in self.spectrum):
            raise ValueError("spectrum values must be strictly positive")
        if any(a < b for a, b in zip(self.spectrum, self.spectrum[1:])):
            raise ValueError("spectrum must be non-increasing")

    @property
    def r_a(self):
        return len(self.spectrum)

    @property
    def kappa(self):
        """Condition number from the declared spectrum (not re-estimated)."""
        return self.spectrum[0] / self.spectrum[-1]

    @property
    def fro_norm(self):
        """Frobenius norm of the target implied by the spectrum."""
        return math.sqrt(sum(s * s for s in self.spectrum))


def classify_regime(r_a, r):
    """EP when r == r_a, OP when r > r_a, UP when r < r_a."""
    if r < 1:
        raise ValueError(f"factor rank must be >= 1, got {r}")
    if r_a < 0:
        raise ValueError(f"target rank must be >= 0, got {r_a}")
    if r == r_a:
        return EP
    return OP if r > r_a else UP


def _orthonormal(rows, k, seed):
    q, _ = np.linalg.qr(gaussian(rows, k, 1.0, seed))
    return q


def synthesize_factors(spec):
    """Return (u, s, v) with the target being u @ diag(s) @ v.T.

    Symmetric targets share u = v (an eigenbasis), asymmetric ones draw
    independent bases from seeds (seed, seed + 1).
    """
    k = spec.r_a
    s = np.array(spec.spectrum, dtype=np.float64)
    u = _orthonormal(spec.m, k, spec.seed)
    v = u if spec.symmetric else _orthonormal(spec.n, k, spec.seed + 1)
    return u, s, v


def synthesize_target(spec):
    """Materialize the target matrix A described by `spec`."""
    u, s, v = synthesize_factors(spec)
    return (u * s) @ v.T


@dataclass(frozen=True)
class Problem:
    """A target matrix paired with the factor rank the solver will use.

    `u`/`v` are the exact factor bases used during synthesis; diagnostics use
    them for leakage and alignment checks instead of re-estimating them.
    """

    a: np.ndarray
    r: int
    kind: str
    r_a: int
    kappa: float
    regime: str
    spectrum: tuple
    u: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def symmetric(self):
        return self.kind == SYMMETRIC


def build_problem(spec, r):
    """Synthesize the target and assemble the Problem record for rank r."""
    u, s, v = synthesize_factors(spec)
    a = (u * s) @ v.T
    if spec.symmetric:
        a = (a + a.T) / 2.0
    kind = SYMMETRIC if spec.symmetric else ASYMMETRIC
    return Problem(
        a=a,
        r=int(r),
        kind=kind,
        r_a=spec.r_a,
        kappa=spec.kappa,
        regime=classify_regime(spec.r_a, r),
        spectrum=spec.spectrum,
        u=u,
        v=v,
    )


def realized_rank(a):
    """Numerical rank of a materialized target (reported, never guessed)."""
    return svd(a).rank


def parse_spectrum(text):
    """Parse the CLI spectrum shorthand into a tuple of floats.

    Two forms are accepted:
      ``list:1.0,0.99,0.01``          explicit values
      ``lin:start,step,count,tail``   arithmetic sequence plus one tail value
    """
    if ":" not in text:
        raise ValueError(f"spectrum must start with 'list:' or 'lin:', got {text!r}")
    head, _, body = text.partition(":")
    try:
        values = [float(tok) for tok in body.split(",") if tok != ""]
    except ValueError as exc:
        raise ValueError(f"bad spectrum value in {text!r}: {exc}") from exc
    if head == "list":
        if not values:
            raise ValueError("list: spectrum needs at least one value")
        return tuple(values)
    if head == "lin":
        if len(values) != 4:
            raise ValueError("lin: spectrum needs exactly start,step,count,tail")
        start, step, count, tail = values
        if count != int(count) or count < 1:
            raise ValueError(f"lin: count must be a positive integer, got {count}")
        seq = [start + i * step for i in range(int(count))]
        return tuple(round(x, 12) for x in seq) + (tail,)
    raise ValueError(f"unknown spectrum form {head!r} (want list: or lin:)")


def format_spectrum(spectrum):
    """Canonical shorthand for a spectrum (inverse of parse_spectrum)."""
    return "list:" + ",".join(repr(float(s)) for s in spectrum)
