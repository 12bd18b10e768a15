"""Target synthesis: declared spectra must survive materialization."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfbench.problems import (
    EP,
    OP,
    UP,
    TargetSpec,
    build_problem,
    classify_regime,
    format_spectrum,
    parse_spectrum,
    realized_rank,
    synthesize_factors,
    synthesize_target,
)

GEO6 = tuple((0.01) ** (i / 5) for i in range(6))


def test_spec_rejects_bad_spectra():
    with pytest.raises(ValueError):
        TargetSpec(m=4, n=4, spectrum=(), symmetric=True, seed=0)
    with pytest.raises(ValueError):
        TargetSpec(m=4, n=4, spectrum=(1.0, -0.5), symmetric=True, seed=0)
    with pytest.raises(ValueError):
        TargetSpec(m=4, n=4, spectrum=(0.5, 1.0), symmetric=True, seed=0)
    with pytest.raises(ValueError):
        TargetSpec(m=2, n=2, spectrum=(1.0, 0.5, 0.1), symmetric=True, seed=0)


def test_spec_requires_square_when_symmetric():
    with pytest.raises(ValueError):
        TargetSpec(m=3, n=4, spectrum=(1.0,), symmetric=True, seed=0)


def test_spec_derived_quantities():
    spec = TargetSpec(m=10, n=10, spectrum=(2.0, 1.0, 0.5), symmetric=True, seed=0)
    assert spec.r_a == 3
    assert spec.kappa == 4.0
    assert math.isclose(spec.fro_norm, math.sqrt(4.0 + 1.0 + 0.25))


def test_classify_regime_boundaries():
    assert classify_regime(5, 5) == EP
    assert classify_regime(5, 6) == OP
    assert classify_regime(5, 4) == UP
    with pytest.raises(ValueError):
        classify_regime(5, 0)


def test_synthesis_is_deterministic():
    spec = TargetSpec(m=20, n=20, spectrum=GEO6, symmetric=True, seed=7)
    assert np.array_equal(synthesize_target(spec), synthesize_target(spec))


def test_symmetric_target_spectrum_and_symmetry():
    spec = TargetSpec(m=30, n=30, spectrum=GEO6, symmetric=True, seed=3)
    prob = build_problem(spec, 6)
    assert np.array_equal(prob.a, prob.a.T)
    sv = np.linalg.svd(prob.a, compute_uv=False)[:6]
    assert np.allclose(sv, GEO6, rtol=1e-10)
    assert realized_rank(prob.a) == 6
    # eigenvalues are the declared values, so the target is PSD
    assert np.linalg.eigvalsh(prob.a).min() > -1e-12


def test_asymmetric_bases_are_independent_and_orthonormal():
    spec = TargetSpec(m=25, n=15, spectrum=GEO6, symmetric=False, seed=9)
    u, s, v = synthesize_factors(spec)
    assert u.shape == (25, 6) and v.shape == (15, 6)
    assert np.allclose(u.T @ u, np.eye(6), atol=1e-12)
    assert np.allclose(v.T @ v, np.eye(6), atol=1e-12)
    a = synthesize_target(spec)
    assert np.allclose((u * s) @ v.T, a)


def test_build_problem_regime_and_shape_fields():
    spec = TargetSpec(m=12, n=12, spectrum=(1.0, 0.5), symmetric=True, seed=0)
    prob = build_problem(spec, 5)
    assert prob.regime == OP
    assert prob.m == prob.n == 12
    assert prob.symmetric
    assert prob.r == 5 and prob.r_a == 2


def test_parse_spectrum_list_form():
    assert parse_spectrum("list:1.0,0.5,0.25") == (1.0, 0.5, 0.25)


def test_parse_spectrum_lin_form():
    got = parse_spectrum("lin:1.0,-0.01,3,0.01")
    assert got == (1.0, 0.99, 0.98, 0.01)


def test_parse_spectrum_rejects_garbage():
    for bad in ("1.0,0.5", "geo:1,2", "lin:1.0,-0.01,3", "list:", "lin:1,0,1.5,0.1"):
        with pytest.raises(ValueError):
            parse_spectrum(bad)


@given(
    st.lists(
        st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
        min_size=1,
        max_size=8,
    )
)
@settings(max_examples=60, deadline=None)
def test_format_parse_round_trip(values):
    values = tuple(sorted(values, reverse=True))
    assert parse_spectrum(format_spectrum(values)) == values
