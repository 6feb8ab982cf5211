import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerchaos.potentials import (
    PotentialSpec,
    UndefinedScaleError,
    derivative,
    double_well,
    harmonic,
    inverted_oscillator,
    min_nonlinearity_scale,
    nonlinearity_scale,
)


def test_eval_presets():
    assert harmonic().eval(2.0) == pytest.approx(2.0)
    assert inverted_oscillator(1.0).eval(2.0) == pytest.approx(-2.0)
    assert double_well(drive_amplitude=0.0).eval(1.0) == pytest.approx(-0.25)


def test_eval_includes_drive():
    spec = double_well()
    assert spec.eval(1.0, 0.0) == pytest.approx(-0.25 + 0.3)
    assert spec.eval(1.0, math.pi / 2) == pytest.approx(-0.25, abs=1e-15)


def test_derivative_examples():
    quartic = PotentialSpec((0, 0, 0, 0, 0.25))
    assert derivative(quartic, 3, 2.0) == pytest.approx(12.0)
    dw = double_well()
    assert derivative(dw, 1, 1.0, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    # the drive only enters at first order
    for order in range(2, 8):
        assert dw.derivative(order, 0.7, 0.0) == pytest.approx(double_well(drive_amplitude=0).derivative(order, 0.7))
    assert dw.derivative(6, 0.3) == 0.0


def test_derivative_vectorised():
    x = np.linspace(-1, 1, 5)
    assert double_well().derivative(2, x).shape == (5,)


def test_invalid_specs():
    with pytest.raises(ValueError):
        PotentialSpec(tuple(range(14)))
    with pytest.raises(ValueError):
        PotentialSpec((0.0, math.inf))
    with pytest.raises(ValueError):
        PotentialSpec((0.0,), mass=0.0)
    with pytest.raises(ValueError):
        PotentialSpec((0.0,), drive_amplitude=math.nan)


def test_nonlinearity_scale_examples():
    assert nonlinearity_scale(harmonic(), 1, 1.0) == math.inf
    assert nonlinearity_scale(harmonic(), 3, 1.0) == math.inf
    assert nonlinearity_scale(PotentialSpec((0, 0, 0, 0, 0.25)), 1, 2.0) == pytest.approx(math.sqrt(8 / 12), abs=1e-4)
    assert nonlinearity_scale(double_well(drive_amplitude=0), 1, 2.0) == pytest.approx(math.sqrt(0.5), abs=1e-4)


def test_nonlinearity_scale_undefined_at_rest_point():
    with pytest.raises(UndefinedScaleError):
        nonlinearity_scale(double_well(drive_amplitude=0), 1, 1.0)


def test_min_nonlinearity_scale_skips_force_free_points():
    spec = double_well(drive_amplitude=0)
    val = min_nonlinearity_scale(spec, [1.0, 2.0, 3.0])
    assert val == pytest.approx(min(nonlinearity_scale(spec, 1, x) for x in (2.0, 3.0)))


def test_chord_difference_exact_and_truncated():
    spec = PotentialSpec((0.3, -0.2, 0.5, 0.1, 0.25))
    x = np.linspace(-2, 2, 7)[:, None]
    y = np.linspace(-3, 3, 9)[None, :]
    exact = spec.eval(x + y / 2) - spec.eval(x - y / 2)
    np.testing.assert_allclose(spec.chord_difference(x, y), exact, atol=1e-12)
    # Poisson keeps the gradient only; first correction is (1/24) V''' y^3
    np.testing.assert_allclose(spec.chord_difference(x, y, n_max=0), spec.derivative(1, x) * y, atol=1e-12)
    np.testing.assert_allclose(spec.chord_difference(x, y, n_max=1) - spec.chord_difference(x, y, n_max=0),
                               spec.derivative(3, x) * y**3 / 24, atol=1e-12)


def test_harmonic_chord_difference_is_linear():
    x = np.linspace(-3, 3, 5)[:, None]
    y = np.linspace(-2, 2, 5)[None, :]
    np.testing.assert_allclose(harmonic().chord_difference(x, y), x * y, atol=1e-14)


coeffs = st.lists(st.floats(-2, 2), min_size=1, max_size=9)


@settings(max_examples=60, deadline=None)
@given(coeffs, st.integers(1, 4), st.floats(-1.5, 1.5), st.floats(-0.5, 0.5), st.floats(0, 6.3))
def test_derivative_matches_finite_differences(c, order, x, amp, t):
    import mpmath

    spec = PotentialSpec(tuple(c), drive_amplitude=amp, drive_frequency=1.0)
    mpmath.mp.dps = 40

    def v(z):
        # eval in extended precision so the difference quotient is not rounding-limited
        return sum(mpmath.mpf(ck) * z**k for k, ck in enumerate(spec.coefficients)) + amp * math.cos(t) * z

    ref = float(mpmath.diff(v, mpmath.mpf(x), order))
    got = spec.derivative(order, x, t)
    assert got == pytest.approx(ref, rel=1e-6, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(coeffs, st.floats(0.01, 100), st.floats(-2, 2), st.integers(1, 3))
def test_nonlinearity_scale_invariant_under_scaling(c, alpha, x, n):
    spec = PotentialSpec(tuple(c))
    scaled = PotentialSpec(tuple(alpha * v for v in c))
    try:
        ref = nonlinearity_scale(spec, n, x)
    except UndefinedScaleError:
        with pytest.raises(UndefinedScaleError):
            nonlinearity_scale(scaled, n, x)
        return
    got = nonlinearity_scale(scaled, n, x)
    if math.isinf(ref):
        assert math.isinf(got)
    else:
        assert got == pytest.approx(ref, rel=1e-9)
