import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerchaos import _pycore, classical
from wignerchaos.classical import (
    TrajectoryState,
    benettin_spectrum,
    ensemble_spread,
    gaussian_cloud,
    integrate,
    load_fixture,
    tangent_step,
)
from wignerchaos.phase_space import GaussianSpec
from wignerchaos.potentials import PotentialSpec, double_well, harmonic, inverted_oscillator


def test_state_must_be_finite():
    with pytest.raises(ValueError):
        TrajectoryState(math.nan, 0.0)
    with pytest.raises(ValueError):
        TrajectoryState(0.0, math.inf)


# integrate


def test_harmonic_period_return():
    n = 10000
    tr = integrate(TrajectoryState(1.0, 0.5), harmonic(), 2 * math.pi / n, n)
    assert abs(tr.x[-1] - 1.0) <= 1e-6 and abs(tr.p[-1] - 0.5) <= 1e-6
    assert tr.t[-1] == pytest.approx(2 * math.pi)


def test_free_motion_is_straight_line():
    tr = integrate(TrajectoryState(0.5, -0.25), PotentialSpec(), 0.1, 100)
    np.testing.assert_allclose(tr.x, 0.5 - 0.25 * tr.t, atol=1e-12)
    np.testing.assert_allclose(tr.p, -0.25, atol=0)


def test_separatrix_energy_conserved():
    spec = PotentialSpec((0, 0, -0.5, 0, 0.25))
    tr = integrate(TrajectoryState(math.sqrt(2), 0.0), spec, 1e-3, 10000)
    e = tr.energy(spec)
    assert abs(e[0]) < 1e-15
    assert np.abs(e - e[0]).max() <= 1e-6


def test_static_energy_drift_relative():
    spec = double_well(drive_amplitude=0.0)
    tr = integrate(TrajectoryState(-1.2, 0.3), spec, 1e-3, 10000)
    e = tr.energy(spec)
    assert np.abs(e - e[0]).max() <= 1e-6 * abs(e[0])


# tangent map


def test_tangent_harmonic_rotates():
    dev = tangent_step(TrajectoryState(1.0, 0.0), (1.0, 0.0), harmonic(), 1e-3, 5000)
    assert np.hypot(*dev) == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(dev, [math.cos(5), -math.sin(5)], atol=1e-6)


def test_tangent_inverted_growth():
    u = np.array([1.0, 1.0]) / math.sqrt(2)
    dev = tangent_step(TrajectoryState(0.3, -0.1), u, inverted_oscillator(1.0), 1e-3, 5000)
    assert np.hypot(*dev) == pytest.approx(math.exp(5), rel=1e-4)


def test_tangent_zero_stays_zero():
    dev = tangent_step(TrajectoryState(0.3, 0.2), (0.0, 0.0), double_well(), 0.01, 1000)
    assert np.all(dev == 0)


# Benettin


def test_benettin_harmonic_zero():
    s = benettin_spectrum(TrajectoryState(1.0, 0.0), harmonic(), 0.01, 2e4)
    assert abs(s.lambda_plus) <= 1e-3
    assert s.lambda_plus >= s.lambda_minus


def test_benettin_inverted_exact():
    s = benettin_spectrum(TrajectoryState(0.0, 0.0), inverted_oscillator(1.0), 0.001, 1000.0)
    assert s.lambda_plus == pytest.approx(1.0, abs=1e-3)
    assert s.lambda_minus == pytest.approx(-1.0, abs=1e-3)


def test_benettin_driven_double_well_agrees_with_fixture():
    fx = load_fixture()
    s = benettin_spectrum(TrajectoryState(0.1, 0.2), double_well(), 0.01, 2e5, transient=200.0)
    assert s.converged
    assert abs(s.lambda_plus - fx["lambda_plus"]) <= 3 * fx["uncertainty"]
    assert abs(s.lambda_plus + s.lambda_minus) <= 2 * s.tolerance


def test_benettin_renorm_stride_halving():
    a = benettin_spectrum(TrajectoryState(0.1, 0.2), double_well(), 0.01, 5e4, renorm_stride=10)
    b = benettin_spectrum(TrajectoryState(0.1, 0.2), double_well(), 0.01, 5e4, renorm_stride=5)
    assert b.lambda_plus == pytest.approx(a.lambda_plus, rel=1e-9)


def test_benettin_flags_short_runs():
    s = benettin_spectrum(TrajectoryState(0.1, 0.2), double_well(), 0.01, 20.0)
    assert not s.converged


def test_spectrum_as_dict():
    s = benettin_spectrum(TrajectoryState(0.0, 0.0), inverted_oscillator(), 0.01, 10.0)
    d = s.as_dict()
    assert d["exponents"] == list(s.exponents)
    assert d["metadata"]["backend"] in ("cython", "python")
    assert len(d["convergence_history"]["t"]) <= 200


def test_fixture_metadata():
    fx = load_fixture()
    assert fx["version"] == 1
    assert fx["system"]["coefficients"] == [0.0, 0.0, -0.5, 0.0, 0.25]
    assert 0 < fx["uncertainty"] < 0.05 * fx["lambda_plus"]


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.0, 1.0), st.floats(0.0, 0.5))
def test_frictionless_exponents_sum_to_zero(x0, p0, A):
    s = benettin_spectrum(TrajectoryState(x0, p0), double_well(drive_amplitude=A), 0.01, 2000.0)
    assert abs(s.lambda_plus + s.lambda_minus) <= 2 * s.tolerance


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0))
def test_linear_spectra_are_eigenvalues(lam, w):
    inv = benettin_spectrum(TrajectoryState(0.0, 0.0), inverted_oscillator(lam), 1e-3, 1000.0)
    assert inv.lambda_plus == pytest.approx(lam, abs=1e-3)
    osc = benettin_spectrum(TrajectoryState(0.5, 0.0), harmonic(omega=w), 1e-3, 2000.0)
    assert abs(osc.lambda_plus) <= 1e-2


# backends


def test_backend_parity():
    from wignerchaos import _core

    if _core.BACKEND != "cython":
        pytest.skip("compiled core not built")
    from wignerchaos import _ccore

    d, dd, A, w, m = classical._args(double_well())
    a = _pycore.benettin(0.1, 0.2, 0.0, 0.01, 200, 10, d, dd, A, w, m)
    b = _ccore.benettin(0.1, 0.2, 0.0, 0.01, 200, 10, d, dd, A, w, m)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12)
    xa, pa = _pycore.verlet_trajectory(0.1, 0.2, 0.0, 0.01, 500, d, A, w, m)
    xb, pb = _ccore.verlet_trajectory(0.1, 0.2, 0.0, 0.01, 500, d, A, w, m)
    np.testing.assert_allclose(xa, xb, atol=1e-12)
    np.testing.assert_allclose(pa, pb, atol=1e-12)


# ensembles


def test_ensemble_harmonic_rotation():
    spec = GaussianSpec(1.0, 0.0, 0.5, 1.0, 0.0)
    cloud = gaussian_cloud(spec, 4000, seed=1)
    h = ensemble_spread(cloud, harmonic(), 2 * math.pi / 2000, 2 * math.pi, sample_every=500)
    np.testing.assert_allclose(h.covariance[-1], h.covariance[0], atol=1e-5)
    np.testing.assert_allclose(h.times, np.linspace(0, 2 * math.pi, 5), atol=1e-12)
    # quarter period exchanges the x and p variances
    assert h.covariance[1][0, 0] == pytest.approx(h.covariance[0][1, 1], rel=1e-4)


def test_ensemble_inverted_slope():
    cloud = gaussian_cloud(GaussianSpec(0.0, 0.0, 0.1, 0.1, 0.0), 2000, seed=2)
    h = ensemble_spread(cloud, inverted_oscillator(0.8), 1e-3, 6.0, sample_every=1000)
    top = np.log([np.linalg.eigvalsh(c)[-1] for c in h.covariance])
    slope = np.polyfit(h.times[2:], top[2:], 1)[0]
    assert slope == pytest.approx(2 * 0.8, rel=1e-3)


def test_ensemble_is_deterministic_given_seed():
    spec = GaussianSpec(0.0, 0.0, 0.3, 0.3, 0.0)
    a = ensemble_spread(gaussian_cloud(spec, 100, seed=5), double_well(), 0.01, 1.0)
    b = ensemble_spread(gaussian_cloud(spec, 100, seed=5), double_well(), 0.01, 1.0)
    assert np.array_equal(a.covariance, b.covariance)


def test_standard_errors_shape():
    h = ensemble_spread(gaussian_cloud(GaussianSpec(0, 0, 1, 1, 0), 400, seed=0), harmonic(), 0.1, 1.0)
    se = h.standard_errors()
    assert se.shape == h.covariance.shape
    assert se[0, 0, 0] == pytest.approx(math.sqrt(2 / 399) * h.covariance[0, 0, 0])


def test_moment_matched_cloud_is_exact():
    spec = GaussianSpec(-1.0, 0.5, 0.3, 0.4, 0.05)
    cloud = gaussian_cloud(spec, 5000, seed=3, moment_matched=True)
    np.testing.assert_allclose(cloud.mean(axis=0), [-1.0, 0.5], atol=1e-12)
    np.testing.assert_allclose(np.cov(cloud.T), spec.covariance, atol=1e-12)
