import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from squeezeclock import geometry
from squeezeclock.core import khz, to_khz
from squeezeclock.geometry import (CloudDistribution, ModeGeometry, QuadratureError,
                                   coupling_moments, effective_coupling,
                                   empirical_effective_coupling,
                                   ensemble_correlation_vs_separation, overlap_correlation,
                                   peak_coupling, qpn_change_db, sample_atom_couplings,
                                   thermal_sigma, transport_velocity)

import oracles

W0 = 71e-6
GAMMA = khz(7.48)
SIGMA_Y = thermal_sigma(290e-9, khz(34e-3))
MODE = ModeGeometry(W0, khz(8.6))
CLOUD = CloudDistribution(SIGMA_Y, 130e-6)


def test_peak_coupling_value():
    g0 = peak_coupling(GAMMA, 689e-9, W0, 6.9720e-2)
    assert to_khz(g0) == pytest.approx(8.6, rel=0.02)
    assert to_khz(g0) == pytest.approx(8.5595149937, rel=1e-8)
    assert g0 == pytest.approx(oracles.peak_coupling(GAMMA, 689e-9, W0, 6.9720e-2), rel=1e-8)


def test_peak_coupling_scalings():
    g0 = peak_coupling(GAMMA, 689e-9, W0, 6.9720e-2)
    assert peak_coupling(GAMMA, 689e-9, 2 * W0, 6.9720e-2) == pytest.approx(g0 / 2, rel=1e-14)
    assert peak_coupling(4 * GAMMA, 689e-9, W0, 6.9720e-2) == pytest.approx(2 * g0, rel=1e-14)
    with pytest.raises(ValueError):
        peak_coupling(GAMMA, 689e-9, 0.0, 6.9720e-2)


def test_thermal_width():
    assert SIGMA_Y == pytest.approx(oracles.thermal_sigma(290e-9, khz(34e-3)), rel=1e-8)
    assert SIGMA_Y == pytest.approx(24.656148e-6, rel=1e-6)


def test_point_cloud_coupling():
    g, frac = effective_coupling(MODE, CloudDistribution())
    assert g == pytest.approx(MODE.g0 / math.sqrt(2), rel=1e-15)
    assert to_khz(g) == pytest.approx(6.08, abs=0.005)
    assert frac == pytest.approx(1.0, rel=1e-15)


def test_effective_coupling_of_measured_cloud():
    # frozen from oracles.coupling_moments_quad (30-digit quadrature)
    g, frac = effective_coupling(MODE, CLOUD, "quad")
    assert to_khz(g) == pytest.approx(4.8080888175, rel=1e-8)
    assert frac == pytest.approx(0.34610580553, rel=1e-8)


def test_closed_form_matches_quadrature():
    gc, fc = effective_coupling(MODE, CLOUD, "closed")
    gq, fq = effective_coupling(MODE, CLOUD, "quad")
    assert gc == pytest.approx(gq, rel=1e-6)
    assert fc == pytest.approx(fq, rel=1e-6)
    s = [(1 + 4 * (x / W0) ** 2) / (1 + 8 * (x / W0) ** 2) for x in (SIGMA_Y, 130e-6)]
    assert gc ** 2 == pytest.approx(MODE.g0 ** 2 / 2 * math.sqrt(s[0] * s[1]), rel=1e-12)


def test_offset_cloud_uses_quadrature():
    mode = ModeGeometry(W0, peak_coupling(GAMMA, 689e-9, W0, 6.9720e-2))
    cloud = CloudDistribution(SIGMA_Y, 130e-6, 40e-6)
    g2, g4 = coupling_moments(mode, cloud)
    o2, o4 = oracles.coupling_moments_quad(mode.g0, W0, SIGMA_Y, 130e-6, 40e-6)
    assert g2 == pytest.approx(o2, rel=1e-8)
    assert g4 == pytest.approx(o4, rel=1e-8)
    g, frac = effective_coupling(mode, cloud)
    assert to_khz(g) == pytest.approx(4.7816671438, rel=1e-8)
    assert frac == pytest.approx(0.33171485777, rel=1e-8)


def test_quadrature_failure_is_reported(monkeypatch):
    monkeypatch.setattr(integrate, "quad", lambda *a, **k: (1.0, 0.5))
    with pytest.raises(QuadratureError, match="abserr"):
        coupling_moments(MODE, CloudDistribution(SIGMA_Y, 130e-6, 1e-6), "quad")


@settings(max_examples=50)
@given(st.floats(0, 300e-6), st.floats(0, 300e-6), st.floats(-200e-6, 200e-6))
def test_coupling_bounded_by_point_cloud(sy, sz, zc):
    g, frac = effective_coupling(MODE, CloudDistribution(sy, sz, zc), "closed")
    assert g <= MODE.g0 / math.sqrt(2) * (1 + 1e-12)
    assert 0 < frac <= 1 + 1e-12


@given(st.floats(1e-6, 300e-6), st.floats(1.01, 3.0))
def test_effective_fraction_decreases_with_width(s, k):
    f1 = effective_coupling(MODE, CloudDistribution(s, 50e-6))[1]
    f2 = effective_coupling(MODE, CloudDistribution(s * k, 50e-6))[1]
    f3 = effective_coupling(MODE, CloudDistribution(50e-6, s * k))[1]
    f4 = effective_coupling(MODE, CloudDistribution(50e-6, s))[1]
    assert f2 < f1 and f3 < f4


def test_point_cloud_samples():
    w = sample_atom_couplings(MODE, CloudDistribution(), 100, seed=1)
    np.testing.assert_array_equal(w, np.full(100, MODE.g0 ** 2 / 2))


def test_sampled_coupling_converges():
    w = sample_atom_couplings(MODE, CLOUD, 1_000_000, seed=2)
    g_mc, _ = empirical_effective_coupling(w)
    g, _ = effective_coupling(MODE, CLOUD)
    assert g_mc == pytest.approx(g, rel=0.005)


def test_sampling_is_deterministic():
    a = sample_atom_couplings(MODE, CLOUD, 1000, seed=3)
    b = sample_atom_couplings(MODE, CLOUD, 1000, seed=3)
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        sample_atom_couplings(MODE, CLOUD, 0, seed=3)


def test_transport_velocity():
    assert transport_velocity(0.0, 813e-9) == 0.0
    assert transport_velocity(khz(10.0), 813e-9) == pytest.approx(4.065e-3, rel=1e-12)
    assert transport_velocity(-khz(10.0), 813e-9) == -transport_velocity(khz(10.0), 813e-9)


@pytest.mark.parametrize("sep, rho", [
    (0.0, 1.0),
    (71e-6, 0.38134350033),
    (150e-6, 0.013528428186),
    (284e-6, 2.0001454469e-07),
])
def test_analytic_overlap(sep, rho):
    assert overlap_correlation(MODE, CLOUD, sep) == pytest.approx(rho, rel=1e-8)
    assert overlap_correlation(MODE, CLOUD, sep) == pytest.approx(
        oracles.overlap_pearson_quad(W0, 130e-6, sep), rel=1e-8)


def test_qpn_change_at_transport_separation():
    change = qpn_change_db(overlap_correlation(MODE, CLOUD, 150e-6))
    assert change == pytest.approx(-0.0591542575, rel=1e-6)
    assert abs(change) <= 0.1


def test_qpn_change_floor():
    assert qpn_change_db(1.0) == pytest.approx(-60.0)


def test_detection_noise_dilutes_overlap():
    assert overlap_correlation(MODE, CLOUD, 0.0, detection_noise=1.0) == pytest.approx(0.5)


def test_monte_carlo_identical_readings():
    r = ensemble_correlation_vs_separation(MODE, CLOUD, 0.0, n_trials=500, n_atoms=200, seed=1)
    assert r.pearson == pytest.approx(1.0, abs=1e-12)
    assert r.analytic_pearson == 1.0


def test_monte_carlo_disjoint_readings():
    r = ensemble_correlation_vs_separation(MODE, CLOUD, 1e-3, n_trials=2000, n_atoms=200,
                                           seed=2)
    assert abs(r.pearson) < 3 * max(r.pearson_err, 1 / math.sqrt(2000))


def test_monte_carlo_matches_analytic_across_separations():
    for i, sep in enumerate(np.linspace(0, 4 * W0, 9)[1:]):
        r = ensemble_correlation_vs_separation(MODE, CLOUD, sep, n_trials=2000, n_atoms=500,
                                               seed=3, stream_key=i)
        assert abs(r.pearson - r.analytic_pearson) < 3 * r.pearson_err + 1e-3, sep


def test_monte_carlo_with_detection_noise():
    r = ensemble_correlation_vs_separation(MODE, CLOUD, 50e-6, detection_noise=0.7,
                                           n_trials=4000, n_atoms=500, seed=4)
    assert abs(r.pearson - r.analytic_pearson) < 3 * r.pearson_err


def test_monte_carlo_independent_of_threads():
    a = ensemble_correlation_vs_separation(MODE, CLOUD, 100e-6, n_trials=600, n_atoms=100,
                                           seed=5, threads=1)
    b = ensemble_correlation_vs_separation(MODE, CLOUD, 100e-6, n_trials=600, n_atoms=100,
                                           seed=5, threads=3)
    assert a == b


def test_monte_carlo_argument_checks():
    with pytest.raises(ValueError):
        ensemble_correlation_vs_separation(MODE, CLOUD, 0.0, n_trials=1)
    with pytest.raises(ValueError):
        ensemble_correlation_vs_separation(MODE, CLOUD, -1e-6)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_pearson_symmetry_and_flip_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b = geometry._readings(MODE, CLOUD, 80e-6, 50, 0.0, rng, 64)
    r = geometry.pearson_or_one(a, b)
    assert geometry.pearson_or_one(b, a) == pytest.approx(r, abs=1e-12)
    assert geometry.pearson_or_one(-a, -b) == pytest.approx(r, abs=1e-12)
