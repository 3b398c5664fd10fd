import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squeezeclock import presets
from squeezeclock.clock import (COMPARISON_CONTRAST, ConfigurationError, SequenceConfig,
                                ShotRecords, SpinRecord, css_contrast_pair,
                                expected_comparison, expected_enhancement_db,
                                fit_ramsey_fringe, laser_phase_noise, ramsey_fringe_scan,
                                run_sequence, sss_contrast_pair)
from squeezeclock.core import EnsembleSpec
from squeezeclock.rng import stream
from squeezeclock.squeezing import SqueezeConfig
from squeezeclock.stats import optimize_estimators, pearson, solve_estimators

ENS = EnsembleSpec(2000, 2000, contrast_i=0.55, contrast_f=0.50)


def config(mode="css_css", scale=0.0, laser=0.0, n_shots=20000, **kw):
    sq = SqueezeConfig(1e4, 0.28, scale, final_photon_ratio=kw.pop("ratio", 1.0))
    return SequenceConfig(mode, ENS, ENS, sq, n_shots=n_shots, laser_noise_std=laser, **kw)


@pytest.mark.parametrize("kw", [
    dict(mode="csss"),
    dict(laser_noise_kind="pink"),
    dict(ramsey_time=0.0),
    dict(cycle_time=1e-3),
    dict(n_shots=1),
    dict(laser_noise_std=-0.1),
    dict(asymmetry=-1.0),
])
def test_configuration_errors(kw):
    base = dict(mode="css_css", ensemble_a=ENS, ensemble_b=ENS,
                squeeze=SqueezeConfig(1e4, 0.28, 10.0))
    with pytest.raises(ConfigurationError):
        SequenceConfig(**{**base, **kw})


def test_squeezed_mode_needs_probe():
    with pytest.raises(ConfigurationError):
        SequenceConfig("sss_sss", ENS, ENS, SqueezeConfig(0.0, 0.28, 10.0))


def test_contrast_selection():
    cfg = config()
    assert cfg.contrast(ENS) == 0.55
    assert cfg.with_mode("sss_sss").contrast(ENS) == 0.50
    assert cfg.fringe_amplitude(ENS) == 2000
    assert replace(cfg, ramsey_fringe_amplitude=10.0).fringe_amplitude(ENS) == 10.0


def test_contrast_pairs():
    assert css_contrast_pair() == (0.55, 0.55)
    assert sss_contrast_pair() == COMPARISON_CONTRAST
    assert sss_contrast_pair("single") == (0.71, 0.60)
    assert css_contrast_pair("single") == (0.71, 0.71)
    with pytest.raises(ValueError):
        css_contrast_pair("other")


def test_projection_noise_of_coherent_state():
    rec = run_sequence(config(n_shots=100_000), seed=1)
    n = ENS.n_eff
    for col in (rec.dn_a_final, rec.dn_b_final):
        assert np.var(col, ddof=1) == pytest.approx(n, rel=0.02)
        assert np.all(np.abs(col) <= n)
    np.testing.assert_array_equal(rec.dn_a_pre, 0.0)


def test_noiseless_premeasurement_reads_final_population():
    rec = run_sequence(config("sss_sss", n_shots=2000), seed=2)
    np.testing.assert_array_equal(rec.dn_a_pre, rec.dn_a_final)
    assert np.all(np.abs(rec.dn_b_pre) <= ENS.n_eff)


def test_runs_are_reproducible():
    cfg = config("sss_sss", scale=300.0, laser=0.1, n_shots=500)
    a, b = run_sequence(cfg, 5), run_sequence(cfg, 5)
    for k, v in a.columns().items():
        assert v.tobytes() == b.columns()[k].tobytes()
    assert not np.array_equal(run_sequence(cfg, 6).dn_a_final, a.dn_a_final)


def test_common_laser_noise_correlates_ensembles():
    cfg = config("sss_sss", scale=300.0, laser=10 / math.sqrt(ENS.n_eff))
    rec = run_sequence(cfg, 3)
    assert pearson(rec.dn_a_final, rec.dn_b_final) > 0.9


@pytest.mark.parametrize("factor", [0.0, 1.0, 10.0])
def test_common_mode_rejection(factor):
    # laser noise in units of the single-ensemble projection-noise phase
    qpn_phase = 1 / (ENS.contrast_i * math.sqrt(ENS.n_eff))
    cfg = config("css_css", scale=300.0, laser=factor * qpn_phase, n_shots=40_000, ratio=50)
    rec = run_sequence(cfg, 4)
    alpha = ENS.n_eff * ENS.contrast_i
    est, phase = optimize_estimators(rec, alpha)
    floor = expected_comparison(replace(cfg, laser_noise_std=0.0)).phase_std
    expected = expected_comparison(cfg).phase_std
    assert np.std(phase, ddof=1) == pytest.approx(expected, rel=0.02)
    # rejection leaves at most the beta_d < 1 penalty on B's projection noise
    assert np.std(phase, ddof=1) < 1.02 * floor * math.sqrt(2)
    if factor > 0:
        assert est.full[2] == pytest.approx(expected_comparison(cfg).beta_d, abs=0.02)


def test_simulation_matches_expected_estimators():
    cfg = presets.comparison_config(n_shots=40_000)
    exp = expected_comparison(cfg)
    rec = run_sequence(cfg, 7)
    est, phase = optimize_estimators(rec, cfg.fringe_amplitude(cfg.ensemble_a)
                                     * cfg.contrast(cfg.ensemble_a))
    assert est.full[0] == pytest.approx(exp.beta_a, abs=0.02)
    assert est.full[1] == pytest.approx(exp.beta_b, abs=0.02)
    assert est.full[2] == pytest.approx(exp.beta_d, abs=0.01)
    assert np.std(phase, ddof=1) == pytest.approx(exp.phase_std, rel=0.02)


def test_calibrated_preset_targets():
    cfg = presets.comparison_config()
    assert expected_comparison(cfg).beta_d == pytest.approx(0.907, abs=1e-9)
    assert expected_enhancement_db(cfg) == pytest.approx(2.0, abs=1e-6)
    assert cfg.asymmetry == pytest.approx(0.10005, abs=1e-4)
    assert cfg.squeeze.photons_per_measurement == pytest.approx(16395.5, rel=1e-3)
    assert expected_comparison(cfg).beta_a == pytest.approx(0.4814, abs=1e-3)


def test_css_estimators_vanish_in_expectation():
    exp = expected_comparison(presets.comparison_config(mode="css_css"))
    assert exp.beta_a == 0.0 and exp.beta_b == 0.0


def test_shot_order_does_not_change_estimators():
    cfg = config("sss_sss", scale=300.0, laser=0.05, n_shots=5000)
    rec = run_sequence(cfg, 8)
    perm = stream(1).permutation(len(rec))
    a = solve_estimators(rec)
    b = solve_estimators(rec[perm])
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_record_views():
    rec = run_sequence(config(n_shots=10), 1)
    recs = list(rec)
    assert isinstance(recs[3], SpinRecord) and recs[3].shot_index == 3
    back = ShotRecords.from_records(recs)
    for k, v in rec.columns().items():
        np.testing.assert_array_equal(v, back.columns()[k])
    assert len(rec[2:5]) == 3
    assert rec[4] == recs[4]
    with pytest.raises(ValueError):
        ShotRecords(np.zeros(3), np.zeros(2), np.zeros(3), np.zeros(3))


def test_white_laser_noise():
    x = laser_phase_noise(100_000, 0.3, stream(1))
    assert np.std(x) == pytest.approx(0.3, rel=0.01)
    np.testing.assert_array_equal(laser_phase_noise(10, 0.0, stream(1)), 0.0)


def test_flicker_laser_noise():
    x = laser_phase_noise(2 ** 14, 0.3, stream(2), "flicker")
    assert np.std(x) == pytest.approx(0.3, rel=1e-12)
    # flicker noise is correlated shot to shot, white noise is not
    assert np.corrcoef(x[:-1], x[1:])[0, 1] > 0.3


def test_flicker_option_runs():
    cfg = config("css_css", laser=0.1, n_shots=1024, laser_noise_kind="flicker")
    rec = run_sequence(cfg, 1)
    assert len(rec) == 1024


def test_exact_fringe():
    cfg = presets.comparison_config(mode="css_css")
    phases = np.linspace(-np.pi, np.pi, 25, endpoint=False)
    _, mean, sem = ramsey_fringe_scan(cfg, phases, 1, projection_noise=False)
    fit = fit_ramsey_fringe(phases, mean)
    alpha = cfg.fringe_amplitude(cfg.ensemble_a)
    assert fit.amplitude / alpha == pytest.approx(0.55, abs=1e-4)
    assert fit.phase_offset == pytest.approx(0.0, abs=1e-12)
    assert fit.amplitude_err < 1e-9 * alpha
    np.testing.assert_array_equal(sem, 0.0)


@pytest.mark.parametrize("mode, contrast", [("css_css", 0.55), ("sss_sss", 0.50)])
def test_sampled_fringe_contrast(mode, contrast):
    cfg = presets.comparison_config(mode=mode)
    phases = np.linspace(-np.pi, np.pi, 25, endpoint=False)
    _, mean, sem = ramsey_fringe_scan(cfg, phases, 2, shots_per_phase=200)
    fit = fit_ramsey_fringe(phases, mean)
    alpha = cfg.fringe_amplitude(cfg.ensemble_a)
    assert fit.amplitude / alpha == pytest.approx(contrast, rel=0.02)
    assert abs(fit.amplitude / alpha - contrast) < 3 * fit.amplitude_err / alpha + 1e-3
    assert np.all(sem > 0)


def test_fringe_scan_needs_phases():
    with pytest.raises(ValueError):
        ramsey_fringe_scan(config(), [0.0, 1.0], 1)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-3.0, 3.0), st.floats(-5.0, 5.0))
def test_fringe_fit_recovers_sinusoid(amp, phi0, off):
    ph = np.linspace(0, 2 * np.pi, 13, endpoint=False)
    fit = fit_ramsey_fringe(ph, amp * np.sin(ph - phi0) + off)
    assert fit.amplitude == pytest.approx(amp, rel=1e-9)
    assert fit.offset == pytest.approx(off, abs=1e-9)
    assert math.remainder(fit.phase_offset - phi0, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-0.5, 1.0))
def test_expected_beta_d_bounded(laser, asym):
    cfg = replace(config("sss_sss", scale=300.0, laser=laser), asymmetry=asym)
    exp = expected_comparison(cfg)
    assert 0 <= exp.beta_d * (1 + asym) <= 1 + 1e-12
    assert 0 < exp.beta_a < 1
