import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squeezeclock.core import (CavityParams, EnsembleSpec, SpinProjection, cooperativity,
                               db_from_ratio, hz, khz, ratio_from_db, to_hz, to_khz)


def params(g_khz=5.2, kappa_khz=158.0, gamma_khz=7.48):
    return CavityParams(khz(g_khz), khz(kappa_khz), khz(gamma_khz), khz(1000.0))


@pytest.mark.parametrize("ratio, db", [(1.0, 0.0), (100.0, 20.0), (10 ** -0.48, -4.8)])
def test_db_examples(ratio, db):
    assert db_from_ratio(ratio) == pytest.approx(db, abs=1e-12)


def test_db_of_measured_noise_ratio():
    assert db_from_ratio(0.331) == pytest.approx(-4.80, abs=0.005)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_db_rejects_non_positive(bad):
    with pytest.raises(ValueError):
        db_from_ratio(bad)


@given(st.floats(-60, 60))
def test_db_round_trip(x):
    assert db_from_ratio(ratio_from_db(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_db_vectorized():
    np.testing.assert_allclose(db_from_ratio([1.0, 10.0]), [0.0, 10.0])


@given(st.floats(1e-3, 1e9))
def test_angular_frequency_round_trip(f):
    assert to_hz(hz(f)) == pytest.approx(f, rel=1e-15)
    assert to_khz(khz(f)) == pytest.approx(f, rel=1e-15)


def test_cooperativity_value():
    # 4 g^2 / (kappa Gamma) in plain arithmetic
    assert cooperativity(params()) == pytest.approx(4 * 5.2 ** 2 / (158.0 * 7.48), rel=1e-14)
    assert cooperativity(params()) == pytest.approx(0.0915183104, rel=1e-9)


def test_cooperativity_uncoupled():
    assert cooperativity(params(g_khz=0.0)) == 0.0


def test_collective_cooperativity():
    assert 1e4 * cooperativity(params()) == pytest.approx(915.18, abs=0.01)


@given(st.floats(0.1, 50), st.floats(1.5, 4.0), st.floats(1.5, 4.0))
def test_cooperativity_scaling(g, a, b):
    base = cooperativity(params(g_khz=g))
    assert cooperativity(params(g_khz=g * math.sqrt(a))) == pytest.approx(a * base, rel=1e-12)
    assert cooperativity(params(g_khz=g, kappa_khz=158.0 * b)) == pytest.approx(base / b, rel=1e-12)
    assert cooperativity(params(g_khz=g, gamma_khz=7.48 * b)) == pytest.approx(base / b, rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(kappa_khz=5.0),        # kappa below Gamma
    dict(g_khz=-1.0),
    dict(gamma_khz=0.0),
])
def test_cavity_params_invariants(kwargs):
    with pytest.raises(ValueError):
        params(**kwargs)


def test_cavity_waist_shorter_than_cavity():
    with pytest.raises(ValueError):
        CavityParams(khz(5.2), khz(158), khz(7.48), khz(1000), w0=0.1, cavity_length=0.05)


def test_ensemble_invariants():
    EnsembleSpec(100, 50, contrast_i=0.7, contrast_f=0.6)
    with pytest.raises(ValueError):
        EnsembleSpec(100, 150)
    with pytest.raises(ValueError):
        EnsembleSpec(100, 50, contrast_i=0.5, contrast_f=0.6)
    with pytest.raises(ValueError):
        EnsembleSpec(100, 50, sigma_z=-1e-6)


def test_spin_projection():
    s = SpinProjection(60, 40)
    assert s.jz == 10.0
    assert s.n_atoms == 100
    s.check_within(100)
    with pytest.raises(ValueError):
        s.check_within(99)
    with pytest.raises(ValueError):
        SpinProjection(-1, 3)
