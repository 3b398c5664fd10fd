"""Calibrated parameter sets for the strontium cavity-QED clock."""

from __future__ import annotations

from dataclasses import replace

from scipy.optimize import brentq

from .clock import (COMPARISON_CONTRAST, SINGLE_ENSEMBLE_CONTRAST, SequenceConfig,
                    expected_comparison, expected_enhancement_db)
from .core import CavityParams, EnsembleSpec, khz, mhz
from .geometry import (CloudDistribution, ModeGeometry, effective_coupling, peak_coupling,
                       thermal_sigma)
from .squeezing import SqueezeConfig, calibrate_readout, calibrate_scatter_loss, quantum_efficiency


class CalibrationError(RuntimeError):
    pass


# cavity and transition
COUPLING = khz(5.2)
KAPPA = khz(158.0)
GAMMA = khz(7.48)
DELTA_C = mhz(1.0)
WAIST = 71e-6
CAVITY_LENGTH = 6.9720e-2
PROBE_WAVELENGTH = 689e-9
NOISE_OFFSET = khz(0.76)

# cloud
TEMPERATURE = 290e-9
RADIAL_TRAP_FREQUENCY = khz(34e-3)
SIGMA_Z = 130e-6

# single-ensemble squeezing operating point
SQUEEZE_ATOMS = 2.4e4
SQUEEZE_PHOTONS = 2.3e4
OBSERVED_R_DB = -4.8
INTRINSIC_R_DB = -6.7
EXCESS_ANTISQUEEZE_DB = 9.0

# two-ensemble comparison
COMPARISON_ATOMS = 8500.0
RAMSEY_TIME = 14e-3
CYCLE_TIME = 5.0
TARGET_ENHANCEMENT_DB = 2.0
TARGET_BETA_D = 0.907


def cavity_params(g_eff=COUPLING) -> CavityParams:
    return CavityParams(g_eff=g_eff, kappa=KAPPA, gamma=GAMMA, delta_c=DELTA_C,
                        w0=WAIST, cavity_length=CAVITY_LENGTH, lambda_probe=PROBE_WAVELENGTH)


def mode_geometry() -> ModeGeometry:
    return ModeGeometry(WAIST, peak_coupling(GAMMA, PROBE_WAVELENGTH, WAIST, CAVITY_LENGTH))


def cloud() -> CloudDistribution:
    return CloudDistribution(sigma_y=thermal_sigma(TEMPERATURE, RADIAL_TRAP_FREQUENCY),
                             sigma_z=SIGMA_Z)


def squeeze_config(scatter=True) -> SqueezeConfig:
    """Readout noise, final-readout ratio and scattering loss reproducing the
    single-ensemble operating point."""
    q = quantum_efficiency()
    scale, ratio = calibrate_readout(OBSERVED_R_DB, INTRINSIC_R_DB, SQUEEZE_PHOTONS, q,
                                     SQUEEZE_ATOMS)
    loss = calibrate_scatter_loss(*SINGLE_ENSEMBLE_CONTRAST, SQUEEZE_PHOTONS) if scatter else 0.0
    return SqueezeConfig(SQUEEZE_PHOTONS, q, scale, loss, EXCESS_ANTISQUEEZE_DB, ratio)


def comparison_ensemble(n_eff=COMPARISON_ATOMS, contrast=COMPARISON_CONTRAST) -> EnsembleSpec:
    _, frac = effective_coupling(mode_geometry(), cloud())
    return EnsembleSpec(n_total=n_eff / frac, n_eff=n_eff, sigma_z=SIGMA_Z,
                        sigma_y=cloud().sigma_y, contrast_i=contrast[0], contrast_f=contrast[1])


def comparison_config(n_shots=20000, laser_noise_std=0.3, final_photon_ratio=200.0,
                      enhancement_db=TARGET_ENHANCEMENT_DB, beta_d=TARGET_BETA_D,
                      cycle_time=CYCLE_TIME, mode="sss_sss", ensemble=None,
                      ramsey_time=RAMSEY_TIME, laser_noise_kind="white",
                      detection_noise_scale=None, quantum_efficiency=None) -> SequenceConfig:
    """Two-ensemble sequence tuned to a target enhancement and ``beta_d``.

    The readout noise scale carries over from :func:`squeeze_config` unless
    given. The pre-measurement photon number is solved for
    ``enhancement_db`` and the phase-response asymmetry for ``beta_d``, both
    from the large-sample expectation; the two solves alternate until they
    agree.
    """
    base = squeeze_config()
    q = base.quantum_efficiency if quantum_efficiency is None else quantum_efficiency
    scale = base.detection_noise_scale if detection_noise_scale is None else detection_noise_scale
    sq = SqueezeConfig(SQUEEZE_PHOTONS, q, scale, 0.0, EXCESS_ANTISQUEEZE_DB, final_photon_ratio)
    ens = comparison_ensemble() if ensemble is None else ensemble
    cfg = SequenceConfig("sss_sss", ens, ens, sq, ramsey_time, cycle_time, n_shots,
                         laser_noise_std, laser_noise_kind, 0.0)

    def with_photons(c, n):
        return replace(c, squeeze=c.squeeze.with_photons(n))

    for _ in range(4):
        try:
            asym = brentq(lambda a: expected_comparison(replace(cfg, asymmetry=a)).beta_d
                          - beta_d, -0.9, 10.0, xtol=1e-12)
        except ValueError:
            raise CalibrationError(f"no phase-response asymmetry gives beta_d = {beta_d}") from None
        cfg = replace(cfg, asymmetry=asym)
        try:
            n_ph = brentq(lambda n: expected_enhancement_db(with_photons(cfg, n))
                          - enhancement_db, 1e-3, 1e12, xtol=1e-9)
        except ValueError:
            raise CalibrationError(f"no pre-measurement photon number gives an enhancement "
                                   f"of {enhancement_db} dB") from None
        cfg = with_photons(cfg, n_ph)
    return cfg.with_mode(mode)
