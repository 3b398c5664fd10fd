"""Two-ensemble differential clock sequence.

Per shot and per ensemble (population differences ``dN = 2 J_z``):

* the collective spin starts in a CSS, ``J_z`` drawn from a binomial over
  all ``n_eff`` atoms;
* ``sss_sss``: a QND pre-measurement reads ``J_z`` with the pre-measurement
  readout noise; ``css_css``: the probe is off and the pre channel records
  readout noise only;
* the pre-measured ``J_z`` fluctuation is carried unchanged to the final
  readout, while the Ramsey phase enters through the fringe slope
  ``alpha * C`` (``C = C_i`` for CSS, ``C_f`` after probing). Atoms outside
  the contrast fraction add projection noise but no signal;
* the common laser phase reaches ensemble B scaled by ``1 + asymmetry``;
* the final readout adds noise at ``final_photon_ratio`` times the
  pre-measurement photons.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import EnsembleSpec
from .rng import stream
from .squeezing import (ConditionalState, SqueezeConfig, css_projection, detection_noise,
                        final_detection_noise, qnd_measure)

MODES = ("css_css", "sss_sss")

#: Contrast pairs (C_i, C_f) measured for the single-ensemble squeezing study
#: and for the two-ensemble comparison sequence.
SINGLE_ENSEMBLE_CONTRAST = (0.71, 0.60)
COMPARISON_CONTRAST = (0.55, 0.50)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SequenceConfig:
    mode: str
    ensemble_a: EnsembleSpec
    ensemble_b: EnsembleSpec
    squeeze: SqueezeConfig
    ramsey_time: float = 14e-3
    cycle_time: float = 5.0
    n_shots: int = 20000
    laser_noise_std: float = 0.1
    laser_noise_kind: str = "white"
    asymmetry: float = 0.0
    separation: float = 150e-6
    ramsey_fringe_amplitude: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.laser_noise_kind not in ("white", "flicker"):
            raise ConfigurationError("laser_noise_kind must be 'white' or 'flicker'")
        if not self.ramsey_time > 0:
            raise ConfigurationError("ramsey_time must be > 0")
        if not self.cycle_time >= self.ramsey_time:
            raise ConfigurationError("cycle_time must be >= ramsey_time")
        if self.n_shots < 2:
            raise ConfigurationError("n_shots must be >= 2")
        if self.laser_noise_std < 0:
            raise ConfigurationError("laser_noise_std must be >= 0")
        if self.asymmetry <= -1:
            raise ConfigurationError("asymmetry must be > -1")
        if self.mode == "sss_sss" and self.squeeze.photons_per_measurement <= 0:
            raise ConfigurationError("sss_sss mode needs pre-measurement photons > 0")

    def fringe_amplitude(self, ensemble: EnsembleSpec) -> float:
        """Full-contrast fringe amplitude ``alpha`` of ``dN`` for one ensemble."""
        if self.ramsey_fringe_amplitude is None:
            return ensemble.n_eff
        return self.ramsey_fringe_amplitude

    def contrast(self, ensemble: EnsembleSpec) -> float:
        return ensemble.contrast_i if self.mode == "css_css" else ensemble.contrast_f

    def with_mode(self, mode):
        return replace(self, mode=mode)


@dataclass(frozen=True)
class SpinRecord:
    shot_index: int
    dn_a_pre: float
    dn_a_final: float
    dn_b_pre: float
    dn_b_final: float


RECORD_COLUMNS = ("shot", "dn_a_pre", "dn_a_final", "dn_b_pre", "dn_b_final")


@dataclass
class ShotRecords:
    """Column view of a run's shot records; iterates as :class:`SpinRecord`."""

    dn_a_pre: np.ndarray
    dn_a_final: np.ndarray
    dn_b_pre: np.ndarray
    dn_b_final: np.ndarray
    shot: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.dn_a_pre)
        if self.shot is None:
            self.shot = np.arange(n)
        for name in RECORD_COLUMNS:
            if len(getattr(self, name)) != n:
                raise ValueError("record columns differ in length")

    @classmethod
    def from_records(cls, records):
        if isinstance(records, cls):
            return records
        recs = list(records)
        return cls(
            dn_a_pre=np.array([r.dn_a_pre for r in recs], dtype=float),
            dn_a_final=np.array([r.dn_a_final for r in recs], dtype=float),
            dn_b_pre=np.array([r.dn_b_pre for r in recs], dtype=float),
            dn_b_final=np.array([r.dn_b_final for r in recs], dtype=float),
            shot=np.array([r.shot_index for r in recs], dtype=int),
        )

    def __len__(self):
        return len(self.dn_a_pre)

    def __iter__(self):
        for i in range(len(self)):
            yield SpinRecord(int(self.shot[i]), float(self.dn_a_pre[i]), float(self.dn_a_final[i]),
                             float(self.dn_b_pre[i]), float(self.dn_b_final[i]))

    def __getitem__(self, idx):
        if isinstance(idx, slice) or isinstance(idx, np.ndarray):
            return ShotRecords(self.dn_a_pre[idx], self.dn_a_final[idx], self.dn_b_pre[idx],
                               self.dn_b_final[idx], self.shot[idx])
        return SpinRecord(int(self.shot[idx]), float(self.dn_a_pre[idx]),
                          float(self.dn_a_final[idx]), float(self.dn_b_pre[idx]),
                          float(self.dn_b_final[idx]))

    def columns(self):
        return {name: getattr(self, name) for name in RECORD_COLUMNS}


def laser_phase_noise(n, std, rng, kind="white"):
    """Common-mode laser phase per shot, white or flicker (1/f) with rms ``std``."""
    if std == 0:
        return np.zeros(n)
    w = rng.standard_normal(n)
    if kind == "white":
        return std * w
    spec = np.fft.rfft(w)
    f = np.fft.rfftfreq(n)
    f[0] = f[1]
    x = np.fft.irfft(spec / np.sqrt(f), n)
    x -= x.mean()
    return std * x / x.std()


def _ensemble_shots(config: SequenceConfig, ens: EnsembleSpec, phase, rng):
    n = len(phase)
    jz = css_projection(ens.n_eff, rng, n)
    sq = config.squeeze
    sigma_pre = detection_noise(sq)
    if config.mode == "sss_sss":
        pre, _ = qnd_measure(ConditionalState.css(ens.n_eff, ens.contrast_i), jz, sq, rng)
    else:
        # probe off: the pre channel sees readout noise with no atomic signal
        pre = sigma_pre * rng.standard_normal(n)
    slope = config.fringe_amplitude(ens) * config.contrast(ens)
    final = 2.0 * jz + slope * phase + 2.0 * final_detection_noise(sq) * rng.standard_normal(n)
    return 2.0 * np.atleast_1d(pre), final


def run_sequence(config: SequenceConfig, seed) -> ShotRecords:
    """Simulate ``config.n_shots`` shots of the differential sequence.

    Shots are generated in order from one stream per role (laser, A, B), so
    a fixed seed reproduces the records bit for bit.
    """
    n = int(config.n_shots)
    phi_l = laser_phase_noise(n, config.laser_noise_std, stream(seed, 0),
                              config.laser_noise_kind)
    pre_a, fin_a = _ensemble_shots(config, config.ensemble_a, phi_l, stream(seed, 1))
    pre_b, fin_b = _ensemble_shots(config, config.ensemble_b,
                                   (1.0 + config.asymmetry) * phi_l, stream(seed, 2))
    return ShotRecords(pre_a, fin_a, pre_b, fin_b)


# --- Ramsey fringe -----------------------------------------------------------

@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    amplitude_err: float
    phase_offset: float
    offset: float


def ramsey_fringe_scan(config: SequenceConfig, phases, seed, shots_per_phase=200,
                       ensemble="a", projection_noise=True):
    """Mean final ``dN`` versus phase of the last pi/2 pulse.

    Participating atoms (fraction ``C``) follow ``p_down = (1 + sin phase)/2``,
    the rest stay at 1/2, so the mean traces ``alpha C sin(phase)``. With
    ``projection_noise=False`` the exact expectation is returned.

    Returns ``(phases, mean_dn, sem_dn)``.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size < 5:
        raise ValueError("need at least 5 phases")
    ens = config.ensemble_a if ensemble == "a" else config.ensemble_b
    rng = stream(seed, 3)
    n_atoms = int(round(ens.n_eff))
    c = config.contrast(ens)
    amp = config.fringe_amplitude(ens)
    n_part = int(round(c * n_atoms))
    s_f = final_detection_noise(config.squeeze)
    if not projection_noise:
        return phases, amp * n_part / n_atoms * np.sin(phases), np.zeros(phases.size)
    mean = np.empty(phases.size)
    sem = np.empty(phases.size)
    for i, ph in enumerate(phases):
        down = (rng.binomial(n_part, 0.5 * (1.0 + np.sin(ph)), shots_per_phase)
                + rng.binomial(n_atoms - n_part, 0.5, shots_per_phase))
        dn = 2.0 * down - n_atoms
        # amplitude set by alpha rather than the integer atom count
        dn = dn * (amp / n_atoms) + 2.0 * s_f * rng.standard_normal(shots_per_phase)
        mean[i] = dn.mean()
        sem[i] = dn.std(ddof=1) / np.sqrt(shots_per_phase)
    return phases, mean, sem


def fit_ramsey_fringe(phases, mean_dn) -> FringeFit:
    """Linear least-squares fit of ``A sin(phase - phi0) + offset``."""
    phases = np.asarray(phases, dtype=float)
    y = np.asarray(mean_dn, dtype=float)
    X = np.column_stack([np.sin(phases), np.cos(phases), np.ones_like(phases)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    s, c, off = coef
    resid = y - X @ coef
    dof = max(len(y) - 3, 1)
    cov = np.linalg.inv(X.T @ X) * (resid @ resid) / dof
    amp = float(np.hypot(s, c))
    # gradient of hypot(s, c)
    grad = np.array([s, c]) / amp if amp > 0 else np.zeros(2)
    amp_err = float(np.sqrt(grad @ cov[:2, :2] @ grad))
    return FringeFit(amp, amp_err, float(np.arctan2(-c, s)), float(off))


def css_contrast_pair(study="comparison"):
    c_i = _preset_contrast(study)[0]
    return c_i, c_i


def sss_contrast_pair(study="comparison"):
    return _preset_contrast(study)


def _preset_contrast(study):
    if study == "comparison":
        return COMPARISON_CONTRAST
    if study == "single":
        return SINGLE_ENSEMBLE_CONTRAST
    raise ValueError(f"unknown study {study!r}")


# --- closed-form expectations -------------------------------------------------

@dataclass(frozen=True)
class ExpectedComparison:
    beta_a: float
    beta_b: float
    beta_d: float
    phase_std: float


def expected_comparison(config: SequenceConfig) -> ExpectedComparison:
    """Large-sample optimum of the estimator fit for the sequence model.

    With ``X_e = f_e - beta_e p_e``: ``beta_e = N_e / (N_e + 4 s_pre**2)`` in
    SSS mode (0 for CSS) and ``beta_D = Cov(X_A, X_B) / Var(X_B)``.
    """
    sq = config.squeeze
    s_pre = detection_noise(sq)
    s_fin = final_detection_noise(sq)
    var_l = config.laser_noise_std ** 2
    out = {}
    for key, ens, gain in (("a", config.ensemble_a, 1.0),
                           ("b", config.ensemble_b, 1.0 + config.asymmetry)):
        n = ens.n_eff
        if config.mode == "sss_sss":
            beta = n / (n + 4.0 * s_pre ** 2)
            noise = n + 4.0 * s_fin ** 2 - beta * n
        else:
            beta = 0.0
            noise = n + 4.0 * s_fin ** 2
        slope = config.fringe_amplitude(ens) * config.contrast(ens) * gain
        out[key] = (beta, noise, slope)
    (ba, na, sa), (bb, nb, sb) = out["a"], out["b"]
    cov = sa * sb * var_l
    var_b = sb * sb * var_l + nb
    beta_d = cov / var_b
    var = sa * sa * var_l + na - cov * cov / var_b
    alpha = config.fringe_amplitude(config.ensemble_a) * config.contrast(config.ensemble_a)
    return ExpectedComparison(ba, bb, beta_d, float(np.sqrt(var) / alpha))


def expected_enhancement_db(sss_config: SequenceConfig) -> float:
    css = expected_comparison(sss_config.with_mode("css_css")).phase_std
    sss = expected_comparison(sss_config.with_mode("sss_sss")).phase_std
    return 20.0 * np.log10(css / sss)
