"""Conditional spin squeezing by repeated QND population measurements.

Measurement model (Gaussian, valid for N >> 1), all in ``J_z`` atom units:

* readout noise ``sigma = a / sqrt(n_ph Q)`` per population measurement,
* the conditional state fuses the prior and the outcome like a scalar
  Kalman update,
* every measurement adds Q-limited backaction ``(N/4)**2 / (sigma**2 Q)``
  to the anti-squeezed quadrature, then technical excess is applied as a
  fixed dB factor on that quadrature,
* free-space scattering multiplies the Ramsey contrast by ``exp(-eta n_ph)``.

The final readout of a squeeze/verify pair uses ``final_photon_ratio`` times
the pre-measurement photons.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import db_from_ratio, ratio_from_db
from .rng import chunk_bounds, map_ordered, stream

#: Default floor for noise ratios in dB, keeps logs finite in degenerate cases.
R_FLOOR_DB = -60.0

#: Contributions to the overall detection quantum efficiency.
QE_BUDGET = {
    "cavity_escape": 0.68,
    "mode_overlap": 0.75,
    "photodiode": 0.88,
    "path": 0.62,
}


def quantum_efficiency(budget=None):
    """Product of the efficiency budget entries (0.278 for the default)."""
    return float(np.prod(list((budget or QE_BUDGET).values())))


@dataclass(frozen=True)
class SqueezeConfig:
    """Probe strength and readout calibration.

    Attributes
    ----------
    photons_per_measurement : float
        Probe photons per population measurement.
    quantum_efficiency : float
        Overall detection efficiency ``Q`` in (0, 1].
    detection_noise_scale : float
        ``a`` in ``sigma_det = a / sqrt(n_ph Q)`` (J_z units).
    scatter_loss_coeff : float
        ``eta``; contrast decays as ``exp(-eta n_ph)`` per measurement.
    excess_antisqueeze_db : float
        Technical noise on the anti-squeezed quadrature above the Q limit.
    final_photon_ratio : float
        Photons of the final readout relative to the pre-measurement.
    """

    photons_per_measurement: float
    quantum_efficiency: float = 0.28
    detection_noise_scale: float = 0.0
    scatter_loss_coeff: float = 0.0
    excess_antisqueeze_db: float = 9.0
    final_photon_ratio: float = 1.0

    def __post_init__(self):
        for name in ("photons_per_measurement", "detection_noise_scale",
                     "scatter_loss_coeff", "excess_antisqueeze_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"SqueezeConfig.{name} must be >= 0")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("SqueezeConfig.quantum_efficiency must be in (0, 1]")
        if not self.final_photon_ratio > 0:
            raise ValueError("SqueezeConfig.final_photon_ratio must be > 0")

    @property
    def final_photons(self) -> float:
        return self.photons_per_measurement * self.final_photon_ratio

    def with_photons(self, n_ph):
        return replace(self, photons_per_measurement=float(n_ph))


def detection_noise(config: SqueezeConfig, photons=None) -> float:
    """Readout noise std in ``J_z`` units; ``inf`` (with a warning) for no photons."""
    n = config.photons_per_measurement if photons is None else photons
    if n * config.quantum_efficiency <= 0:
        warnings.warn("no probe photons: detection noise is infinite", RuntimeWarning,
                      stacklevel=2)
        return math.inf
    return config.detection_noise_scale / math.sqrt(n * config.quantum_efficiency)


def final_detection_noise(config: SqueezeConfig) -> float:
    return detection_noise(config, config.final_photons)


@dataclass(frozen=True)
class ConditionalState:
    """Gaussian description of the collective spin after measurements.

    Fields may be scalars or equal-shape arrays (one entry per trial).
    """

    mean_jz: object
    var_jz: object
    var_antisqueeze: object
    contrast: object
    n_atoms: float

    @classmethod
    def css(cls, n_atoms, contrast=1.0):
        q = n_atoms / 4.0
        return cls(0.0, q, q, contrast, float(n_atoms))

    @property
    def qpn_var(self) -> float:
        return self.n_atoms / 4.0


def _as_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else stream(seed)


def qnd_measure(state: ConditionalState, true_jz, config: SqueezeConfig, seed, photons=None):
    """One QND population measurement and the conditional update.

    Returns
    -------
    outcome : float or ndarray
        ``true_jz`` plus Gaussian readout noise.
    ConditionalState
        Fused mean/variance, anti-squeezed variance grown by backaction and
        excess noise, contrast reduced by scattering.
    """
    rng = _as_rng(seed)
    n_ph = config.photons_per_measurement if photons is None else photons
    true_jz = np.asarray(true_jz, dtype=float)
    sigma = detection_noise(config, n_ph)
    contrast = state.contrast * np.exp(-config.scatter_loss_coeff * n_ph)
    if not math.isfinite(sigma):
        outcome = np.full(true_jz.shape, np.nan)
        return _unwrap(outcome), replace(state, contrast=contrast)

    outcome = true_jz + sigma * rng.standard_normal(true_jz.shape)
    var = np.asarray(state.var_jz, dtype=float)
    if sigma == 0:
        new_var = np.zeros_like(var + outcome)
        new_mean = outcome
    else:
        # gain form stays finite when sigma**2 overflows
        gain = var / (var + sigma * sigma)
        new_var = var * (1.0 - gain)
        new_mean = state.mean_jz + gain * (outcome - state.mean_jz)

    q = state.qpn_var
    backaction = math.inf if sigma == 0 else q * q / (sigma * sigma * config.quantum_efficiency)
    anti = (state.var_antisqueeze + backaction) * ratio_from_db(config.excess_antisqueeze_db)
    new = ConditionalState(_unwrap(new_mean), _unwrap(new_var), _unwrap(np.asarray(anti)),
                           _unwrap(np.asarray(contrast)), state.n_atoms)
    return _unwrap(outcome), new


def _unwrap(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def spin_noise_reduction(pre, final, n_atoms, floor_db=R_FLOOR_DB):
    """Spin-noise reduction of ``J_f - beta J_p`` relative to QPN.

    ``beta = Cov(p, f) / Var(p)`` minimizes the variance of the difference;
    the reference is ``Var_QPN = N / 4``.

    Returns
    -------
    R_db : float
        ``10 log10(Var(f - beta p) / (N/4))``, floored at ``floor_db``.
    beta : float
    """
    p = np.asarray(pre, dtype=float)
    f = np.asarray(final, dtype=float)
    if p.size < 2 or p.shape != f.shape:
        raise ValueError("need at least 2 paired records")
    dp = p - p.mean()
    df = f - f.mean()
    var_p = np.dot(dp, dp)
    if var_p == 0:
        raise ValueError("pre-measurement variance is zero")
    beta = float(np.dot(dp, df) / var_p)
    resid = df - beta * dp
    ratio = np.dot(resid, resid) / (p.size - 1) / (n_atoms / 4.0)
    return max(10.0 * math.log10(ratio) if ratio > 0 else -math.inf, floor_db), beta


def inferred_intrinsic_squeezing(R_observed_db, final_detection_var, qpn_var):
    """Noise reduction left after removing the final-readout detection variance, dB."""
    ratio = ratio_from_db(R_observed_db) - final_detection_var / qpn_var
    if ratio <= 0:
        raise ValueError("final detection variance exceeds the observed difference variance")
    return db_from_ratio(ratio)


def wineland_parameter(R_ratio, c_i, c_f):
    """Metrological squeezing ``xi = R C_i / C_f**2`` (linear)."""
    if np.any(np.asarray(c_f) <= 0):
        raise ValueError("final contrast must be > 0")
    if np.any(np.asarray(c_i) <= 0) or np.any(np.asarray(c_i) > 1) or np.any(np.asarray(c_f) > 1):
        raise ValueError("contrasts must lie in (0, 1]")
    if np.any(np.asarray(R_ratio) <= 0):
        raise ValueError("R must be > 0")
    return R_ratio * c_i / np.square(c_f)


def tomography_curve(state: ConditionalState, psi):
    """Quadrature noise versus rotation angle, relative to QPN.

    Returns ``(noise_rel, unitary_rel)``; the second curve is a
    minimum-uncertainty state with the same squeezed variance.
    """
    psi = np.asarray(psi, dtype=float)
    q = state.qpn_var
    c2, s2 = np.cos(psi) ** 2, np.sin(psi) ** 2
    noise = (state.var_jz * c2 + state.var_antisqueeze * s2) / q
    unitary = (state.var_jz * c2 + q * q / state.var_jz * s2) / q
    return noise, unitary


# --- model curves and calibration ------------------------------------------

def noise_ratio(config: SqueezeConfig, n_atoms, photons=None) -> float:
    """Pre-measurement readout variance over ``N/4``."""
    s = detection_noise(config, photons)
    return s * s / (n_atoms / 4.0)


def model_R(config: SqueezeConfig, n_atoms):
    """Expected ``(observed, intrinsic)`` noise-reduction ratios.

    Observed: ``r/(1+r) + r/rho``; intrinsic: ``r/(1+r)``, where ``r`` is
    the pre-measurement noise ratio and ``rho`` the final photon ratio.
    """
    r = noise_ratio(config, n_atoms)
    intrinsic = r / (1.0 + r)
    return intrinsic + r / config.final_photon_ratio, intrinsic


def model_contrast(c_i, config: SqueezeConfig, photons=None):
    n = config.photons_per_measurement if photons is None else photons
    return c_i * np.exp(-config.scatter_loss_coeff * n)


def calibrate_noise_scale(target_R_db, n_ph, Q, n_atoms, final_photon_ratio=1.0):
    """Detection scale ``a`` giving observed ``R = target_R_db`` at one operating point.

    Solves ``r/(1+r) + r/rho = T`` for the noise ratio ``r`` (a quadratic).
    """
    if not target_R_db < 0:
        raise ValueError("target R must be below 0 dB")
    T = ratio_from_db(target_R_db)
    inv = 1.0 / final_photon_ratio
    # inv r^2 + (1 + inv - T) r - T = 0
    b = 1.0 + inv - T
    r = 2.0 * T / (b + math.sqrt(b * b + 4.0 * inv * T))
    return math.sqrt(r * (n_atoms / 4.0) * n_ph * Q)


def calibrate_readout(target_R_db, target_intrinsic_db, n_ph, Q, n_atoms):
    """Detection scale and final photon ratio matching observed and intrinsic R.

    Returns ``(detection_noise_scale, final_photon_ratio)``.
    """
    T = ratio_from_db(target_R_db)
    Ti = ratio_from_db(target_intrinsic_db)
    if not 0 < Ti < T < 1:
        raise ValueError("need intrinsic < observed < 0 dB")
    r = Ti / (1.0 - Ti)
    rho = r / (T - Ti)
    return math.sqrt(r * (n_atoms / 4.0) * n_ph * Q), rho


def calibrate_scatter_loss(c_i, c_f, n_ph):
    """``eta`` such that ``c_i exp(-eta n_ph) = c_f``."""
    if not 0 < c_f <= c_i:
        raise ValueError("need 0 < c_f <= c_i")
    return math.log(c_i / c_f) / n_ph


# --- Monte Carlo -------------------------------------------------------------

def css_projection(n_atoms, rng, size):
    """``J_z`` samples of a coherent spin state on the equator (binomial)."""
    n = int(round(n_atoms))
    return rng.binomial(n, 0.5, size) - 0.5 * n


def simulate_squeezing(config: SqueezeConfig, n_atoms, n_trials, seed, threads=1,
                       stream_key=0):
    """Pre/final ``J_z`` readings of ``n_trials`` squeeze-and-verify shots.

    Returns ``(pre, final, contrast_f)``.
    """
    sigma_f = final_detection_noise(config)

    def run(bounds):
        lo, hi = bounds
        rng = stream(seed, stream_key, lo)
        jz = css_projection(n_atoms, rng, hi - lo)
        pre, state = qnd_measure(ConditionalState.css(n_atoms), jz, config, rng)
        final = jz + sigma_f * rng.standard_normal(hi - lo)
        return np.atleast_1d(pre), np.atleast_1d(final), state.contrast

    parts = map_ordered(run, chunk_bounds(int(n_trials)), threads)
    pre = np.concatenate([p[0] for p in parts])
    final = np.concatenate([p[1] for p in parts])
    return pre, final, parts[0][2]


@dataclass(frozen=True)
class SweepRow:
    n_ph: float
    R_db: float
    R_inferred_db: float
    contrast_i: float
    contrast_f: float
    xi_db: float
    xi_inferred_db: float
    beta: float

    @property
    def contrast_penalty(self) -> float:
        return self.contrast_i / self.contrast_f ** 2


SWEEP_COLUMNS = ("n_ph", "R_db", "R_inferred_db", "contrast_i", "contrast_f",
                 "xi_db", "xi_inferred_db")


def sweep_probe_strength(photon_list, base: SqueezeConfig, n_atoms, n_trials, seed,
                         contrast_i=1.0, threads=1):
    """Simulated ``R``, contrast loss and Wineland parameter versus probe photons.

    Each photon number uses its own seeded stream, so rows do not depend on
    the list order or thread count.
    """
    photon_list = list(photon_list)
    if not photon_list:
        raise ValueError("photon list is empty")
    rows = []
    for n_ph in photon_list:
        cfg = base.with_photons(n_ph)
        # stream keyed by the photon number's bit pattern
        key = int(np.float64(n_ph).view(np.uint64))
        pre, final, _ = simulate_squeezing(cfg, n_atoms, n_trials, seed, threads,
                                           stream_key=key)
        R_db, beta = spin_noise_reduction(pre, final, n_atoms)
        s_f = final_detection_noise(cfg)
        try:
            Ri_db = inferred_intrinsic_squeezing(R_db, s_f ** 2, n_atoms / 4.0)
        except ValueError:
            Ri_db = R_FLOOR_DB
        c_f = float(model_contrast(contrast_i, cfg))
        penalty = contrast_i / c_f ** 2
        rows.append(SweepRow(
            n_ph=float(n_ph), R_db=R_db, R_inferred_db=Ri_db,
            contrast_i=float(contrast_i), contrast_f=c_f,
            xi_db=R_db + db_from_ratio(penalty),
            xi_inferred_db=Ri_db + db_from_ratio(penalty),
            beta=beta,
        ))
    return rows


def model_sweep(photon_list, base: SqueezeConfig, n_atoms, contrast_i=1.0):
    """Noise-free model curves: arrays ``(R_db, R_intrinsic_db, penalty, xi_db)``."""
    n = np.asarray(photon_list, dtype=float)
    r = base.detection_noise_scale ** 2 / (n * base.quantum_efficiency) / (n_atoms / 4.0)
    intrinsic = r / (1.0 + r)
    observed = intrinsic + r / base.final_photon_ratio
    penalty = contrast_i / (contrast_i * np.exp(-base.scatter_loss_coeff * n)) ** 2
    return (db_from_ratio(observed), db_from_ratio(intrinsic), penalty,
            db_from_ratio(observed * penalty))
