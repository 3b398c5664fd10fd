"""Estimators, phase series, Allan deviation and projection-noise bounds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .clock import SequenceConfig, ShotRecords, fit_ramsey_fringe, ramsey_fringe_scan, run_sequence
from .core import SR87_CLOCK_FREQUENCY, TWO_PI
from .rng import map_ordered

CHANNELS = ("dn_a_pre", "dn_b_final", "dn_b_pre")


class EstimatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimatorSet:
    """Optimal estimators with spreads over dataset sub-ranges.

    ``beta_a`` etc. are means over the sub-range fits; ``full`` holds the
    full-length optimum used to build the phase series.
    """

    beta_a: float
    beta_b: float
    beta_d: float
    beta_a_err: float
    beta_b_err: float
    beta_d_err: float
    full: tuple = field(default=(np.nan, np.nan, np.nan))


def _design(rec: ShotRecords):
    X = np.column_stack([rec.dn_a_pre, rec.dn_b_final, rec.dn_b_pre]).astype(float)
    y = np.asarray(rec.dn_a_final, dtype=float)
    return X - X.mean(axis=0), y - y.mean()


def solve_estimators(records):
    """Jointly optimal ``(beta_a, beta_b, beta_d)`` for one dataset.

    With ``gamma = beta_d * beta_b`` the variance of
    ``a_f - beta_a a_p - beta_d b_f + gamma b_p`` is quadratic in
    ``(beta_a, beta_d, gamma)``, so its global minimum is a single
    least-squares solve; ``beta_b = gamma / beta_d``.

    Raises
    ------
    EstimatorError
        If a channel is constant or linearly dependent on the others, or if
        ``beta_d`` vanishes so that ``beta_b`` is undetermined.
    """
    rec = ShotRecords.from_records(records)
    X, y = _design(rec)
    scale = np.sqrt(np.mean(X ** 2, axis=0))
    for name, s in zip(CHANNELS, scale):
        if not s > 0:
            raise EstimatorError(f"singular covariance: channel {name} has zero variance")
    if not np.any(y):
        raise EstimatorError("singular covariance: channel dn_a_final has zero variance")
    Z = X / scale
    gram = Z.T @ Z / len(y)
    w, v = np.linalg.eigh(gram)
    if w[0] < 1e-12 * w[-1]:
        worst = CHANNELS[int(np.argmax(np.abs(v[:, 0])))]
        raise EstimatorError(f"singular covariance: channel {worst} is linearly dependent "
                             "on the other channels")
    coef = np.linalg.solve(gram, Z.T @ y / len(y)) / scale
    beta_a, beta_d, minus_gamma = coef
    if abs(beta_d) < 1e-12:
        raise EstimatorError("singular covariance: dn_b_final carries no common signal "
                             "(beta_d = 0), beta_b undetermined")
    return float(beta_a), float(-minus_gamma / beta_d), float(beta_d)


def differential_phase(records, alpha, beta_a, beta_b, beta_d):
    """``((a_f - beta_a a_p) - beta_d (b_f - beta_b b_p)) / alpha`` per shot."""
    rec = ShotRecords.from_records(records)
    return ((rec.dn_a_final - beta_a * rec.dn_a_pre)
            - beta_d * (rec.dn_b_final - beta_b * rec.dn_b_pre)) / alpha


def optimize_estimators(records, alpha, n_subranges=11, threads=1):
    """Minimum-variance estimators and the resulting phase series.

    Uncertainties are the spread of re-fits on leading sub-ranges whose
    length runs from half to all of the dataset.

    Returns
    -------
    EstimatorSet
    phase_series : ndarray
        Differential phase (rad) per shot at the full-length optimum.
    """
    rec = ShotRecords.from_records(records)
    n = len(rec)
    if n < 10:
        raise ValueError("need at least 10 records")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    full = solve_estimators(rec)
    lengths = np.unique(np.linspace(n // 2, n, n_subranges).astype(int))
    fits = np.array(map_ordered(lambda m: solve_estimators(rec[:m]), lengths, threads))
    mean = fits.mean(axis=0)
    err = fits.std(axis=0, ddof=1) if len(fits) > 1 else np.zeros(3)
    est = EstimatorSet(*map(float, mean), *map(float, err), full=full)
    return est, differential_phase(rec, alpha, *full)


# --- bounds --------------------------------------------------------------------

def qpn_limit(n_a, n_b, c_i):
    """Projection-noise limit ``1 / (C_i sqrt(N_A + N_B))`` (rad)."""
    return float(1.0 / (c_i * np.sqrt(n_a + n_b)))


def sql_limit(n_a, n_b, c_i, beta_d=1.0):
    """Standard quantum limit of the non-participating-fraction picture.

    ``sqrt(1/(C_i N_A) + beta_d**2/(C_i N_B)) / 2``: participating atoms only,
    on the same per-ensemble normalization as :func:`qpn_limit`. At
    ``beta_d = 1`` this is ``1 / sqrt(C_i (N_A + N_B))`` for equal ensembles.
    """
    return float(0.5 * np.sqrt(1.0 / (c_i * n_a) + beta_d ** 2 / (c_i * n_b)))


def differential_qpn_limit(n_a, n_b, c_i, beta_d=1.0):
    """Projection-noise std of the differential phase estimator itself.

    ``sqrt(1/N_A + beta_d**2/N_B) / C_i``: unit-normalized population
    differences carry variance ``N`` and convert to phase through ``C_i N``.
    """
    return float(np.sqrt(1.0 / n_a + beta_d ** 2 / n_b) / c_i)


def differential_sql_limit(n_a, n_b, c_i, beta_d=1.0):
    """``sqrt(1/(C_i N_A) + beta_d**2/(C_i N_B))`` on the estimator's scale."""
    return float(np.sqrt(1.0 / (c_i * n_a) + beta_d ** 2 / (c_i * n_b)))


# --- Allan deviation -------------------------------------------------------------

@dataclass(frozen=True)
class AdevCurve:
    tau: np.ndarray
    sigma_y: np.ndarray
    error_bar: np.ndarray
    n_samples: np.ndarray
    tau_adjusted: np.ndarray
    kind: str = "overlapping"

    def __post_init__(self):
        if np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau must be strictly increasing")


def fractional_frequency(phase_series, ramsey_time, transition_frequency=SR87_CLOCK_FREQUENCY):
    return np.asarray(phase_series, dtype=float) / (TWO_PI * ramsey_time * transition_frequency)


def default_taus(n_points, cycle_time):
    """Octave-spaced averaging times up to a quarter of the record."""
    m = 2 ** np.arange(int(np.log2(max(n_points // 4, 1))) + 1)
    return m * cycle_time


def white_fm_edf(n_points, m):
    """Equivalent degrees of freedom of the overlapping ADEV for white FM."""
    n = n_points + 1  # phase samples
    return ((3.0 * (n - 1) / (2.0 * m) - 2.0 * (n - 2) / n)
            * 4.0 * m * m / (4.0 * m * m + 5.0))


def allan_deviation(phase_series, ramsey_time, cycle_time,
                    transition_frequency=SR87_CLOCK_FREQUENCY, tau_list=None):
    """Overlapping Allan deviation of the per-shot fractional frequency.

    Each averaging time is rounded to the nearest whole number of cycles;
    rounded entries are flagged in ``tau_adjusted`` and a warning is issued.
    Error bars are ``sigma / sqrt(2 edf)`` with the white-FM ``edf``.
    """
    y = fractional_frequency(phase_series, ramsey_time, transition_frequency)
    M = y.size
    taus = default_taus(M, cycle_time) if tau_list is None else np.asarray(tau_list, float)
    m = np.maximum(np.rint(taus / cycle_time).astype(int), 1)
    adjusted = ~np.isclose(m * cycle_time, taus, rtol=1e-9, atol=0)
    if np.any(adjusted):
        warnings.warn("averaging times rounded to whole cycle multiples", RuntimeWarning)
    if M < 2 * m.max():
        raise ValueError(f"series of {M} points too short for tau = {m.max()} cycles")
    # time-error integral, x_0 = 0
    x = np.concatenate([[0.0], np.cumsum(y)]) * cycle_time
    N = x.size
    sig = np.empty(m.size)
    count = np.empty(m.size, dtype=int)
    for i, mi in enumerate(m):
        d = x[2 * mi:] - 2.0 * x[mi:N - mi] + x[:N - 2 * mi]
        count[i] = d.size
        sig[i] = np.sqrt(np.dot(d, d) / (2.0 * (mi * cycle_time) ** 2 * d.size))
    edf = white_fm_edf(M, m)
    tau = m * cycle_time
    return AdevCurve(tau, sig, sig / np.sqrt(2.0 * edf), count, adjusted)


def fit_stability(tau, sigma, weights=None):
    """Fit ``sigma = c tau**-0.5`` in log-log space.

    Returns ``(c, residuals)`` with residuals ``log(sigma) - log(c tau**-0.5)``.
    """
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(tau <= 0) or np.any(sigma <= 0):
        raise ValueError("fit_stability needs positive tau and sigma")
    v = np.log(sigma) + 0.5 * np.log(tau)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    logc = np.sum(w * v) / np.sum(w)
    return float(np.exp(logc)), v - logc


def stability_coeff(curve: AdevCurve) -> float:
    """White-noise coefficient of an ADEV curve, bins weighted by their edf."""
    ok = curve.sigma_y > 0
    w = (curve.sigma_y[ok] / curve.error_bar[ok]) ** 2
    return fit_stability(curve.tau[ok], curve.sigma_y[ok], w)[0]


def pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length series")
    x = x - x.mean()
    y = y - y.mean()
    den = np.sqrt(np.dot(x, x) * np.dot(y, y))
    if den == 0:
        raise ValueError("pearson undefined for a constant series")
    return float(np.clip(np.dot(x, y) / den, -1.0, 1.0))


# --- comparison pipeline ---------------------------------------------------------

@dataclass(frozen=True)
class ComparisonResult:
    mode: str
    estimators: EstimatorSet
    phase_series: np.ndarray
    phase_std: float
    phase_std_err: float
    fringe_amplitude: float
    adev: AdevCurve
    stability_coeff: float
    qpn_bound: float
    sql_bound: float
    enhancement_db: float = np.nan


def analyze_run(config: SequenceConfig, records, seed, fringe_phases=None,
                shots_per_phase=500, tau_list=None, threads=1,
                transition_frequency=SR87_CLOCK_FREQUENCY):
    """Fringe calibration, estimator fit, phase series and ADEV for one run."""
    phases = fringe_phases
    if phases is None:
        phases = np.linspace(-np.pi, np.pi, 25, endpoint=False)
    fringe = fit_ramsey_fringe(*ramsey_fringe_scan(config, phases, seed, shots_per_phase)[:2])
    est, phase = optimize_estimators(records, fringe.amplitude, threads=threads)
    curve = allan_deviation(phase, config.ramsey_time, config.cycle_time,
                            transition_frequency, tau_list)
    coeff = stability_coeff(curve)
    n_a, n_b = config.ensemble_a.n_eff, config.ensemble_b.n_eff
    c_i = config.ensemble_a.contrast_i
    std = float(np.std(phase, ddof=1))
    return ComparisonResult(
        mode=config.mode,
        estimators=est,
        phase_series=phase,
        phase_std=std,
        phase_std_err=std / np.sqrt(2.0 * (phase.size - 1)),
        fringe_amplitude=fringe.amplitude,
        adev=curve,
        stability_coeff=coeff,
        qpn_bound=differential_qpn_limit(n_a, n_b, c_i, est.full[2]),
        sql_bound=differential_sql_limit(n_a, n_b, c_i, est.full[2]),
    )


def compare_clocks(config: SequenceConfig, seed, threads=1, tau_list=None,
                   shots_per_phase=500, transition_frequency=SR87_CLOCK_FREQUENCY):
    """Run CSS-CSS and SSS-SSS comparisons that differ only in probing.

    Returns ``((css_records, css_result), (sss_records, sss_result))``;
    ``sss_result.enhancement_db`` is the phase-std gain of the squeezed run
    in dB.
    """
    results = []
    for key, mode in enumerate(("css_css", "sss_sss")):
        cfg = config.with_mode(mode)
        ss = np.random.SeedSequence(int(seed), spawn_key=(7, key))
        sub_seed = int(ss.generate_state(1, np.uint64)[0])
        recs = run_sequence(cfg, sub_seed)
        results.append((recs, analyze_run(cfg, recs, sub_seed, None, shots_per_phase, tau_list,
                                          threads, transition_frequency)))
    (css_rec, css), (sss_rec, sss) = results
    gain = 20.0 * np.log10(css.phase_std / sss.phase_std)
    return (css_rec, css), (sss_rec, replace(sss, enhancement_db=float(gain)))
