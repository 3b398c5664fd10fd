"""Atom-cavity coupling from cloud geometry.

Axes: X along the cavity axis, Y horizontal and transverse, Z vertical. The
standing wave along X is assumed fully time-averaged, so a single atom at
``(Y, Z)`` couples with

    g_i**2 = (g0**2 / 2) exp(-2 (Y**2 + Z**2) / w0**2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import K_BOLTZMANN, SPEED_OF_LIGHT, SR87_MASS
from .rng import chunk_bounds, map_ordered, stream


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeGeometry:
    w0: float
    g0: float

    def __post_init__(self):
        if not (self.w0 > 0 and self.g0 > 0):
            raise ValueError("ModeGeometry needs w0 > 0 and g0 > 0")


@dataclass(frozen=True)
class CloudDistribution:
    sigma_y: float = 0.0
    sigma_z: float = 0.0
    z_center: float = 0.0

    def __post_init__(self):
        if self.sigma_y < 0 or self.sigma_z < 0:
            raise ValueError("cloud widths must be >= 0")


def mode_volume(w0, cavity_length):
    """TEM00 standing-wave mode volume ``pi w0**2 L / 4``."""
    return np.pi * w0 ** 2 * cavity_length / 4.0


def peak_coupling(gamma, wavelength, w0, cavity_length):
    """Peak single-atom coupling ``g0`` (rad/s) of a unit-strength transition.

    The dipole element follows from the linewidth,
    ``d0**2 = 3 pi eps0 hbar c**3 Gamma / omega**3``; substituting into
    ``g0 = d0 sqrt(omega / (2 eps0 hbar V))`` gives
    ``g0**2 = 3 c lambda**2 Gamma / (8 pi V)``.
    """
    if min(gamma, wavelength, w0, cavity_length) <= 0:
        raise ValueError("peak_coupling inputs must be positive")
    V = mode_volume(w0, cavity_length)
    return float(np.sqrt(3.0 * SPEED_OF_LIGHT * wavelength ** 2 * gamma / (8.0 * np.pi * V)))


def thermal_sigma(temperature, trap_frequency, mass=SR87_MASS):
    """Thermal rms width of a harmonically trapped cloud.

    ``trap_frequency`` is an angular frequency (rad/s).
    """
    return float(np.sqrt(K_BOLTZMANN * temperature / (mass * trap_frequency ** 2)))


def _gauss_avg_exp(k, sigma, center=0.0, w0=1.0):
    # E[exp(-2 k x^2 / w0^2)] for x ~ N(center, sigma^2)
    a = 2.0 * k / w0 ** 2
    s2 = sigma ** 2
    return np.exp(-a * center ** 2 / (1.0 + 2.0 * a * s2)) / np.sqrt(1.0 + 2.0 * a * s2)


def _quad_avg_exp(k, sigma, center, w0, epsabs=1e-13, epsrel=1e-11):
    if sigma == 0:
        return float(np.exp(-2.0 * k * center ** 2 / w0 ** 2))

    def f(u):
        # u is the standardized coordinate
        x = center + sigma * u
        return np.exp(-0.5 * u * u - 2.0 * k * x * x / w0 ** 2) / np.sqrt(2.0 * np.pi)

    val, abserr = integrate.quad(f, -np.inf, np.inf, epsabs=epsabs, epsrel=epsrel, limit=200)
    if not abserr <= max(epsabs, epsrel * abs(val)) * 10:
        raise QuadratureError(f"quadrature did not converge (abserr={abserr:.3g}, value={val:.6g})")
    return val


def coupling_moments(mode: ModeGeometry, cloud: CloudDistribution, method="auto"):
    """Cloud averages ``(<g_i**2>, <g_i**4>)``.

    The Y and Z integrals separate. ``method="closed"`` uses Gaussian moment
    formulas, ``"quad"`` adaptive quadrature; ``"auto"`` uses the closed form
    for a cloud centered on the mode axis and quadrature otherwise.
    """
    if method == "auto":
        method = "closed" if cloud.z_center == 0 else "quad"
    if method == "closed":
        avg = lambda k, s, c: _gauss_avg_exp(k, s, c, mode.w0)  # noqa: E731
    elif method == "quad":
        avg = lambda k, s, c: _quad_avg_exp(k, s, c, mode.w0)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    half_peak = 0.5 * mode.g0 ** 2
    g2 = half_peak * avg(1, cloud.sigma_y, 0.0) * avg(1, cloud.sigma_z, cloud.z_center)
    g4 = half_peak ** 2 * avg(2, cloud.sigma_y, 0.0) * avg(2, cloud.sigma_z, cloud.z_center)
    return float(g2), float(g4)


def effective_coupling(mode: ModeGeometry, cloud: CloudDistribution, method="auto"):
    """Effective coupling and effective atom fraction of a cloud.

    Returns
    -------
    g_eff : float
        ``sqrt(<g**4> / <g**2>)`` in rad/s.
    n_eff_fraction : float
        ``N / N_tot = <g**2>**2 / <g**4>``.
    """
    g2, g4 = coupling_moments(mode, cloud, method)
    return float(np.sqrt(g4 / g2)), float(g2 ** 2 / g4)


def sample_positions(cloud: CloudDistribution, n_atoms, rng):
    y = cloud.sigma_y * rng.standard_normal(n_atoms)
    z = cloud.z_center + cloud.sigma_z * rng.standard_normal(n_atoms)
    return y, z


def coupling_weights(mode: ModeGeometry, y, z, z_mode=0.0):
    """``g_i**2`` for atoms at ``(y, z)`` with the mode axis at height ``z_mode``."""
    return 0.5 * mode.g0 ** 2 * np.exp(-2.0 * (y ** 2 + (z - z_mode) ** 2) / mode.w0 ** 2)


def sample_atom_couplings(mode: ModeGeometry, cloud: CloudDistribution, n_atoms, seed):
    """Per-atom ``g_i**2`` for ``n_atoms`` atoms drawn from the cloud."""
    n_atoms = int(n_atoms)
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    y, z = sample_positions(cloud, n_atoms, stream(seed, 0))
    return coupling_weights(mode, y, z)


def empirical_effective_coupling(weights):
    w = np.asarray(weights, dtype=float)
    g2, g4 = w.mean(), np.mean(w * w)
    return float(np.sqrt(g4 / g2)), float(g2 ** 2 / g4)


def transport_velocity(delta_l, lambda_l):
    """Moving-lattice velocity ``delta_l lambda_l / (4 pi)`` for detuning ``delta_l`` in rad/s."""
    return delta_l * lambda_l / (4.0 * np.pi)


# --- sub-ensemble overlap ----------------------------------------------------

def overlap_correlation(mode: ModeGeometry, cloud: CloudDistribution, separation,
                        detection_noise=0.0):
    """Analytic Pearson correlation of two mode-weighted ``J_z`` readings.

    The mode sits at ``z_center - separation/2`` for reading A and
    ``z_center + separation/2`` for B. With independent random spins, the
    covariance is set by ``<w_A w_B>`` over the cloud; the Y factor cancels.
    ``detection_noise`` is the readout noise std relative to the QPN of one
    reading.
    """
    k = 2.0 / mode.w0 ** 2
    h = 0.5 * np.asarray(separation, dtype=float)
    spread = 1.0 + 4.0 * k * cloud.sigma_z ** 2
    # (Z-a)^2 + (Z-b)^2 = 2 (Z-m)^2 + 2 h^2; the common 1/sqrt(spread) cancels
    cross = np.exp(-2.0 * k * h ** 2)
    square = np.exp(-2.0 * k * h ** 2 / spread)
    rho = cross / square
    return _out(rho / (1.0 + detection_noise ** 2))


def qpn_change_db(pearson_rho):
    """Change of the combined QPN of ``J_A - J_B`` from residual overlap, in dB."""
    rho = np.asarray(pearson_rho, dtype=float)
    return _out(10.0 * np.log10(np.clip(1.0 - rho, 1e-6, None)))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class CorrelationResult:
    separation: float
    pearson: float
    pearson_err: float
    qpn_change_db: float
    qpn_change_err: float
    analytic_pearson: float
    analytic_qpn_change_db: float


def _readings(mode, cloud, separation, n_atoms, detection_noise, rng, n):
    """``n`` trials of the two weighted readings; spins are +-1/2."""
    za = cloud.z_center - 0.5 * separation
    zb = cloud.z_center + 0.5 * separation
    norm = 0.5 * mode.g0 ** 2
    y = cloud.sigma_y * rng.standard_normal((n, n_atoms))
    z = cloud.z_center + cloud.sigma_z * rng.standard_normal((n, n_atoms))
    s = rng.integers(0, 2, (n, n_atoms)) - 0.5
    a = np.einsum("ij,ij->i", s, coupling_weights(mode, y, z, za)) / norm
    b = np.einsum("ij,ij->i", s, coupling_weights(mode, y, z, zb)) / norm
    if detection_noise:
        # noise is quoted relative to the QPN std of one reading; both
        # readings sit symmetrically about the cloud and share that QPN
        rel = CloudDistribution(cloud.sigma_y, cloud.sigma_z, 0.5 * separation)
        _, g4 = coupling_moments(mode, rel, "closed")
        qpn = np.sqrt(0.25 * n_atoms * g4) / norm
        a = a + detection_noise * qpn * rng.standard_normal(n)
        b = b + detection_noise * qpn * rng.standard_normal(n)
    return a, b


def ensemble_correlation_vs_separation(mode: ModeGeometry, cloud: CloudDistribution,
                                       separation, detection_noise=0.0, n_trials=2000,
                                       seed=0, n_atoms=2000, n_batches=20, threads=1,
                                       stream_key=0):
    """Monte Carlo correlation of two sub-ensemble readings at one separation.

    Each trial draws fresh atom positions and random spin projections, then
    reads ``J_z`` through the mode centered at ``-separation/2`` and
    ``+separation/2`` about the cloud center. Statistical errors come from
    ``n_batches`` batch means.

    Returns
    -------
    CorrelationResult
        Monte Carlo Pearson coefficient and QPN change (with errors) next to
        the analytic values from :func:`overlap_correlation`.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    n_atoms = int(n_atoms)

    def run(bounds):
        lo, hi = bounds
        rng = stream(seed, stream_key, lo)
        return _readings(mode, cloud, separation, n_atoms, detection_noise, rng, hi - lo)

    parts = map_ordered(run, chunk_bounds(n_trials, 256), threads)
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])

    rho = pearson_or_one(a, b)
    change = float(qpn_change_db(rho))
    nb = max(2, min(n_batches, n_trials // 2))
    rhos = np.array([pearson_or_one(x, y) for x, y in zip(np.array_split(a, nb),
                                                           np.array_split(b, nb))])
    changes = qpn_change_db(rhos)
    rho_an = overlap_correlation(mode, cloud, separation, detection_noise)
    return CorrelationResult(
        separation=float(separation),
        pearson=float(rho),
        pearson_err=float(np.std(rhos, ddof=1) / np.sqrt(nb)),
        qpn_change_db=change,
        qpn_change_err=float(np.std(changes, ddof=1) / np.sqrt(nb)),
        analytic_pearson=float(rho_an),
        analytic_qpn_change_db=float(qpn_change_db(rho_an)),
    )


def pearson_or_one(x, y):
    x = x - x.mean()
    y = y - y.mean()
    den = np.sqrt(np.dot(x, x) * np.dot(y, y))
    if den == 0:
        return 1.0 if np.array_equal(x, y) else 0.0
    return float(np.clip(np.dot(x, y) / den, -1.0, 1.0))
