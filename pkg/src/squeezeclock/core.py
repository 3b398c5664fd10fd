"""Shared domain types, unit helpers and physical constants.

Frequencies are stored as angular frequencies (rad/s) everywhere in the
package; values quoted as ``2*pi x f`` are built with :func:`hz` / :func:`khz`
and converted back with :func:`to_hz` / :func:`to_khz` at the I/O boundary.
Counts (atom numbers, photon numbers) are plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as const

TWO_PI = 2.0 * np.pi

SPEED_OF_LIGHT = const.c
HBAR = const.hbar
EPSILON_0 = const.epsilon_0
K_BOLTZMANN = const.k
ATOMIC_MASS = const.atomic_mass

#: Mass of a strontium-87 atom in kg.
SR87_MASS = 86.9088774970 * ATOMIC_MASS
#: 1S0 -> 3P0 clock transition frequency of 87Sr in Hz.
SR87_CLOCK_FREQUENCY = 4.2922880e14


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def hz(f):
    """Angular frequency (rad/s) for a frequency given in Hz."""
    return _scalar_or_array(TWO_PI * np.asarray(f, dtype=float))


def khz(f):
    """Angular frequency (rad/s) for a frequency given in kHz."""
    return _scalar_or_array(TWO_PI * 1e3 * np.asarray(f, dtype=float))


def mhz(f):
    return _scalar_or_array(TWO_PI * 1e6 * np.asarray(f, dtype=float))


def to_hz(omega):
    """Frequency in Hz of an angular frequency in rad/s."""
    return _scalar_or_array(np.asarray(omega, dtype=float) / TWO_PI)


def to_khz(omega):
    return _scalar_or_array(np.asarray(omega, dtype=float) / (TWO_PI * 1e3))


def db_from_ratio(r):
    """Power ratio expressed in decibels, ``10 log10(r)``.

    Raises
    ------
    ValueError
        If any ratio is not strictly positive.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"dB conversion needs a positive ratio, got {r!r}")
    return _scalar_or_array(10.0 * np.log10(arr))


def ratio_from_db(db):
    return _scalar_or_array(10.0 ** (np.asarray(db, dtype=float) / 10.0))


@dataclass(frozen=True)
class CavityParams:
    """Bare cavity and atomic transition constants of the coupled system.

    Attributes
    ----------
    g_eff : float
        Effective single-atom vacuum coupling ``g`` (rad/s).
    kappa : float
        Cavity power decay rate (rad/s).
    gamma : float
        Linewidth of the probed atomic transition (rad/s).
    delta_c : float
        Cavity detuning from the ``|down> -> |e>`` transition (rad/s).
    w0 : float
        1/e^2 mode waist (m).
    cavity_length : float
        Mirror separation (m).
    lambda_probe : float
        Wavelength of the probed transition (m).
    lambda_lattice : float
        Lattice wavelength (m).
    """

    g_eff: float
    kappa: float
    gamma: float
    delta_c: float
    w0: float = 71e-6
    cavity_length: float = 6.9720e-2
    lambda_probe: float = 689e-9
    lambda_lattice: float = 813e-9

    def __post_init__(self):
        for name in ("kappa", "gamma", "delta_c", "w0", "cavity_length",
                     "lambda_probe", "lambda_lattice"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"CavityParams.{name} must be finite and > 0, got {value!r}")
        # g = 0 is the uncoupled limit and is allowed
        if not (np.isfinite(self.g_eff) and self.g_eff >= 0):
            raise ValueError(f"CavityParams.g_eff must be finite and >= 0, got {self.g_eff!r}")
        if not self.kappa > self.gamma:
            raise ValueError("CavityParams requires kappa > gamma")
        if not self.w0 < self.cavity_length:
            raise ValueError("CavityParams requires w0 < cavity_length")


@dataclass(frozen=True)
class EnsembleSpec:
    """Atom number, cloud geometry and Ramsey contrasts of one ensemble."""

    n_total: float
    n_eff: float
    sigma_z: float = 0.0
    sigma_y: float = 0.0
    z_offset: float = 0.0
    contrast_i: float = 1.0
    contrast_f: float = 1.0

    def __post_init__(self):
        if not 0 <= self.n_eff <= self.n_total:
            raise ValueError("EnsembleSpec requires 0 <= n_eff <= n_total")
        if not 0 <= self.contrast_f <= self.contrast_i <= 1:
            raise ValueError("EnsembleSpec requires 0 <= contrast_f <= contrast_i <= 1")
        if self.sigma_z < 0 or self.sigma_y < 0:
            raise ValueError("EnsembleSpec cloud widths must be >= 0")


@dataclass(frozen=True)
class SpinProjection:
    """Collective spin projection ``J_z = (N_down - N_up) / 2``."""

    n_down: float
    n_up: float

    def __post_init__(self):
        if self.n_down < 0 or self.n_up < 0:
            raise ValueError("populations must be >= 0")

    @property
    def jz(self) -> float:
        return 0.5 * (self.n_down - self.n_up)

    @property
    def n_atoms(self) -> float:
        return self.n_down + self.n_up

    def check_within(self, n_eff: float) -> None:
        if self.n_atoms > n_eff * (1 + 1e-12):
            raise ValueError(f"populations sum to {self.n_atoms}, above n_eff={n_eff}")


def cooperativity(params: CavityParams) -> float:
    """Single-atom cooperativity ``4 g^2 / (kappa * Gamma)``."""
    return 4.0 * params.g_eff ** 2 / (params.kappa * params.gamma)
