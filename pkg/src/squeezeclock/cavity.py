"""Dispersive response of the atom-cavity system.

The cavity-like dressed mode is pulled by ``n`` coupled atoms by

    omega(n) = (-delta_c + sqrt(delta_c**2 + 4 g**2 n)) / 2,

measured from the bare cavity resonance. This is the shift whose inverses
are ``N_down = omega (delta_c / g**2) (1 + omega / delta_c)`` for a single
state and ``N = omega_sum (delta_c / g**2) (1 + omega_sum / (2 delta_c))``
for an equal superposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core import CavityParams


class FitError(RuntimeError):
    """Coupling fit failed; carries the residuals of the last iterate."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = None if residuals is None else np.asarray(residuals)


def _check_nonneg(name, x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and >= 0")
    return arr


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def dressed_shift(n_atoms, spin="down", params: CavityParams = None):
    """Shift of the cavity-like dressed mode produced by ``n_atoms`` atoms.

    ``spin`` only labels which population is being read (the ``up``
    population is read after a pi-pulse swaps it into the coupled state), so
    both labels use the same eigenvalue.
    """
    if spin not in ("down", "up"):
        raise ValueError(f"spin must be 'down' or 'up', got {spin!r}")
    n = _check_nonneg("n_atoms", n_atoms)
    d = params.delta_c
    omega_sq = 4.0 * params.g_eff ** 2 * n
    # (-d + sqrt(d^2 + x)) / 2 written without cancellation
    return _out(0.5 * omega_sq / (d + np.sqrt(d * d + omega_sq)))


def atom_number_from_shift(omega, params: CavityParams):
    """Atoms in the coupled state from a single dispersive shift."""
    w = _check_nonneg("omega", omega)
    d = params.delta_c
    return _out(w * d / params.g_eff ** 2 * (1.0 + w / d))


def atom_number_from_sum_shift(omega_sum, params: CavityParams):
    """Total atom number of an equal-superposition state from ``omega_sum``."""
    w = _check_nonneg("omega_sum", omega_sum)
    d = params.delta_c
    return _out(w * d / params.g_eff ** 2 * (1.0 + 0.5 * w / d))


def sum_shift(n_atoms, params: CavityParams):
    """``omega_sum`` of an equal superposition of ``n_atoms`` atoms."""
    half = 0.5 * _check_nonneg("n_atoms", n_atoms)
    return dressed_shift(half, "down", params) + dressed_shift(half, "up", params)


@dataclass(frozen=True)
class ShiftMeasurement:
    """Dispersive shifts measured before and after the population swap."""

    omega_down: float
    omega_up: float

    @property
    def omega_sum(self) -> float:
        return self.omega_down + self.omega_up

    def populations(self, params: CavityParams):
        return (atom_number_from_shift(self.omega_down, params),
                atom_number_from_shift(self.omega_up, params))


def qpn_shift_noise(omega_sum, params: CavityParams):
    """Projection-noise std of ``omega_up - omega_down`` for a CSS.

    ``g sqrt((omega_sum**2 / 2 + delta_c omega_sum) / (omega_sum + delta_c)**2)``
    """
    w = _check_nonneg("omega_sum", omega_sum)
    d = params.delta_c
    return _out(params.g_eff * np.sqrt((0.5 * w * w + d * w) / (w + d) ** 2))


def _qpn_shape(omega_sum, delta_c):
    # qpn_shift_noise / g
    w = omega_sum
    return np.sqrt((0.5 * w * w + delta_c * w) / (w + delta_c) ** 2)


@dataclass(frozen=True)
class QpnFitResult:
    """Result of :func:`fit_coupling`; all frequencies in rad/s."""

    g_fit: float
    noise_offset: float
    rotation_noise_slope: float
    residual_rms: float
    g_err: float = np.nan
    noise_offset_err: float = np.nan
    rotation_noise_slope_err: float = np.nan
    n_iter: int = 0
    residuals: np.ndarray = field(default=None, repr=False, compare=False)

    def model(self, omega_sum, delta_c):
        w = np.asarray(omega_sum, dtype=float)
        return np.sqrt((self.g_fit * _qpn_shape(w, delta_c)) ** 2
                       + self.noise_offset ** 2
                       + (self.rotation_noise_slope * w) ** 2)


def fit_coupling(omega_sum, measured_std, delta_c, include_rotation_noise=False,
                 weights=None, max_nfev=2000):
    """Fit the QPN shift-noise model with a quadrature offset.

    Fits ``sqrt(g**2 s(w)**2 + offset**2 + (slope w)**2)`` where ``s`` is the
    shape of :func:`qpn_shift_noise`. The slope term models rotation noise and
    is held at zero unless ``include_rotation_noise`` is set.

    Parameters
    ----------
    omega_sum, measured_std : array_like
        Sum shifts and measured std of the difference shift, both in rad/s.
    delta_c : float
        Cavity detuning in rad/s.
    weights : array_like, optional
        Per-point weights on the residuals; unweighted by default.

    Returns
    -------
    QpnFitResult
        ``g_fit`` and ``noise_offset`` are reported as magnitudes (the model
        depends only on their squares). Errors are 1-sigma from the Jacobian
        at the optimum, scaled by the reduced chi-square.

    Raises
    ------
    FitError
        Degenerate input (fewer than 3 points or fewer than 2 distinct sum
        shifts) or a non-converged optimizer.
    """
    w = np.asarray(omega_sum, dtype=float)
    y = np.asarray(measured_std, dtype=float)
    if w.shape != y.shape or w.ndim != 1:
        raise ValueError("omega_sum and measured_std must be 1-D and equal length")
    if w.size < 3:
        raise FitError("need at least 3 data points")
    if np.any(y <= 0):
        raise ValueError("measured stds must be positive")
    if np.any(w < 0):
        raise ValueError("omega_sum must be >= 0")
    if np.unique(w).size < 2:
        raise FitError("degenerate data: all points share the same omega_sum")
    wt = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)

    # work in units of the median std so the optimizer sees O(1) numbers
    scale = float(np.median(y))
    ws, ys, ds = w / scale, y / scale, delta_c / scale
    shape = _qpn_shape(ws, ds)

    def model(p):
        g, off = p[0], p[1]
        slope = p[2] if include_rotation_noise else 0.0
        return np.sqrt((g * shape) ** 2 + off ** 2 + (slope * ws) ** 2)

    def resid(p):
        return wt * (model(p) - ys)

    def jac(p):
        m = model(p)
        m = np.where(m > 0, m, np.finfo(float).tiny)
        cols = [p[0] * shape ** 2 / m, p[1] / m]
        if include_rotation_noise:
            cols.append(p[2] * ws ** 2 / m)
        return wt[:, None] * np.column_stack(cols)

    # initial guesses: offset from the smallest shift, g from the largest
    i0, i1 = np.argmin(ws), np.argmax(ws)
    off0 = ys[i0] if ws[i0] == 0 else 0.5 * ys[i0]
    g0 = np.sqrt(max(ys[i1] ** 2 - off0 ** 2, 0.25 * ys[i1] ** 2)) / max(shape[i1], 1e-12)
    p0 = [g0, off0] + ([0.1 * ys[i1] / ws[i1]] if include_rotation_noise else [])

    sol = optimize.least_squares(resid, p0, jac=jac, method="lm", max_nfev=max_nfev,
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not sol.success or sol.status <= 0:
        raise FitError(f"coupling fit did not converge: {sol.message}", sol.fun * scale)

    n_par = len(p0)
    dof = max(w.size - n_par, 1)
    chi2 = float(np.sum(sol.fun ** 2))
    J = sol.jac
    try:
        cov = np.linalg.pinv(J.T @ J) * chi2 / dof
        err = np.sqrt(np.clip(np.diag(cov), 0, None)) * scale
    except np.linalg.LinAlgError:
        err = np.full(n_par, np.nan)
    p = np.abs(sol.x) * scale
    return QpnFitResult(
        g_fit=float(p[0]),
        noise_offset=float(p[1]),
        rotation_noise_slope=float(np.abs(sol.x[2])) if include_rotation_noise else 0.0,
        residual_rms=float(np.sqrt(np.mean((model(sol.x) - ys) ** 2)) * scale),
        g_err=float(err[0]),
        noise_offset_err=float(err[1]),
        rotation_noise_slope_err=float(err[2] / scale) if include_rotation_noise else np.nan,
        n_iter=int(sol.nfev),
        residuals=(model(sol.x) - ys) * scale,
    )


def synthetic_qpn_data(omega_sum, g, noise_offset, delta_c, slope=0.0,
                       scatter=0.0, rng=None):
    """Synthetic projection-noise data: model std at each ``omega_sum`` with relative scatter."""
    w = np.asarray(omega_sum, dtype=float)
    std = np.sqrt((g * _qpn_shape(w, delta_c)) ** 2 + noise_offset ** 2 + (slope * w) ** 2)
    if scatter:
        std = std * (1.0 + scatter * rng.standard_normal(w.shape))
    return std
