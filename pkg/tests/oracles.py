"""Independent reference computations for the tests.

Written against the physics directly with ``math``/``mpmath`` and explicit
loops, sharing no code with the package. Tests use them to freeze expected
values and to cross-check the vectorized implementations.
"""

import math

import mpmath as mp

C = 299792458.0
KB = 1.380649e-23
AMU = 1.66053906660e-27
M_SR87 = 86.9088774970 * AMU
TWO_PI = 2.0 * math.pi


def shift(n, g, delta):
    # cavity-like eigenvalue minus the detuning, evaluated at high precision
    n, g, delta = mp.mpf(n), mp.mpf(g), mp.mpf(delta)
    return float((-delta + mp.sqrt(delta ** 2 + 4 * g ** 2 * n)) / 2)


def shift_inverse_single(w, g, delta):
    return w * delta / g ** 2 * (1 + w / delta)


def sum_shift_inverse(ws, g, delta):
    return ws * delta / g ** 2 * (1 + ws / (2 * delta))


def qpn_from_atoms(n, g, delta):
    # 2 |d omega / d N| sqrt(N)/2 with Omega^2 = 4 g^2 (N/2)
    omega_sq = 4 * g * g * n / 2
    return g * g * math.sqrt(n) / math.sqrt(delta ** 2 + omega_sq)


def peak_coupling(gamma, lam, w0, length):
    # d0 from the spontaneous decay rate, then g0 = d0 sqrt(omega/(2 eps0 hbar V))
    eps0 = 8.8541878128e-12
    hbar = 1.054571817e-34
    omega = TWO_PI * C / lam
    d0_sq = 3 * math.pi * eps0 * hbar * C ** 3 * gamma / omega ** 3
    vol = math.pi * w0 ** 2 * length / 4
    return math.sqrt(d0_sq * omega / (2 * eps0 * hbar * vol))


def thermal_sigma(temp, omega_trap):
    return math.sqrt(KB * temp / (M_SR87 * omega_trap ** 2))


def coupling_moments_quad(g0, w0, sy, sz, zc=0.0):
    """<g^2>, <g^4> by 2-D mpmath quadrature over the Gaussian cloud."""
    mp.mp.dps = 30

    def avg(power, s, c):
        if s == 0:
            return mp.e ** (-2 * power * c ** 2 / w0 ** 2)
        f = lambda x: (mp.e ** (-(x - c) ** 2 / (2 * s ** 2)) / (mp.sqrt(2 * mp.pi) * s)
                       * mp.e ** (-2 * power * x ** 2 / w0 ** 2))
        return mp.quad(f, [-mp.inf, c - 5 * s, c, c + 5 * s, mp.inf])

    g2 = (g0 ** 2 / 2) * avg(1, sy, 0) * avg(1, sz, zc)
    g4 = (g0 ** 2 / 2) ** 2 * avg(2, sy, 0) * avg(2, sz, zc)
    return float(g2), float(g4)


def overlap_pearson_quad(w0, sz, sep):
    """Pearson of the two mode-weighted readings: <wA wB>/sqrt(<wA^2><wB^2>) over Z."""
    mp.mp.dps = 30
    h = mp.mpf(sep) / 2

    def m(f):
        dens = lambda z: mp.e ** (-z ** 2 / (2 * sz ** 2)) / (mp.sqrt(2 * mp.pi) * sz)
        return mp.quad(lambda z: dens(z) * f(z), [-mp.inf, -5 * sz, 0, 5 * sz, mp.inf])

    wa = lambda z: mp.e ** (-2 * (z + h) ** 2 / w0 ** 2)
    wb = lambda z: mp.e ** (-2 * (z - h) ** 2 / w0 ** 2)
    return float(m(lambda z: wa(z) * wb(z)) / mp.sqrt(m(lambda z: wa(z) ** 2)
                                                     * m(lambda z: wb(z) ** 2)))


def wineland_db(r_db, ci, cf):
    return r_db + 10 * math.log10(ci / cf ** 2)


def squeeze_model(a, n_ph, q, n_atoms, ratio):
    """Observed and intrinsic noise ratios of the pre/final readout model."""
    qpn = n_atoms / 4
    s2 = a * a / (n_ph * q)
    post = qpn * s2 / (qpn + s2)
    return (post + s2 / ratio) / qpn, post / qpn


def adev_overlapping_loop(y, m):
    """Overlapping Allan variance from frequency data with explicit loops."""
    n = len(y)
    total, count = 0.0, 0
    for j in range(n - 2 * m + 1):
        a = sum(y[j:j + m]) / m
        b = sum(y[j + m:j + 2 * m]) / m
        total += (b - a) ** 2
        count += 1
    return math.sqrt(total / (2 * count)), count
