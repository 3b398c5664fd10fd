"""From trap and cavity parameters to the effective coupling and atom number.

Run: python demos/coupling_budget.py
"""

from squeezeclock import presets
from squeezeclock.cavity import atom_number_from_sum_shift, qpn_shift_noise
from squeezeclock.core import cooperativity, khz, to_hz, to_khz
from squeezeclock.geometry import effective_coupling, overlap_correlation, qpn_change_db

mode, cloud = presets.mode_geometry(), presets.cloud()
g_eff, frac = effective_coupling(mode, cloud)
print(f"peak coupling        g0    = 2pi x {to_khz(mode.g0):.3f} kHz")
print(f"radial cloud width   sigma = {cloud.sigma_y * 1e6:.2f} um")
print(f"effective coupling   g     = 2pi x {to_khz(g_eff):.3f} kHz "
      f"(N_eff / N = {frac:.3f})")

params = presets.cavity_params()
print(f"single-atom cooperativity  = {cooperativity(params):.4f}")

for shift_khz in (50.0, 215.0, 400.0):
    w = khz(shift_khz)
    n = atom_number_from_sum_shift(w, params)
    print(f"sum shift 2pi x {shift_khz:5.0f} kHz -> N = {n:8.0f}, "
          f"projection-noise std 2pi x {to_hz(qpn_shift_noise(w, params)):6.0f} Hz")

print("\nensemble overlap versus transport distance")
for sep_um in (0, 35.5, 71, 150, 284):
    rho = overlap_correlation(mode, cloud, sep_um * 1e-6)
    print(f"  {sep_um:6.1f} um  Pearson {rho:8.5f}  QPN change {qpn_change_db(rho):+8.3f} dB")
