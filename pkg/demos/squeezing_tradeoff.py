"""Noise reduction against contrast loss as the probe gets stronger.

Run: python demos/squeezing_tradeoff.py
"""

import numpy as np

from squeezeclock import presets
from squeezeclock.squeezing import model_sweep, sweep_probe_strength

cfg = presets.squeeze_config()
n_atoms = presets.SQUEEZE_ATOMS
photons = np.geomspace(2e3, 3e5, 12)

R, R_int, penalty, xi = model_sweep(photons, cfg, n_atoms, contrast_i=0.71)
rows = sweep_probe_strength(photons, cfg, n_atoms, 10_000, seed=1, contrast_i=0.71)

print(f"readout scale {cfg.detection_noise_scale:.1f}, final/pre photon ratio "
      f"{cfg.final_photon_ratio:.3f}, Q = {cfg.quantum_efficiency:.3f}")
print(f"{'n_ph':>9} {'R sim':>7} {'R model':>8} {'R intr':>7} {'C_f':>6} {'xi sim':>7} "
      f"{'xi model':>9}")
for r, m_R, m_Ri, m_xi in zip(rows, R, R_int, xi):
    print(f"{r.n_ph:9.3g} {r.R_db:7.2f} {m_R:8.2f} {m_Ri:7.2f} {r.contrast_f:6.3f} "
          f"{r.xi_db:7.2f} {m_xi:9.2f}")
k = int(np.argmin(xi))
print(f"\nbest metrological gain {xi[k]:.2f} dB at {photons[k]:.3g} photons")
