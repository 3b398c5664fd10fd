"""Squeezed versus unsqueezed differential clock comparison.

Run: python demos/clock_comparison.py [seed]
"""

import sys

from squeezeclock import presets
from squeezeclock.stats import compare_clocks, qpn_limit, sql_limit

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
cfg = presets.comparison_config()
print(f"calibrated pre-measurement photons {cfg.squeeze.photons_per_measurement:.0f}, "
      f"ensemble-B phase response x{1 + cfg.asymmetry:.4f}")

(_, css), (_, sss) = compare_clocks(cfg, seed)
for res in (css, sss):
    e = res.estimators
    print(f"{res.mode}: phase std {res.phase_std:.5f} rad (bound {res.qpn_bound:.5f}), "
          f"beta = ({e.beta_a:.3f}, {e.beta_b:.3f}, {e.beta_d:.3f}), "
          f"stability {res.stability_coeff:.3g} / sqrt(tau)")
print(f"enhancement {sss.enhancement_db:.2f} dB")

n = cfg.ensemble_a.n_eff
c_i = cfg.ensemble_a.contrast_i
print(f"projection-noise limit {qpn_limit(n, n, c_i):.5f} rad, "
      f"standard quantum limit {sql_limit(n, n, c_i):.5f} rad")
print("\nADEV of the squeezed comparison")
for tau, s, err in zip(sss.adev.tau, sss.adev.sigma_y, sss.adev.error_bar):
    print(f"  tau {tau:8.0f} s  sigma_y {s:.3e} +/- {err:.1e}")
