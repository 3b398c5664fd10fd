"""Experiment pipelines behind the command-line front end.

Each pipeline takes resolved scenario parameters, a master seed and a thread
count, and returns an :class:`Outputs` bundle. Nothing here touches the file
system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import presets
from .cavity import fit_coupling, synthetic_qpn_data
from .clock import SequenceConfig
from .core import CavityParams, EnsembleSpec, cooperativity, hz, to_hz
from .geometry import (CloudDistribution, ModeGeometry, effective_coupling,
                       empirical_effective_coupling, ensemble_correlation_vs_separation,
                       peak_coupling, sample_atom_couplings, thermal_sigma)
from .io import read_csv_columns
from .rng import stream
from .squeezing import (SWEEP_COLUMNS, SqueezeConfig, calibrate_readout, calibrate_scatter_loss,
                        quantum_efficiency, sweep_probe_strength)
from .stats import allan_deviation, compare_clocks, qpn_limit, sql_limit, stability_coeff

ADEV_COLUMNS = ("tau_s", "sigma_y", "error_bar", "n_samples")
RECORD_COLUMNS = ("shot", "dn_a_pre", "dn_a_final", "dn_b_pre", "dn_b_final")


@dataclass
class Outputs:
    summary: dict
    tables: dict = field(default_factory=dict)      # name -> (columns, rows)
    documents: dict = field(default_factory=dict)   # name -> JSON-ready object


def grid(spec):
    if isinstance(spec, dict):
        if spec.get("log"):
            return np.geomspace(spec["start"], spec["stop"], spec["num"])
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


def _mode(cav):
    g0 = peak_coupling(hz(cav["gamma_hz"]), cav["wavelength_m"], cav["waist_m"],
                       cav["cavity_length_m"])
    return ModeGeometry(cav["waist_m"], g0)


def _cloud(cl):
    return CloudDistribution(thermal_sigma(cl["temperature_k"], hz(cl["radial_trap_hz"])),
                             cl["sigma_z_m"], cl["z_center_m"])


def calibrate_coupling(p, seed, threads=1):
    cav = p["cavity"]
    mode = _mode(cav)
    cloud = _cloud(p["cloud"])
    g_eff, frac = effective_coupling(mode, cloud, p["method"])
    params = CavityParams(hz(cav["g_hz"]), hz(cav["kappa_hz"]), hz(cav["gamma_hz"]),
                          hz(cav["delta_c_hz"]), cav["waist_m"], cav["cavity_length_m"],
                          cav["wavelength_m"])
    rows = [("g0_hz", to_hz(mode.g0)),
            ("g_eff_hz", to_hz(g_eff)),
            ("n_eff_fraction", frac),
            ("sigma_y_m", cloud.sigma_y),
            ("cooperativity", cooperativity(params)),
            ("cooperativity_geometric", 4.0 * g_eff ** 2 / (params.kappa * params.gamma))]
    if p["monte_carlo_atoms"] > 0:
        w = sample_atom_couplings(mode, cloud, p["monte_carlo_atoms"], seed)
        g_mc, frac_mc = empirical_effective_coupling(w)
        rows += [("g_eff_mc_hz", to_hz(g_mc)), ("n_eff_fraction_mc", frac_mc)]
    summary = dict(rows)
    return Outputs(summary, {"coupling": (("quantity", "value"), rows)})


def qpn_fit(p, seed, threads=1):
    delta_c = hz(p["delta_c_hz"])
    if "data" in p:
        w_hz = np.asarray(p["data"]["omega_sum_hz"], float)
        s_hz = np.asarray(p["data"]["std_hz"], float)
    elif "data_csv" in p:
        cols = read_csv_columns(p["data_csv"])
        w_hz, s_hz = cols["omega_sum_hz"], cols["std_hz"]
    else:
        syn = {"g_hz": to_hz(presets.COUPLING), "noise_offset_hz": to_hz(presets.NOISE_OFFSET),
               "scatter": 0.05, "rotation_slope": 0.0,
               "omega_sum_hz": {"start": 2e4, "stop": 5e5, "num": 20}}
        syn.update(p["synthetic"])
        w_hz = grid(syn["omega_sum_hz"])
        s_hz = to_hz(synthetic_qpn_data(hz(w_hz), hz(syn["g_hz"]), hz(syn["noise_offset_hz"]),
                                        delta_c, syn["rotation_slope"], syn["scatter"],
                                        stream(seed, 0)))
    fit = fit_coupling(hz(w_hz), hz(s_hz), delta_c, p["include_rotation_noise"])
    model = to_hz(fit.model(hz(w_hz), delta_c))
    summary = {"g_fit_hz": to_hz(fit.g_fit), "g_err_hz": to_hz(fit.g_err),
               "noise_offset_hz": to_hz(fit.noise_offset),
               "noise_offset_err_hz": to_hz(fit.noise_offset_err),
               "rotation_noise_slope": fit.rotation_noise_slope,
               "residual_rms_hz": to_hz(fit.residual_rms), "n_points": int(w_hz.size)}
    rows = list(zip(w_hz, s_hz, model, s_hz - model))
    return Outputs(summary, {"qpn_fit": (("omega_sum_hz", "std_hz", "model_hz", "residual_hz"),
                                         rows)})


def squeeze_sweep(p, seed, threads=1):
    n_atoms = p["n_atoms"]
    q = p.get("quantum_efficiency", quantum_efficiency())
    cal = p["calibration"]
    if "readout" in p:
        r = p["readout"]
        scale = r.get("detection_noise_scale", 0.0)
        ratio = r.get("final_photon_ratio", 1.0)
        eta = r.get("scatter_loss_coeff", 0.0)
    else:
        scale, ratio = calibrate_readout(cal["observed_r_db"], cal["intrinsic_r_db"],
                                         cal["photons"], q, n_atoms)
        eta = calibrate_scatter_loss(p["contrast_i"], cal["contrast_f"], cal["photons"])
    base = SqueezeConfig(cal["photons"], q, scale, eta, p["excess_antisqueeze_db"], ratio)
    photons = grid(p["photons"])
    rows = sweep_probe_strength(photons, base, n_atoms, p["n_trials"], seed,
                                p["contrast_i"], threads)
    op = sweep_probe_strength([cal["photons"]], base, n_atoms, p["n_trials"], seed,
                              p["contrast_i"], threads)[0]
    xi = np.array([r.xi_db for r in rows])
    k = int(np.argmin(xi))
    summary = {"detection_noise_scale": scale, "final_photon_ratio": ratio,
               "scatter_loss_coeff": eta, "quantum_efficiency": q,
               "operating_photons": cal["photons"], "R_db": op.R_db,
               "R_inferred_db": op.R_inferred_db, "xi_db": op.xi_db,
               "xi_inferred_db": op.xi_inferred_db, "contrast_f": op.contrast_f,
               "beta": op.beta, "xi_min_db": float(xi[k]), "xi_min_photons": float(photons[k]),
               "xi_interior_minimum": bool(0 < k < len(xi) - 1)}
    table = [tuple(getattr(r, c) for c in SWEEP_COLUMNS) for r in rows]
    return Outputs(summary, {"squeeze_sweep": (SWEEP_COLUMNS, table)})


def correlation_sweep(p, seed, threads=1):
    mode = _mode(p["cavity"])
    cloud = _cloud(p["cloud"])
    rows = []
    for i, sep_um in enumerate(grid(p["separations_um"])):
        r = ensemble_correlation_vs_separation(mode, cloud, sep_um * 1e-6, p["detection_noise"],
                                               p["n_trials"], seed, p["n_atoms"],
                                               threads=threads, stream_key=i)
        rows.append((float(sep_um), r.pearson, r.qpn_change_db, r.analytic_qpn_change_db,
                     r.pearson_err, r.qpn_change_err, r.analytic_pearson))
    cols = ("separation_um", "pearson", "qpn_change_db", "analytic_qpn_change_db",
            "pearson_err", "qpn_change_err", "analytic_pearson")
    summary = {"n_separations": len(rows),
               "max_qpn_change_db": float(max(r[2] for r in rows))}
    return Outputs(summary, {"correlation_sweep": (cols, rows)})


def sequence_config(p) -> SequenceConfig:
    e = p["ensemble"]
    frac = effective_coupling(presets.mode_geometry(), presets.cloud())[1]
    ens = EnsembleSpec(e.get("n_total", e["n_eff"] / frac), e["n_eff"],
                       contrast_i=e["contrast_i"], contrast_f=e["contrast_f"])
    common = dict(n_shots=p["n_shots"], laser_noise_std=p["laser_noise_std_rad"],
                  final_photon_ratio=p["final_photon_ratio"], cycle_time=p["cycle_time_s"],
                  ensemble=ens, ramsey_time=p["ramsey_time_s"],
                  laser_noise_kind=p["laser_noise_kind"])
    if "calibrate" in p:
        return presets.comparison_config(enhancement_db=p["calibrate"]["enhancement_db"],
                                         beta_d=p["calibrate"]["beta_d"],
                                         quantum_efficiency=p.get("quantum_efficiency"), **common)
    base = presets.squeeze_config()
    sq = SqueezeConfig(p.get("pre_photons", presets.SQUEEZE_PHOTONS),
                       p.get("quantum_efficiency", base.quantum_efficiency),
                       p.get("detection_noise_scale", base.detection_noise_scale),
                       0.0, presets.EXCESS_ANTISQUEEZE_DB, p["final_photon_ratio"])
    return SequenceConfig("sss_sss", ens, ens, sq, p["ramsey_time_s"], p["cycle_time_s"],
                          p["n_shots"], p["laser_noise_std_rad"], p["laser_noise_kind"],
                          p.get("asymmetry", 0.0))


def _adev_rows(curve):
    return list(zip(curve.tau, curve.sigma_y, curve.error_bar, curve.n_samples))


def clock_comparison(p, seed, threads=1):
    cfg = sequence_config(p)
    (css_rec, css), (sss_rec, sss) = compare_clocks(
        cfg, seed, threads, p.get("taus_s"), p["fringe_shots_per_phase"],
        p["transition_frequency_hz"])
    n_a, n_b = cfg.ensemble_a.n_eff, cfg.ensemble_b.n_eff
    c_i = cfg.ensemble_a.contrast_i
    tables, estimators = {}, {}
    for rec, res in ((css_rec, css), (sss_rec, sss)):
        tables[f"records_{res.mode}"] = (RECORD_COLUMNS, list(zip(*rec.columns().values())))
        tables[f"adev_{res.mode}"] = (ADEV_COLUMNS, _adev_rows(res.adev))
        e = res.estimators
        estimators[res.mode] = {
            "beta_a": e.beta_a, "beta_b": e.beta_b, "beta_d": e.beta_d,
            "beta_a_err": e.beta_a_err, "beta_b_err": e.beta_b_err, "beta_d_err": e.beta_d_err,
            "full_length": dict(zip(("beta_a", "beta_b", "beta_d"), e.full)),
            "fringe_amplitude": res.fringe_amplitude,
        }
    summary = {
        "enhancement_db": sss.enhancement_db,
        "adev_enhancement_db": 20.0 * np.log10(css.stability_coeff / sss.stability_coeff),
        "css_phase_std_rad": css.phase_std, "css_phase_std_err_rad": css.phase_std_err,
        "sss_phase_std_rad": sss.phase_std, "sss_phase_std_err_rad": sss.phase_std_err,
        "css_stability_coeff": css.stability_coeff, "sss_stability_coeff": sss.stability_coeff,
        "qpn_limit_rad": qpn_limit(n_a, n_b, c_i),
        "sql_limit_rad": sql_limit(n_a, n_b, c_i, 1.0),
        "differential_qpn_bound_rad": css.qpn_bound,
        "differential_sql_bound_rad": css.sql_bound,
        "beta_a": sss.estimators.beta_a, "beta_b": sss.estimators.beta_b,
        "beta_d": sss.estimators.beta_d,
        "pre_photons": cfg.squeeze.photons_per_measurement,
        "asymmetry": cfg.asymmetry,
        "detection_noise_scale": cfg.squeeze.detection_noise_scale,
    }
    return Outputs(summary, tables, {"estimators": estimators})


def adev(p, seed, threads=1):
    if "phase_series_rad" in p:
        phase = np.asarray(p["phase_series_rad"], float)
    else:
        syn = p["synthetic"]
        phase = syn["phase_std_rad"] * stream(seed, 0).standard_normal(syn["n_points"])
    curve = allan_deviation(phase, p["ramsey_time_s"], p["cycle_time_s"],
                            p["transition_frequency_hz"], p.get("taus_s"))
    summary = {"stability_coeff": stability_coeff(curve), "n_points": int(phase.size),
               "tau_adjusted": bool(np.any(curve.tau_adjusted)), "adev_kind": curve.kind}
    return Outputs(summary, {"adev": (ADEV_COLUMNS, _adev_rows(curve))})


PIPELINES = {
    "calibrate-coupling": calibrate_coupling,
    "qpn-fit": qpn_fit,
    "squeeze-sweep": squeeze_sweep,
    "correlation-sweep": correlation_sweep,
    "compare-clocks": clock_comparison,
    "adev": adev,
}
