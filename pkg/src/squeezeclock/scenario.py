"""Scenario files: loading, schema validation and default resolution.

A scenario is a YAML document::

    name: paper-repro
    command: compare-clocks
    seed: 20231016
    parameters:
      n_shots: 20000
      ...

Frequencies are given in Hz, lengths in m and times in s. Missing parameters
take the defaults below. A run manifest (JSON) is also accepted as a
scenario; its ``scenario`` entry is used.
"""

from __future__ import annotations

import copy
import json
import re
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from . import presets
from .core import to_hz

COMMANDS = ("calibrate-coupling", "qpn-fit", "squeeze-sweep", "correlation-sweep",
            "compare-clocks", "adev")
MAX_SEED = 2 ** 64 - 1


class ScenarioError(ValueError):
    """Schema or invariant violations; ``diagnostics`` lists one per problem."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


# --- schema pieces ------------------------------------------------------------

def _num(minimum=None, exclusive=False):
    s = {"type": "number"}
    if minimum is not None:
        s["exclusiveMinimum" if exclusive else "minimum"] = minimum
    return s


POS = _num(0, exclusive=True)
NONNEG = _num(0)
FRACTION = {"type": "number", "minimum": 0, "maximum": 1}
COUNT = {"type": "integer", "minimum": 1}
RANGE = {
    "type": "object",
    "properties": {"start": NONNEG, "stop": NONNEG, "num": COUNT, "log": {"type": "boolean"}},
    "required": ["start", "stop", "num"],
    "additionalProperties": False,
}
GRID = {"oneOf": [{"type": "array", "items": NONNEG, "minItems": 1}, RANGE]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


CAVITY = _obj({"g_hz": NONNEG, "kappa_hz": POS, "gamma_hz": POS, "delta_c_hz": POS,
               "waist_m": POS, "cavity_length_m": POS, "wavelength_m": POS})
CLOUD = _obj({"temperature_k": NONNEG, "radial_trap_hz": POS, "sigma_z_m": NONNEG,
              "z_center_m": {"type": "number"}})

PARAMETERS = {
    "calibrate-coupling": _obj({
        "cavity": CAVITY, "cloud": CLOUD,
        "method": {"enum": ["auto", "closed", "quad"]},
        "monte_carlo_atoms": {"type": "integer", "minimum": 0},
    }),
    "qpn-fit": _obj({
        "delta_c_hz": POS,
        "include_rotation_noise": {"type": "boolean"},
        "data_csv": {"type": "string"},
        "data": _obj({"omega_sum_hz": {"type": "array", "items": NONNEG},
                      "std_hz": {"type": "array", "items": POS}},
                     ["omega_sum_hz", "std_hz"]),
        "synthetic": _obj({"g_hz": POS, "noise_offset_hz": NONNEG, "scatter": NONNEG,
                           "rotation_slope": NONNEG, "omega_sum_hz": GRID}),
    }),
    "squeeze-sweep": _obj({
        "n_atoms": POS,
        "photons": GRID,
        "n_trials": {"type": "integer", "minimum": 2},
        "contrast_i": FRACTION,
        "quantum_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "excess_antisqueeze_db": NONNEG,
        "calibration": _obj({"photons": POS, "observed_r_db": {"type": "number"},
                             "intrinsic_r_db": {"type": "number"}, "contrast_f": FRACTION}),
        "readout": _obj({"detection_noise_scale": NONNEG, "final_photon_ratio": POS,
                         "scatter_loss_coeff": NONNEG}),
    }),
    "correlation-sweep": _obj({
        "separations_um": GRID,
        "detection_noise": NONNEG,
        "n_trials": {"type": "integer", "minimum": 2},
        "n_atoms": COUNT,
        "cavity": CAVITY, "cloud": CLOUD,
    }),
    "compare-clocks": _obj({
        "n_shots": {"type": "integer", "minimum": 10},
        "ramsey_time_s": POS,
        "cycle_time_s": POS,
        "transition_frequency_hz": POS,
        "laser_noise_std_rad": NONNEG,
        "laser_noise_kind": {"enum": ["white", "flicker"]},
        "final_photon_ratio": POS,
        "ensemble": _obj({"n_eff": POS, "n_total": POS, "contrast_i": FRACTION,
                          "contrast_f": FRACTION}),
        "calibrate": _obj({"enhancement_db": POS, "beta_d": POS}),
        "pre_photons": NONNEG,
        "asymmetry": {"type": "number", "exclusiveMinimum": -1},
        "detection_noise_scale": NONNEG,
        "quantum_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "fringe_shots_per_phase": COUNT,
        "taus_s": {"type": "array", "items": POS, "minItems": 1},
    }),
    "adev": _obj({
        "ramsey_time_s": POS,
        "cycle_time_s": POS,
        "transition_frequency_hz": POS,
        "phase_series_rad": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "synthetic": _obj({"phase_std_rad": NONNEG, "n_points": {"type": "integer", "minimum": 2}}),
        "taus_s": {"type": "array", "items": POS, "minItems": 1},
    }),
}

TOP = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": MAX_SEED},
        "output_dir": {"type": "string"},
        "parameters": {"type": "object"},
    },
    "required": ["command", "seed"],
    "additionalProperties": False,
}


# --- defaults ---------------------------------------------------------------------

def _cavity_defaults():
    return {"g_hz": to_hz(presets.COUPLING), "kappa_hz": to_hz(presets.KAPPA),
            "gamma_hz": to_hz(presets.GAMMA), "delta_c_hz": to_hz(presets.DELTA_C),
            "waist_m": presets.WAIST, "cavity_length_m": presets.CAVITY_LENGTH,
            "wavelength_m": presets.PROBE_WAVELENGTH}


def _cloud_defaults():
    return {"temperature_k": presets.TEMPERATURE,
            "radial_trap_hz": to_hz(presets.RADIAL_TRAP_FREQUENCY),
            "sigma_z_m": presets.SIGMA_Z, "z_center_m": 0.0}


def defaults(command):
    if command == "calibrate-coupling":
        return {"cavity": _cavity_defaults(), "cloud": _cloud_defaults(), "method": "auto",
                "monte_carlo_atoms": 0}
    if command == "qpn-fit":
        return {"delta_c_hz": to_hz(presets.DELTA_C), "include_rotation_noise": False}
    if command == "squeeze-sweep":
        return {"n_atoms": presets.SQUEEZE_ATOMS,
                "photons": {"start": 2e3, "stop": 3e5, "num": 16, "log": True},
                "n_trials": 10000, "contrast_i": 0.71,
                "excess_antisqueeze_db": presets.EXCESS_ANTISQUEEZE_DB,
                "calibration": {"photons": presets.SQUEEZE_PHOTONS,
                                "observed_r_db": presets.OBSERVED_R_DB,
                                "intrinsic_r_db": presets.INTRINSIC_R_DB,
                                "contrast_f": 0.60}}
    if command == "correlation-sweep":
        return {"separations_um": {"start": 0.0, "stop": 4 * presets.WAIST * 1e6, "num": 9},
                "detection_noise": 0.0, "n_trials": 2000, "n_atoms": 2000,
                "cavity": _cavity_defaults(), "cloud": _cloud_defaults()}
    if command == "compare-clocks":
        return {"n_shots": 20000, "ramsey_time_s": presets.RAMSEY_TIME,
                "cycle_time_s": presets.CYCLE_TIME,
                "transition_frequency_hz": 4.2922880e14,
                "laser_noise_std_rad": 0.3, "laser_noise_kind": "white",
                "final_photon_ratio": 200.0,
                "ensemble": {"n_eff": presets.COMPARISON_ATOMS, "contrast_i": 0.55,
                             "contrast_f": 0.50},
                "fringe_shots_per_phase": 500}
    if command == "adev":
        return {"ramsey_time_s": presets.RAMSEY_TIME, "cycle_time_s": presets.CYCLE_TIME,
                "transition_frequency_hz": 4.2922880e14}
    raise KeyError(command)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e6``-style numbers as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


# --- loading and validation ------------------------------------------------------------

def bundled_scenarios():
    root = resources.files("squeezeclock") / "scenarios"
    return sorted(p.name[:-len(".scenario")] for p in root.iterdir()
                  if p.name.endswith(".scenario"))


def read_text(path):
    """Scenario text from a file path or a bundled preset name."""
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    name = p.name[:-len(".scenario")] if p.name.endswith(".scenario") else p.name
    if name in bundled_scenarios() and len(p.parts) == 1:
        return (resources.files("squeezeclock") / "scenarios" / f"{name}.scenario").read_text(
            encoding="utf-8")
    raise ScenarioError([f"scenario file not found: {path}"])


def parse(text):
    """Scenario mapping from YAML (or manifest JSON) text."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"not a valid scenario document: {exc}"]) from None
    if doc is None:
        raise ScenarioError(["(root): scenario is empty"])
    if isinstance(doc, dict) and "scenario" in doc and "manifest_version" in doc:
        doc = doc["scenario"]
    return doc


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "(root)"


def diagnostics(doc, command=None):
    """List of human-readable problems; empty when the scenario is valid."""
    if not isinstance(doc, dict):
        return ["(root): scenario must be a mapping"]
    out = []
    if command is not None and doc.get("command", command) != command:
        out.append(f"command: scenario is for {doc['command']!r}, not {command!r}")
    doc = dict(doc)
    if command is not None:
        doc.setdefault("command", command)
    v = jsonschema.Draft202012Validator(TOP)
    out += [f"{_path(e)}: {e.message}" for e in sorted(v.iter_errors(doc), key=str)]
    cmd = doc.get("command")
    if cmd in PARAMETERS:
        params = doc.get("parameters") or {}
        pv = jsonschema.Draft202012Validator(PARAMETERS[cmd])
        out += [f"parameters.{_path(e)}: {e.message}".replace(".(root)", "")
                for e in sorted(pv.iter_errors(params), key=str)]
        if not out:
            out += _invariants(cmd, _merge(defaults(cmd), params))
    return out


def _invariants(cmd, p):
    out = []
    if cmd == "compare-clocks":
        e = p["ensemble"]
        if e["contrast_f"] > e["contrast_i"]:
            out.append("parameters.ensemble: contrast_f must not exceed contrast_i")
        if "n_total" in e and e["n_total"] < e["n_eff"]:
            out.append("parameters.ensemble: n_eff must not exceed n_total")
        if p["cycle_time_s"] < p["ramsey_time_s"]:
            out.append("parameters.cycle_time_s: must be >= ramsey_time_s")
        explicit = {"pre_photons", "asymmetry", "detection_noise_scale"} & set(p)
        if "calibrate" in p and explicit:
            out.append("parameters.calibrate: cannot be combined with "
                       + ", ".join(sorted(explicit)))
    if cmd == "squeeze-sweep":
        if p["calibration"]["contrast_f"] > p["contrast_i"]:
            out.append("parameters.calibration.contrast_f: must not exceed contrast_i")
        if p["calibration"]["intrinsic_r_db"] > p["calibration"]["observed_r_db"]:
            out.append("parameters.calibration.intrinsic_r_db: must not exceed observed_r_db")
    if cmd == "qpn-fit":
        sources = [k for k in ("data", "data_csv", "synthetic") if k in p]
        if len(sources) != 1:
            out.append("parameters: exactly one of data, data_csv, synthetic is required")
        elif "data" in p and len(p["data"]["omega_sum_hz"]) != len(p["data"]["std_hz"]):
            out.append("parameters.data: omega_sum_hz and std_hz differ in length")
    if cmd == "adev":
        if ("phase_series_rad" in p) == ("synthetic" in p):
            out.append("parameters: exactly one of phase_series_rad, synthetic is required")
        if p["cycle_time_s"] < p["ramsey_time_s"]:
            out.append("parameters.cycle_time_s: must be >= ramsey_time_s")
    for key in ("separations_um", "photons", "omega_sum_hz"):
        g = p.get(key) if key != "omega_sum_hz" else p.get("synthetic", {}).get(key)
        if isinstance(g, dict) and g.get("log") and g["start"] <= 0:
            out.append(f"parameters.{key}.start: must be > 0 for a log grid")
    return out


def resolve(doc, command=None, seed=None):
    """Validated scenario with defaults filled in.

    Raises
    ------
    ScenarioError
        With one diagnostic per schema or invariant violation.
    """
    diag = diagnostics(doc, command)
    if diag:
        raise ScenarioError(diag)
    cmd = doc.get("command", command)
    out = {"name": doc.get("name", cmd), "command": cmd,
           "seed": int(doc["seed"] if seed is None else seed),
           "parameters": _merge(defaults(cmd), doc.get("parameters") or {})}
    p = out["parameters"]
    if cmd == "compare-clocks" and not ({"calibrate", "pre_photons", "asymmetry",
                                         "detection_noise_scale"} & set(p)):
        p["calibrate"] = {"enhancement_db": presets.TARGET_ENHANCEMENT_DB,
                          "beta_d": presets.TARGET_BETA_D}
    if not 0 <= out["seed"] <= MAX_SEED:
        raise ScenarioError([f"seed: {out['seed']} is outside 0..2**64-1"])
    if "output_dir" in doc:
        out["output_dir"] = doc["output_dir"]
    return out


def load(path, command=None, seed=None):
    return resolve(parse(read_text(path)), command, seed)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
