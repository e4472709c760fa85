"""Declarative run configuration: schema, presets, builders.

A run config is a nested mapping with sections seed/threads/output_dir and
bath/oscillator/cavity/synth/fit/nonmarkov.  load_config merges defaults,
an optional preset, an optional YAML file, and dotted-key overrides, then
schema-validates: unknown keys are rejected with their full path, values
are type-coerced, and the resolved ("effective") config can be echoed as
sorted-key YAML so any run is reproducible from the echo alone.

Presets:
  * paper        physics-scale Ohmic bath, locked cavity, time-series synth
                 sized as 900 records x 2^20 samples (9000 batches of 1e5)
  * paper-synth  synthetic-spectra pipeline: power-law corridor truth,
                 90 spectra of 100 averages, log-space exponent fit
"""

from __future__ import annotations

import copy
import math

import numpy as np
import yaml

from . import optomech, synth
from .bath import model_from_dict
from .errors import BathspecError, ConfigError
from .estimate import FitOptions, FitWindow
from .units import OscillatorParams

__all__ = [
    "default_config",
    "preset_config",
    "load_config",
    "effective_yaml",
    "build_model",
    "build_oscillator",
    "build_cavity",
    "build_synth_config",
    "build_fit_window",
    "build_fit_options",
]

_OMEGA_PAPER = 2.0 * math.pi * 914e3
_GAMMA_PAPER = _OMEGA_PAPER / 215.0
_MASS_PAPER = 2.4e-11

_DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "output_dir": "bathspec-out",
    "bath": {
        "variant": "ohmic_cutoff",
        "coupling": _MASS_PAPER * _GAMMA_PAPER / math.pi,
        "cutoff": 1e7 * _OMEGA_PAPER,
    },
    "oscillator": {
        "mass_kg": _MASS_PAPER,
        "frequency_hz": 914e3,
        "quality": 215.0,
        "temperature_k": 300.0,
    },
    "cavity": {
        "enabled": False,
        "kappa_rad_s": 2.0 * math.pi * 1.3e6,
        "lock_detuning": True,
        "bare_detuning_rad_s": 0.0,
        "length_m": 0.025,
        "cavity_freq_rad_s": 1.7704e15,
        "input_power_w": 1e-4,
        "efficiency": 1.0,
    },
    "synth": {
        "mode": "spectra",
        "n_spectra": 90,
        "n_averages": 100,
        "n_records": 1,
        "n_samples": 100000,
        "batch_samples": 100000,
        "sample_rate_hz": 1e7,
        "scale": "auto",
        "floor": 0.0,
        "modes": [],
    },
    "fit": {
        "window_hz": [885e3, 945e3],
        "objective": "linear",
        "weighting": "uniform",
        "k_lo": -6.0,
        "k_hi": 4.0,
        "anneal_steps": 200,
        "cooling": 0.95,
        "restarts": 5,
        "shape_free_exponent": False,
        "shape_objective": "linear",
        "bootstrap_resamples": 400,
    },
    "nonmarkov": {
        "omega_ref": 1.0,
        "half_window": 0.03,
    },
}

_PRESETS = {
    "paper": {
        "seed": 20260816,
        "synth": {
            "mode": "timeseries",
            "n_records": 900,
            "n_samples": 2**20,
            "batch_samples": 100000,
            "n_averages": 100,
        },
        "cavity": {"enabled": True},
    },
    "paper-synth": {
        "seed": 20260816,
        "bath": {
            "variant": "piecewise_power_window",
            "density_at_ref": _OMEGA_PAPER,
            "omega_ref": _OMEGA_PAPER,
            "exponent": -2.3,
            "half_window": 2.0 * math.pi * 32e3,
            "cutoff": 2.0 * math.pi * 4.9e6,
        },
        "synth": {
            "mode": "spectra",
            "n_spectra": 90,
            "n_averages": 100,
            "n_samples": 100000,
            "scale": "auto",
            "floor": 1e-6,
            "modes": [
                {"center_hz": 1.2e6, "width_hz": 1.2e6 / 215.0, "height": 0.1}
            ],
        },
        "fit": {
            "objective": "log",
            "shape_free_exponent": True,
            "shape_objective": "log",
        },
    },
}

# leaf validators: callables raising ValueError on bad input
_num = float
_pos_int = int
_string = str


def _bool(v):
    if isinstance(v, bool):
        return v
    raise ValueError("expected a boolean")


def _mode_list(v):
    if not isinstance(v, list):
        raise ValueError("expected a list of mode mappings")
    out = []
    for item in v:
        if not isinstance(item, dict):
            raise ValueError("each mode must be a mapping")
        extra = set(item) - {"center_hz", "width_hz", "height"}
        if extra:
            raise ValueError(f"unknown mode keys {sorted(extra)}")
        missing = {"center_hz", "width_hz", "height"} - set(item)
        if missing:
            raise ValueError(f"mode missing keys {sorted(missing)}")
        out.append({k: float(item[k]) for k in ("center_hz", "width_hz", "height")})
    return out


def _window_pair(v):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValueError("expected [f_min_hz, f_max_hz]")
    return [float(v[0]), float(v[1])]


_SCHEMA = {
    "seed": _pos_int,
    "threads": _pos_int,
    "output_dir": _string,
    "bath": dict,  # validated by model_from_dict at build time
    "oscillator": {
        "mass_kg": _num,
        "frequency_hz": _num,
        "quality": _num,
        "temperature_k": _num,
    },
    "cavity": {
        "enabled": _bool,
        "kappa_rad_s": _num,
        "lock_detuning": _bool,
        "bare_detuning_rad_s": _num,
        "length_m": _num,
        "cavity_freq_rad_s": _num,
        "input_power_w": _num,
        "efficiency": _num,
    },
    "synth": {
        "mode": _string,
        "n_spectra": _pos_int,
        "n_averages": _pos_int,
        "n_records": _pos_int,
        "n_samples": _pos_int,
        "batch_samples": _pos_int,
        "sample_rate_hz": _num,
        "scale": None,  # "auto" or a number; special-cased
        "floor": _num,
        "modes": _mode_list,
    },
    "fit": {
        "window_hz": _window_pair,
        "objective": _string,
        "weighting": _string,
        "k_lo": _num,
        "k_hi": _num,
        "anneal_steps": _pos_int,
        "cooling": _num,
        "restarts": _pos_int,
        "shape_free_exponent": _bool,
        "shape_objective": _string,
        "bootstrap_resamples": _pos_int,
    },
    "nonmarkov": {
        "omega_ref": _num,
        "half_window": _num,
    },
}


def _deep_merge(base, extra, path=""):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        here = f"{path}.{key}" if path else key
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            # Picking a bath variant replaces the whole section: each variant
            # has its own parameter set, so merging would leave stale keys.
            if here == "bath" and "variant" in val and val["variant"] != out[key].get("variant"):
                out[key] = copy.deepcopy(val)
            else:
                out[key] = _deep_merge(out[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _validate(cfg, schema, path=""):
    if not isinstance(cfg, dict):
        raise ConfigError(f"section '{path or '<root>'}' must be a mapping")
    out = {}
    for key, val in cfg.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key '{here}'")
        rule = schema[key]
        if isinstance(rule, dict):
            out[key] = _validate(val, rule, here)
        elif rule is dict:
            if not isinstance(val, dict):
                raise ConfigError(f"'{here}' must be a mapping")
            out[key] = copy.deepcopy(val)
        elif rule is None:
            out[key] = val if val == "auto" else _coerce(here, float, val)
        else:
            out[key] = _coerce(here, rule, val)
    return out


def _coerce(path, rule, val):
    try:
        if rule is int:
            if isinstance(val, bool):
                raise ValueError("expected an integer")
            if isinstance(val, int):
                return val
            as_float = float(val)
            if as_float != int(as_float):
                raise ValueError("expected an integer")
            return int(as_float)
        if rule is float:
            return float(val)
        if rule is str:
            if not isinstance(val, str):
                raise ValueError("expected a string")
            return val
        return rule(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{path}': {exc}") from exc


def default_config() -> dict:
    return copy.deepcopy(_DEFAULTS)


def preset_config(name: str) -> dict:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(_PRESETS)}")
    return _deep_merge(_DEFAULTS, _PRESETS[name])


def _apply_override(cfg, spec: str):
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} must look like section.key=value")
    dotted, raw = spec.split("=", 1)
    keys = dotted.strip().split(".")
    value = yaml.safe_load(raw)
    node = cfg
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigError(f"override path '{dotted}' does not name a section")
        node = node[key]
    node[keys[-1]] = value


def load_config(path=None, preset=None, overrides=()) -> dict:
    """Defaults <- preset <- YAML file <- dotted overrides, then validate."""
    cfg = default_config()
    if preset is not None:
        cfg = preset_config(preset)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        cfg = _deep_merge(cfg, loaded)
    for spec in overrides:
        _apply_override(cfg, spec)
    return _validate(cfg, _SCHEMA)


def effective_yaml(cfg) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


# ---------------------------------------------------------------------------
# builders: config sections -> domain objects


def build_model(cfg):
    try:
        return model_from_dict(cfg["bath"])
    except BathspecError as exc:
        raise ConfigError(f"bath section: {exc}") from exc


def build_oscillator(cfg) -> OscillatorParams:
    osc = cfg["oscillator"]
    try:
        return OscillatorParams(
            mass=osc["mass_kg"],
            omega=2.0 * math.pi * osc["frequency_hz"],
            quality=osc["quality"],
            temperature=osc["temperature_k"],
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"oscillator section: {exc}") from exc


def build_cavity(cfg, oscillator=None):
    """CavityParams from the cavity section, or None when disabled.

    With lock_detuning the bare detuning is chosen so the effective detuning
    in the shifted steady state is zero (needs the oscillator).
    """
    cav = cfg["cavity"]
    if not cav["enabled"]:
        return None
    try:
        base = optomech.CavityParams(
            kappa=cav["kappa_rad_s"],
            bare_detuning=cav["bare_detuning_rad_s"],
            length=cav["length_m"],
            cavity_freq=cav["cavity_freq_rad_s"],
            input_power=cav["input_power_w"],
            efficiency=cav["efficiency"],
        )
    except BathspecError as exc:
        raise ConfigError(f"cavity section: {exc}") from exc
    if not cav["lock_detuning"]:
        return base
    if oscillator is None:
        raise ConfigError("lock_detuning needs oscillator parameters")
    g = optomech.position_coupling(base, oscillator)
    locked = optomech.locked_bare_detuning(base, g, oscillator.omega)
    return optomech.CavityParams(
        kappa=base.kappa,
        bare_detuning=locked,
        length=base.length,
        cavity_freq=base.cavity_freq,
        input_power=base.input_power,
        efficiency=base.efficiency,
    )


def build_synth_config(cfg, model=None, oscillator=None) -> synth.SynthConfig:
    """SynthConfig with scale: auto resolved to make the target peak 1."""
    sec = cfg["synth"]
    if sec["mode"] not in ("spectra", "timeseries"):
        raise ConfigError("synth.mode must be 'spectra' or 'timeseries'")
    model = model if model is not None else build_model(cfg)
    oscillator = oscillator if oscillator is not None else build_oscillator(cfg)
    modes = tuple(
        synth.ContaminantMode(m["center_hz"], m["width_hz"], m["height"])
        for m in sec["modes"]
    )
    scale = sec["scale"]
    if scale == "auto":
        probe = synth.SynthConfig(
            model=model,
            oscillator=oscillator,
            scale=1.0,
            n_samples=sec["n_samples"],
            sample_rate=sec["sample_rate_hz"],
            seed=cfg["seed"],
        )
        freqs = np.fft.rfftfreq(probe.n_samples, d=1.0 / probe.sample_rate)
        peak = float(np.max(synth.target_psd(probe, freqs)))
        if not peak > 0.0:
            raise ConfigError("cannot auto-scale: target PSD peak is zero")
        scale = 1.0 / peak
    return synth.SynthConfig(
        model=model,
        oscillator=oscillator,
        scale=float(scale),
        floor=sec["floor"],
        modes=modes,
        n_samples=sec["n_samples"],
        sample_rate=sec["sample_rate_hz"],
        seed=cfg["seed"],
    )


def build_fit_window(cfg) -> FitWindow:
    lo, hi = cfg["fit"]["window_hz"]
    return FitWindow(f_min_hz=lo, f_max_hz=hi)


def build_fit_options(cfg) -> FitOptions:
    fit = cfg["fit"]
    try:
        return FitOptions(
            objective_space=fit["objective"],
            weighting=fit["weighting"],
            k_lo=fit["k_lo"],
            k_hi=fit["k_hi"],
            anneal_steps=fit["anneal_steps"],
            cooling=fit["cooling"],
            restarts=fit["restarts"],
            seed=cfg["seed"],
        )
    except BathspecError as exc:
        raise ConfigError(f"fit section: {exc}") from exc
