"""Configuration ingestion: a YAML document with mandatory unit suffixes on
every dimensional quantity, validated against a closed schema (unknown keys
are errors with a nearest-match suggestion), with all defaults resolved at
parse time and an exact emit/parse round trip.

Unit semantics: frequency-kind fields are cyclic (Hz family) and converted to
angular rad/s exactly once here; rate-kind fields (inverse lifetimes, photon
fluxes) are plain 1/s and accept either "/s" or Hz-family suffixes without
any 2*pi; times, temperatures and powers carry s/K/dBm suffixes.
"""
from __future__ import annotations

import difflib
import io
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .constants import TWO_PI
from .hilbert import SpaceLayout
from .model import DriveSettings, SystemParams


class ConfigError(ValueError):
    pass


_FREQ_SUFFIX = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME_SUFFIX = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}
_TEMP_SUFFIX = {"k": 1.0, "mk": 1e-3}


def _parse_suffixed(raw: Any, suffixes: dict[str, float], kindname: str, path: str) -> float:
    if isinstance(raw, (int, float)):
        raise ConfigError(
            f"{path}: missing unit suffix; write e.g. '{raw} {next(iter(suffixes)).upper()}'"
        )
    parts = str(raw).split()
    if len(parts) != 2:
        raise ConfigError(f"{path}: expected '<value> <unit>', got {raw!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"{path}: bad numeric value {parts[0]!r}") from None
    unit = parts[1].lower()
    if unit not in suffixes:
        raise ConfigError(
            f"{path}: unknown {kindname} unit {parts[1]!r} "
            f"(allowed: {', '.join(sorted(suffixes))})"
        )
    return value * suffixes[unit]


def parse_frequency(raw: Any, path: str) -> float:
    """Cyclic input with Hz-family suffix, returned angular (rad/s)."""
    return TWO_PI * _parse_suffixed(raw, _FREQ_SUFFIX, "frequency", path)


def parse_rate(raw: Any, path: str) -> float:
    """Plain 1/s; accepts '/s' or Hz-family suffixes, never multiplied by 2*pi."""
    if isinstance(raw, str) and raw.split()[-1] in ("/s", "1/s"):
        try:
            return float(raw.split()[0])
        except ValueError:
            raise ConfigError(f"{path}: bad numeric value in {raw!r}") from None
    return _parse_suffixed(raw, _FREQ_SUFFIX, "rate", path)


def parse_time(raw: Any, path: str) -> float:
    return _parse_suffixed(raw, _TIME_SUFFIX, "time", path)


def parse_temperature(raw: Any, path: str) -> float:
    return _parse_suffixed(raw, _TEMP_SUFFIX, "temperature", path)


def parse_dbm(raw: Any, path: str) -> float:
    if isinstance(raw, (int, float)):
        raise ConfigError(f"{path}: missing unit suffix; write e.g. '{raw} dBm'")
    parts = str(raw).split()
    if len(parts) != 2 or parts[1].lower() != "dbm":
        raise ConfigError(f"{path}: expected '<value> dBm', got {raw!r}")
    return float(parts[0])


def emit_frequency(value: float) -> str:
    return f"{value / TWO_PI / 1e9:.17g} GHz"


def emit_rate(value: float) -> str:
    return f"{value:.17g} /s"


def emit_time(value: float) -> str:
    return f"{value / 1e-6:.17g} us"


def emit_temperature(value: float) -> str:
    return f"{value / 1e-3:.17g} mK"


def emit_dbm(value: float) -> str:
    return f"{value:.17g} dBm"


SCENARIOS = (
    "ionization_sweep",
    "floquet_sweep",
    "husimi_panel",
    "efficiency_pipeline",
    "strategy_sweep",
    "reduced_model_check",
)

STRATEGY_PARAMETERS = ("kappa_w", "g4", "omega_b", "chi2")


@dataclass(frozen=True)
class SweepAxis:
    start: float
    stop: float
    points: int
    scale: str = "dbm"  # dbm | linear

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ScenarioConfig:
    device: SystemParams
    drive: DriveSettings
    layout: SpaceLayout
    scenario: str
    output_dir: str
    seed: int = 0
    jobs: int = 0
    sweep: SweepAxis | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    options: dict = field(default_factory=dict)


_DEVICE_KEYS = {
    "omega_q": ("freq", True),
    "omega_b": ("freq", True),
    "omega_w": ("freq", True),
    "omega_q_shift": ("freq", False),
    "omega_b_shift": ("freq", False),
    "omega_w_shift": ("freq", False),
    "kappa_b": ("freq", True),
    "kappa_w": ("freq", True),
    "gamma_q": ("rate", True),
    "gamma_phi": ("rate", False),
    "chi": ("freq_list", True),
    "chi_qw": ("freq", False),
    "chi_qb": ("freq", False),
    "g4": ("freq", True),
    "g_w": ("freq", False),
    "g_b": ("freq", False),
    "t_eff": ("temp", False),
    "t2": ("time", False),
}

_DRIVE_KEYS = {
    "pump_power_dbm": ("dbm", True),
    "pump_freq": ("freq", True),
    "pump_calib": ("bare", True),
    "qubit_drive_calib": ("freq", False),
    "b_in_flux": ("rate", False),
    "buffer_pulse_len": ("time", False),
    "detuning_qwbp": ("freq", False),
}

_TOP_KEYS = (
    "device",
    "drive",
    "layout",
    "scenario",
    "sweep",
    "output_dir",
    "seed",
    "jobs",
    "propagation",
    "options",
)

_PARSERS = {
    "freq": parse_frequency,
    "rate": parse_rate,
    "time": parse_time,
    "temp": parse_temperature,
    "dbm": parse_dbm,
}


def _check_unknown(given: dict, allowed, where: str):
    for key in given:
        if key not in allowed:
            hint = difflib.get_close_matches(key, list(allowed), n=1)
            suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"{where}: unknown key {key!r}{suggestion}")


def _parse_section(raw: dict, keys: dict, where: str) -> dict:
    _check_unknown(raw, keys, where)
    out: dict[str, Any] = {}
    missing = [k for k, (_, req) in keys.items() if req and k not in raw]
    if missing:
        raise ConfigError(f"{where}: missing required keys: {', '.join(missing)}")
    for key, value in raw.items():
        kind, _ = keys[key]
        path = f"{where}.{key}"
        if kind == "bare":
            out[key] = float(value)
        elif kind == "freq_list":
            if not isinstance(value, list):
                raise ConfigError(f"{path}: expected a list")
            out[key] = tuple(parse_frequency(v, f"{path}[{i}]") for i, v in enumerate(value))
        else:
            out[key] = _PARSERS[kind](value, path)
    return out


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    required_top = ("device", "drive", "layout", "scenario", "output_dir")
    missing = [k for k in required_top if k not in raw]
    if missing:
        raise ConfigError(f"missing required sections/keys: {', '.join(missing)}")
    _check_unknown(raw, _TOP_KEYS, "top level")

    layout_raw = raw["layout"]
    if not (isinstance(layout_raw, list) and len(layout_raw) == 3):
        raise ConfigError("layout: expected [N_transmon, N_buffer, N_waste]")
    layout = SpaceLayout(tuple(int(x) for x in layout_raw))

    dev = _parse_section(dict(raw["device"]), _DEVICE_KEYS, "device")
    chi = list(dev.get("chi", ()))
    need = max(layout.dims[0] - 2, 0)
    if len(chi) > need:
        raise ConfigError(
            f"device.chi: {len(chi)} entries but transmon dim {layout.dims[0]} "
            f"admits at most {need}"
        )
    dev["chi"] = tuple(chi + [0.0] * (need - len(chi)))
    device = SystemParams(**dev)

    drv = _parse_section(dict(raw["drive"]), _DRIVE_KEYS, "drive")
    drive = DriveSettings(**drv)

    scenario = str(raw["scenario"])
    if scenario not in SCENARIOS:
        hint = difflib.get_close_matches(scenario, SCENARIOS, n=1)
        suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
        raise ConfigError(f"scenario: unknown scenario {scenario!r}{suggestion}")

    sweep = None
    if "sweep" in raw and raw["sweep"] is not None:
        s = dict(raw["sweep"])
        _check_unknown(s, ("start", "stop", "points", "scale"), "sweep")
        scale = str(s.get("scale", "dbm"))
        if scale not in ("dbm", "linear"):
            raise ConfigError("sweep.scale: must be 'dbm' or 'linear'")
        parse = parse_dbm if scale == "dbm" else (lambda v, p: float(v))
        points = int(s.get("points", 0))
        if points < 2:
            raise ConfigError("sweep.points: at least 2 points required")
        sweep = SweepAxis(
            start=parse(s.get("start"), "sweep.start"),
            stop=parse(s.get("stop"), "sweep.stop"),
            points=points,
            scale=scale,
        )
    elif scenario in ("ionization_sweep", "floquet_sweep", "strategy_sweep"):
        raise ConfigError(f"scenario {scenario!r} requires a sweep block")

    prop = dict(raw.get("propagation") or {})
    _check_unknown(prop, ("rtol", "atol"), "propagation")

    options = dict(raw.get("options") or {})

    return ScenarioConfig(
        device=device,
        drive=drive,
        layout=layout,
        scenario=scenario,
        output_dir=str(raw["output_dir"]),
        seed=int(raw.get("seed", 0)),
        jobs=int(raw.get("jobs", 0)),
        sweep=sweep,
        rtol=float(prop.get("rtol", 1e-8)),
        atol=float(prop.get("atol", 1e-10)),
        options=options,
    )


def emit_config(cfg: ScenarioConfig) -> str:
    """Serialize a resolved config; parse(emit(cfg)) reproduces cfg."""
    d = cfg.device
    dev = {
        "omega_q": emit_frequency(d.omega_q),
        "omega_b": emit_frequency(d.omega_b),
        "omega_w": emit_frequency(d.omega_w),
        "omega_q_shift": emit_frequency(d.omega_q_shift),
        "omega_b_shift": emit_frequency(d.omega_b_shift),
        "omega_w_shift": emit_frequency(d.omega_w_shift),
        "kappa_b": emit_frequency(d.kappa_b),
        "kappa_w": emit_frequency(d.kappa_w),
        "gamma_q": emit_rate(d.gamma_q),
        "gamma_phi": emit_rate(d.gamma_phi),
        "chi": [emit_frequency(c) for c in d.chi],
        "chi_qw": emit_frequency(d.chi_qw),
        "chi_qb": emit_frequency(d.chi_qb),
        "g4": emit_frequency(d.g4),
        "g_w": emit_frequency(d.g_w),
        "g_b": emit_frequency(d.g_b),
        "t_eff": emit_temperature(d.t_eff),
    }
    if d.t2 is not None:
        dev["t2"] = emit_time(d.t2)
    dr = cfg.drive
    drive = {
        "pump_power_dbm": emit_dbm(dr.pump_power_dbm),
        "pump_freq": emit_frequency(dr.pump_freq),
        "pump_calib": float(dr.pump_calib),
        "qubit_drive_calib": emit_frequency(dr.qubit_drive_calib),
        "b_in_flux": emit_rate(dr.b_in_flux),
        "buffer_pulse_len": emit_time(dr.buffer_pulse_len),
        "detuning_qwbp": emit_frequency(dr.detuning_qwbp),
    }
    doc: dict[str, Any] = {
        "device": dev,
        "drive": drive,
        "layout": list(cfg.layout.dims),
        "scenario": cfg.scenario,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
        "jobs": cfg.jobs,
        "propagation": {"rtol": cfg.rtol, "atol": cfg.atol},
        "options": cfg.options,
    }
    if cfg.sweep is not None:
        fmt = emit_dbm if cfg.sweep.scale == "dbm" else (lambda v: float(v))
        doc["sweep"] = {
            "start": fmt(cfg.sweep.start),
            "stop": fmt(cfg.sweep.stop),
            "points": cfg.sweep.points,
            "scale": cfg.sweep.scale,
        }
    buf = io.StringIO()
    yaml.safe_dump(doc, buf, sort_keys=False, default_flow_style=False)
    return buf.getvalue()


def apply_override(doc: dict, dotted: str, value: str) -> None:
    """Apply a --override key=value with a dotted path into the raw document."""
    keys = dotted.split(".")
    target = doc
    for k in keys[:-1]:
        if not isinstance(target.get(k), dict):
            target[k] = {}
        target = target[k]
    parsed: Any = yaml.safe_load(value)
    target[keys[-1]] = parsed
