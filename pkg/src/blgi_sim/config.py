"""Sweep configuration: TOML files, named presets and validation.

Resolution order is preset, then config file, then explicit overrides (CLI
flags).  The full file schema is documented in README.md.
"""

from __future__ import annotations

import copy
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import BlgiError, ConfigError
from .noise import DEVICE_DEPHASING_PER_GATE, DEVICE_READOUT_ERROR, DEVICE_THERMAL_POP, NoiseModel
from .protocol.blgi import DEFAULT_SHOTS, BlgiConfig
from .protocol.chsh import ChshConfig

EXPERIMENTS = (
    "blgi-phi-sweep",
    "chsh-theta-sweep",
    "lgi",
    "dephasing-sweep",
    "visibility-sweep",
    "calibration-curves",
)
MODES = ("exact", "monte-carlo")
FORMATS = ("csv", "json")

# Heralding removes most thermal excitations; the paper-like preset keeps a quarter.
HERALDED_THERMAL_FRACTION = 0.25
TUNED_T1_GAMMA = 0.001
PLATEAU_PHI = 0.3

PRESETS: dict[str, dict] = {
    "ideal": {
        "blgi": {"n_shots": DEFAULT_SHOTS, "calibration_mode": "sin-phi"},
        "noise": {},
    },
    "device": {
        "blgi": {"n_shots": DEFAULT_SHOTS, "calibration_mode": "empirical-zero"},
        "noise": {
            "gate_dephasing_p": DEVICE_DEPHASING_PER_GATE,
            "readout_error": list(DEVICE_READOUT_ERROR),
            "thermal_pops": list(DEVICE_THERMAL_POP),
        },
    },
    # Tuned so the phi-sweep plateau sits near 2.5; not the device's true parameters.
    "paper-like": {
        "blgi": {
            "n_shots": DEFAULT_SHOTS,
            "calibration_mode": "empirical-zero",
            "phi1": PLATEAU_PHI,
            "phi2": PLATEAU_PHI,
        },
        "noise": {
            "gate_dephasing_p": DEVICE_DEPHASING_PER_GATE,
            "t1_gamma": TUNED_T1_GAMMA,
            "readout_error": list(DEVICE_READOUT_ERROR),
            "thermal_pops": [HERALDED_THERMAL_FRACTION * p for p in DEVICE_THERMAL_POP],
        },
    },
}


def default_grid(experiment: str) -> tuple:
    if experiment == "blgi-phi-sweep":
        return tuple(np.linspace(0.02, np.pi / 2, 40))
    if experiment == "chsh-theta-sweep":
        return tuple(np.linspace(0.0, np.pi, 33))
    if experiment == "lgi":
        return tuple(np.linspace(0.0, np.pi / 2, 19))
    if experiment == "dephasing-sweep":
        return (0.0, 0.05, 0.1, 0.2, 0.3)
    if experiment == "visibility-sweep":
        return (1.0, 0.95, 0.9, 0.85, 0.8)
    if experiment == "calibration-curves":
        return tuple(np.linspace(0.005, np.pi / 2, 40))
    raise ConfigError(f"unknown experiment {experiment!r}")


@dataclass(frozen=True)
class LgiSettings:
    """The LGI sweep varies the spacing ``tau`` of the angles ``(0, tau, 2 tau)``."""

    state_prep: float = 0.0
    weak_phi: float | None = None
    n_shots: int = DEFAULT_SHOTS


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    grid: tuple
    blgi: BlgiConfig = field(default_factory=BlgiConfig)
    chsh: ChshConfig = field(default_factory=ChshConfig)
    lgi: LgiSettings = field(default_factory=LgiSettings)
    noise: NoiseModel = field(default_factory=NoiseModel)
    mode: str = "exact"
    seed: int = 0
    output: str | None = None
    format: str | None = None
    workers: int = 0
    shot_workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        validate(self)

    @property
    def n_shots(self) -> int:
        if self.experiment == "chsh-theta-sweep":
            return self.chsh.n_shots
        if self.experiment == "lgi":
            return self.lgi.n_shots
        return self.blgi.n_shots

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        if self.output and self.output.lower().endswith(".json"):
            return "json"
        return "csv"


def validate(cfg: SweepConfig) -> None:
    """Reject bad configs before any simulation work starts."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.format is not None and cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {cfg.format!r}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, (int, np.integer)) or not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must be an integer in [0, 2**64), got {cfg.seed!r}")
    if cfg.workers < 0 or cfg.shot_workers < 1:
        raise ConfigError("workers must be >= 0 (0 = auto) and shot_workers >= 1")
    if not cfg.grid:
        raise ConfigError("grid must be nonempty")
    if not all(math.isfinite(v) for v in cfg.grid):
        raise ConfigError("grid values must be finite")
    lo, hi, what = _grid_domain(cfg.experiment)
    bad = [v for v in cfg.grid if not lo(v) or not hi(v)]
    if bad:
        raise ConfigError(f"{cfg.experiment}: grid values {bad} outside {what}")
    if cfg.experiment in ("dephasing-sweep", "visibility-sweep") and cfg.blgi.phi1 * cfg.blgi.phi2 == 0.0:
        raise ConfigError("phi1 and phi2 must be positive for calibrated sweeps")
    if cfg.experiment == "lgi" and cfg.lgi.weak_phi is not None and not 0.0 < cfg.lgi.weak_phi <= np.pi / 2:
        raise ConfigError("lgi.weak_phi must lie in (0, pi/2]")


def _grid_domain(experiment: str):
    eps = 1e-12
    if experiment in ("blgi-phi-sweep", "calibration-curves"):
        # phi = 0 is in the physical range but its calibration is singular
        return (lambda v: v > 0.0), (lambda v: v <= np.pi / 2 + eps), "(0, pi/2]"
    if experiment == "chsh-theta-sweep":
        return (lambda v: v >= 0.0), (lambda v: v <= np.pi + eps), "[0, pi]"
    if experiment in ("dephasing-sweep", "visibility-sweep"):
        return (lambda v: v >= 0.0), (lambda v: v <= 1.0), "[0, 1]"
    return (lambda v: True), (lambda v: True), "the reals"


def _deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_toml(path: str | os.PathLike) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _grid_from(section: Any) -> tuple | None:
    if section is None:
        return None
    if isinstance(section, (list, tuple, np.ndarray)):
        return tuple(float(v) for v in section)
    if not isinstance(section, dict):
        raise ConfigError("grid must be a list or a table")
    if "values" in section:
        return tuple(float(v) for v in section["values"])
    try:
        start, stop, num = float(section["start"]), float(section["stop"]), int(section["num"])
    except KeyError as exc:
        raise ConfigError(f"grid table needs 'values' or start/stop/num (missing {exc})") from None
    if num < 1:
        raise ConfigError("grid num must be >= 1")
    return tuple(np.linspace(start, stop, num))


_TOP_KEYS = {"experiment", "preset", "grid", "blgi", "chsh", "lgi", "noise", "mode", "seed",
             "output", "format", "workers", "shot_workers"}


def build_config(data: dict, overrides: dict | None = None) -> SweepConfig:
    """Resolve a config mapping (already parsed) into a :class:`SweepConfig`."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    preset_name = overrides.get("preset", data.get("preset"))
    merged: dict = {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}")
        merged = copy.deepcopy(PRESETS[preset_name])
    merged = _deep_merge(merged, data)
    merged = _deep_merge(merged, overrides)
    shots = merged.pop("shots", None)

    unknown = set(merged) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    experiment = merged.get("experiment")
    if experiment is None:
        raise ConfigError("config must name an experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")

    try:
        blgi_kw = dict(merged.get("blgi", {}))
        chsh_kw = dict(merged.get("chsh", {}))
        lgi_kw = dict(merged.get("lgi", {}))
        if shots is not None:
            blgi_kw["n_shots"] = chsh_kw["n_shots"] = lgi_kw["n_shots"] = int(shots)
        if "detector_trim" in blgi_kw:
            blgi_kw["detector_trim"] = tuple(blgi_kw["detector_trim"])
        blgi = BlgiConfig(**blgi_kw)
        chsh = ChshConfig(**chsh_kw)
        lgi = LgiSettings(**lgi_kw)
        noise = NoiseModel.from_dict(merged.get("noise", {}), 4)
    except TypeError as exc:
        raise ConfigError(f"bad config section: {exc}") from exc
    except BlgiError as exc:
        raise ConfigError(str(exc)) from exc

    grid = _grid_from(merged.get("grid"))
    if grid is None:
        grid = default_grid(experiment)
    return SweepConfig(
        experiment=experiment,
        grid=grid,
        blgi=blgi,
        chsh=chsh,
        lgi=lgi,
        noise=noise,
        mode=merged.get("mode", "exact"),
        seed=int(merged.get("seed", 0)),
        output=merged.get("output"),
        format=merged.get("format"),
        workers=int(merged.get("workers", 0)),
        shot_workers=int(merged.get("shot_workers", 1)),
    )


def load_config(path: str | os.PathLike | None = None, **overrides) -> SweepConfig:
    """Read a TOML file (optional) and apply keyword overrides.

    Recognized overrides: ``experiment``, ``preset``, ``seed``, ``shots``,
    ``mode``, ``output``, ``format``, ``workers``, ``grid``.
    """
    data = load_toml(path) if path is not None else {}
    return build_config(data, overrides)


def preset_config(name: str, experiment: str, **overrides) -> SweepConfig:
    return build_config({"preset": name, "experiment": experiment}, overrides)


def with_grid(cfg: SweepConfig, grid) -> SweepConfig:
    return replace(cfg, grid=tuple(grid))
