"""Effective simulation configuration: defaults, then a JSON file, then flags."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields, replace

from .control import ControllerConfig, Mode
from .spray import PeSetup, PlumeModel
from .valve import ValveParams

SECTIONS = {"controller": ControllerConfig, "valve": ValveParams, "plume": PlumeModel, "pe": PeSetup}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    valve: ValveParams = field(default_factory=ValveParams)
    plume: PlumeModel = field(default_factory=PlumeModel)
    pe: PeSetup = field(default_factory=PeSetup)
    pwm_mode: str = "averaged"
    pwm_frequency: float = 10.0
    time_step: float | None = None
    max_depth: float = 2.0
    n_zones: int = 4
    axis: str = "width"
    reducer: str = "median"
    bleed_tolerance: float = 5.0

    def __post_init__(self):
        if self.pwm_mode not in ("averaged", "waveform"):
            raise ConfigError(f"pwm_mode must be 'averaged' or 'waveform', got {self.pwm_mode!r}")
        if self.axis not in ("width", "height"):
            raise ConfigError(f"axis must be 'width' or 'height', got {self.axis!r}")
        if self.reducer not in ("median", "mean"):
            raise ConfigError(f"reducer must be 'median' or 'mean', got {self.reducer!r}")

    @property
    def dt(self) -> float:
        if self.time_step is not None:
            return self.time_step
        return 0.01 if self.pwm_mode == "averaged" else 0.001

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                v = {k: (x.value if isinstance(x, Mode) else x) for k, x in dataclasses.asdict(v).items()}
            out[f.name] = v
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def merge(base: SimConfig, overrides: dict) -> SimConfig:
    """Apply a nested dict of overrides; unknown keys are an error."""
    kwargs = {}
    top = {f.name for f in fields(SimConfig)}
    try:
        for key, value in overrides.items():
            if key not in top:
                raise ConfigError(f"unknown config key {key!r}")
            if key in SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be a mapping")
                cls = SECTIONS[key]
                known = {f.name for f in fields(cls)}
                bad = set(value) - known
                if bad:
                    raise ConfigError(f"unknown keys in {key!r}: {', '.join(sorted(bad))}")
                kwargs[key] = replace(getattr(base, key), **value)
            else:
                kwargs[key] = value
        return replace(base, **kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: dict | None = None) -> SimConfig:
    cfg = SimConfig()
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = merge(cfg, data)
    if overrides:
        cfg = merge(cfg, overrides)
    return cfg
