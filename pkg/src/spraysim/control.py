"""Per-nozzle PWM duty laws: all-open, threshold on/off, and variable flow."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .perception import ZoneFeatures

NOZZLES_PER_SIDE = 4


class Mode(str, enum.Enum):
    ALL_OPEN = "all"
    ON_OFF = "onoff"
    VARIABLE = "variable"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        aliases = {"allopen": cls.ALL_OPEN, "variableflow": cls.VARIABLE}
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for m in cls:
            if key == m.value:
                return m
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown mode {value!r}; valid modes: {', '.join(m.value for m in cls)}")


@dataclass(frozen=True)
class ControllerConfig:
    thres_nozzle: float = 0.10
    k_p: float = 0.8
    c_v: float = 0.0
    duty_floor: float = 75.0
    duty_ceiling: float = 100.0
    near_distance: float = 0.9
    mode: Mode = Mode.VARIABLE
    variable_gate_by_threshold: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if not 0.0 <= self.thres_nozzle <= 1.0:
            raise ValueError("thres_nozzle must lie in [0, 1]")
        if not 0.0 < self.duty_floor < self.duty_ceiling <= 100.0:
            raise ValueError("need 0 < duty_floor < duty_ceiling <= 100")
        if self.k_p <= 0:
            raise ValueError("k_p must be positive")
        if self.near_distance <= 0:
            raise ValueError("near_distance must be positive")


@dataclass(frozen=True)
class NozzleCommand:
    nozzle_index: int
    duty: float
    mode: Mode
    frame_id: int = 0
    note: str = ""

    @property
    def is_on(self) -> bool:
        return self.duty > 0


def _on_off_duty(a_p: float, cfg: ControllerConfig) -> float:
    # boundary a_p == thres stays OFF
    return 0.0 if a_p <= cfg.thres_nozzle else 100.0


def _variable_duty(a_p: float, d_c: float, cfg: ControllerConfig) -> tuple[float, str]:
    if cfg.variable_gate_by_threshold and a_p <= cfg.thres_nozzle:
        return 0.0, ""
    if not math.isfinite(d_c):
        return 0.0, f"non-finite d_c with a_p={a_p:.4f}; nozzle held off"
    if d_c <= cfg.near_distance:
        return cfg.duty_floor, ""
    raw = cfg.k_p * (a_p * 100.0) * d_c + cfg.c_v
    return min(max(raw, cfg.duty_floor), cfg.duty_ceiling), ""


def all_open(features: ZoneFeatures, cfg: ControllerConfig | None = None, *,
             nozzle_index: int | None = None, frame_id: int = 0) -> NozzleCommand:
    cfg = cfg or ControllerConfig()
    idx = features.zone_index if nozzle_index is None else nozzle_index
    return NozzleCommand(idx, cfg.duty_ceiling, Mode.ALL_OPEN, frame_id)


def on_off(features: ZoneFeatures, cfg: ControllerConfig, *,
           nozzle_index: int | None = None, frame_id: int = 0) -> NozzleCommand:
    idx = features.zone_index if nozzle_index is None else nozzle_index
    return NozzleCommand(idx, _on_off_duty(features.a_p, cfg), Mode.ON_OFF, frame_id)


def variable_rate(features: ZoneFeatures, cfg: ControllerConfig, *,
                  nozzle_index: int | None = None, frame_id: int = 0) -> NozzleCommand:
    """Variable-flow command.

    ``a_p`` enters the proportional term as a percentage and ``d_c`` in
    meters; the result is clamped to ``[duty_floor, duty_ceiling]``. Zones at
    or below the on/off threshold stay closed unless
    ``variable_gate_by_threshold`` is disabled.
    """
    idx = features.zone_index if nozzle_index is None else nozzle_index
    duty, note = _variable_duty(features.a_p, features.d_c, cfg)
    return NozzleCommand(idx, duty, Mode.VARIABLE, frame_id, note)


_LAWS = {Mode.ALL_OPEN: all_open, Mode.ON_OFF: on_off, Mode.VARIABLE: variable_rate}


def command(features: ZoneFeatures, cfg: ControllerConfig, nozzle_index: int | None = None,
            frame_id: int = 0) -> NozzleCommand:
    """Apply the configured mode's law to one zone."""
    return _LAWS[cfg.mode](features, cfg, nozzle_index=nozzle_index, frame_id=frame_id)


def command_frame(zones: list[ZoneFeatures], cfg: ControllerConfig, frame_id: int = 0,
                  side: int = 0) -> list[NozzleCommand]:
    """Commands for the four nozzles on one side of the boom.

    ``side`` 0 yields nozzle indices 0-3, side 1 yields 4-7.
    """
    if len(zones) != NOZZLES_PER_SIDE:
        raise ValueError(f"expected {NOZZLES_PER_SIDE} zones per side, got {len(zones)}")
    base = side * NOZZLES_PER_SIDE
    return [command(z, cfg, base + i, frame_id) for i, z in enumerate(zones)]
