"""PWM generation, proportional-valve plunger lag and nozzle flow.

Physical defaults (discharge coefficient, orifice area, pressure, density)
are engineering placeholders, not measured values. Volumes are reported in
liters, flows in m^3/s.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ValveParams:
    c_n: float = 0.6
    a_n: float = 1e-5
    p_n: float = 3e5
    rho: float = 1000.0
    plunger_tau: float = 0.02

    def __post_init__(self):
        for name in ("c_n", "a_n", "p_n", "rho", "plunger_tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.c_n > 1:
            raise ValueError("c_n must be <= 1")


@dataclass(frozen=True)
class PwmSignal:
    frequency: float = 10.0
    duty: float = 100.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if not 0.0 <= self.duty <= 100.0:
            raise ValueError("duty must lie in [0, 100]")


@dataclass(frozen=True)
class PlungerState:
    x_n: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class FlowSample:
    t: float
    q_n: tuple
    q_total: float
    volume_accum: float


def pwm_waveform(signal: PwmSignal, t):
    """ON (True) during the first ``duty`` percent of every period.

    A period boundary belongs to the new period, so ``t = k / frequency`` is ON
    whenever the duty is non-zero. Accepts scalars or arrays.
    """
    if signal.duty >= 100.0:
        return np.ones_like(t, dtype=bool) if np.ndim(t) else True
    if signal.duty <= 0.0:
        return np.zeros_like(t, dtype=bool) if np.ndim(t) else False
    # phase position in cycles; rounding guards against 0.7999999 style residue
    cycles = (np.asarray(t, dtype=np.float64) - signal.phase) * signal.frequency
    frac = np.round(cycles - np.floor(np.round(cycles, 12)), 12)
    on = frac < signal.duty / 100.0
    return on if np.ndim(t) else bool(on)


def plunger_step(state: PlungerState, target: float, dt: float, params: ValveParams) -> PlungerState:
    """Advance the first-order plunger lag by ``dt`` toward ``target``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = math.exp(-dt / params.plunger_tau)
    x = target + (state.x_n - target) * a
    return PlungerState(min(max(x, 0.0), 1.0), state.t + dt)


def nozzle_flow(state, params: ValveParams):
    """Orifice flow ``C_n * A_n * x_n * sqrt(2 P_n / rho)`` in m^3/s.

    ``state`` may be a :class:`PlungerState` or a plunger position (scalar or array).
    """
    x = state.x_n if isinstance(state, PlungerState) else state
    coef = params.c_n * params.a_n * math.sqrt(2.0 * params.p_n / params.rho)
    return coef * np.asarray(x, dtype=np.float64) if np.ndim(x) else coef * float(x)


@dataclass
class FlowTrace:
    """Per-step arrays from :func:`integrate_volume`.

    ``duty``, ``x_n`` and ``q_n`` have shape ``(n_steps, n_nozzles)``; the
    other arrays have length ``n_steps``.
    """

    t: np.ndarray
    duty: np.ndarray
    x_n: np.ndarray
    q_n: np.ndarray
    q_total: np.ndarray
    volume_accum: np.ndarray
    dt: float

    @property
    def n_steps(self) -> int:
        return len(self.t)

    @property
    def volume_l(self) -> float:
        return float(self.volume_accum[-1]) if len(self.volume_accum) else 0.0

    def sample(self, k: int) -> FlowSample:
        return FlowSample(float(self.t[k]), tuple(self.q_n[k].tolist()),
                          float(self.q_total[k]), float(self.volume_accum[k]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "nozzle", "duty", "x_n", "q_n", "q_total", "volume_accum"])
        for k in range(self.n_steps):
            for n in range(self.q_n.shape[1]):
                w.writerow([f"{self.t[k]:.6f}", n, f"{self.duty[k, n]:.6g}", f"{self.x_n[k, n]:.9g}",
                            f"{self.q_n[k, n]:.9g}", f"{self.q_total[k]:.9g}",
                            f"{self.volume_accum[k]:.9g}"])
        return buf.getvalue()


def integrate_volume(duties, dt: float, params: ValveParams, *, pwm_mode: str = "averaged",
                     frequency: float = 10.0, x0=None, t0: float = 0.0) -> FlowTrace:
    """Simulate valves driven by a duty schedule and accumulate dispensed volume.

    ``duties`` is an array ``(n_steps, n_nozzles)`` of duty percentages, where
    row ``k`` is the command in force from ``t0 + k*dt``. The plunger state at
    sample ``k`` results from the commands of rows ``0..k-1`` (zero-order
    hold), starting from ``x0`` (default closed). In ``averaged`` mode the
    plunger target is ``duty/100``; in ``waveform`` mode the valve is driven
    fully open during each PWM ON phase and closed otherwise. Volume uses the
    trapezoidal rule on the summed flow.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if pwm_mode not in ("averaged", "waveform"):
        raise ValueError(f"pwm_mode must be 'averaged' or 'waveform', got {pwm_mode!r}")
    duties = np.asarray(duties, dtype=np.float64)
    if duties.ndim == 1:
        duties = duties[:, None]
    if duties.ndim != 2:
        raise ValueError("duties must be a (n_steps, n_nozzles) array")
    if duties.size and (duties.min() < 0 or duties.max() > 100):
        raise ValueError("duties must lie in [0, 100]")
    n_steps, n_noz = duties.shape
    t = t0 + dt * np.arange(n_steps)

    if pwm_mode == "averaged":
        targets = duties / 100.0
    else:
        cycles = (t - t0) * frequency
        frac = np.round(cycles - np.floor(np.round(cycles, 12)), 12)
        targets = (frac[:, None] < duties / 100.0).astype(np.float64)
        targets[duties >= 100.0] = 1.0

    a = math.exp(-dt / params.plunger_tau)
    x = np.empty_like(duties)
    prev = np.zeros(n_noz) if x0 is None else np.broadcast_to(np.asarray(x0, float), (n_noz,)).copy()
    for k in range(n_steps):
        if k:
            prev = targets[k - 1] + (prev - targets[k - 1]) * a
            np.clip(prev, 0.0, 1.0, out=prev)
        x[k] = prev

    q = nozzle_flow(x, params)
    q_total = q.sum(axis=1)
    vol = np.zeros(n_steps)
    if n_steps > 1:
        vol[1:] = np.cumsum(0.5 * (q_total[1:] + q_total[:-1]) * dt) * 1000.0
    return FlowTrace(t, duties, x, q, q_total, vol, dt)
