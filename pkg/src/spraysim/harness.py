"""Trial replay and three-way control comparison with table-style statistics."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import perception as pc
from .config import SimConfig
from .control import ControllerConfig, Mode, command_frame
from .scenario import Scenario, ScenarioError, validate_scenario
from .spray import deposit
from .valve import FlowTrace, ValveParams, integrate_volume

MODES = (Mode.ALL_OPEN, Mode.ON_OFF, Mode.VARIABLE)
TAGS = ("T", "NT")


@dataclass
class TrialResult:
    mode: Mode
    seed: int
    paper_ids: list
    tags: list
    zones: list
    rp: np.ndarray
    volume_used: float
    duties: np.ndarray = field(repr=False, default=None)
    trace: FlowTrace | None = field(repr=False, default=None)
    stains: list | None = field(repr=False, default=None)
    notes: list = field(default_factory=list)

    def rp_for(self, tag: str) -> np.ndarray:
        return np.array([r for r, t in zip(self.rp, self.tags) if t == tag])


@dataclass(frozen=True)
class Stats:
    n: int
    mean: float
    sd: float
    max: float
    min: float
    sd_defined: bool = True


@dataclass
class Report:
    stats: dict
    volume: dict
    reduction_pct: dict
    raw: dict
    seeds: list

    def check(self) -> None:
        """Recompute every statistic from the raw per-paper values; raise on mismatch."""
        for key, values in self.raw.items():
            if self.stats[key] != describe(values):
                raise AssertionError(f"statistics for {key} do not match raw values")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "tag", "mean", "sd", "max", "min", "volume_l", "reduction_pct"])
        for mode in MODES:
            if mode.value not in self.volume:
                continue
            for tag in TAGS:
                s = self.stats.get((mode.value, tag))
                if s is None:
                    continue
                w.writerow([mode.value, tag, f"{s.mean:.6f}", f"{s.sd:.6f}", f"{s.max:.6f}",
                            f"{s.min:.6f}", f"{self.volume[mode.value]:.6f}",
                            f"{self.reduction_pct[mode.value]:.6f}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "stats": {f"{m}/{t}": {"n": s.n, "mean": s.mean, "sd": s.sd, "max": s.max, "min": s.min,
                                   "sd_defined": s.sd_defined}
                      for (m, t), s in sorted(self.stats.items())},
            "volume_l": dict(sorted(self.volume.items())),
            "reduction_pct": dict(sorted(self.reduction_pct.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def describe(values) -> Stats:
    """Mean, sample SD (n-1), max and min; SD is reported as 0 for a single value."""
    v = [float(x) for x in values]
    if not v:
        raise ValueError("no values to summarize")
    n = len(v)
    mean = math.fsum(v) / n
    if n > 1:
        sd = math.sqrt(math.fsum((x - mean) ** 2 for x in v) / (n - 1))
    else:
        sd = 0.0
    return Stats(n, mean, sd, max(v), min(v), n > 1)


def pool(groups) -> Stats:
    """Combine ``(n, mean, sd)`` group summaries into the statistics of the merged sample.

    Max and min are not recoverable from summaries and come back as NaN.
    """
    groups = [(int(n), float(m), float(s)) for n, m, s in groups]
    n_tot = sum(n for n, _, _ in groups)
    if n_tot == 0:
        raise ValueError("no values to pool")
    mean = sum(n * m for n, m, _ in groups) / n_tot
    ss = sum((n - 1) * s * s + n * (m - mean) ** 2 for n, m, s in groups)
    sd = math.sqrt(ss / (n_tot - 1)) if n_tot > 1 else 0.0
    return Stats(n_tot, mean, sd, float("nan"), float("nan"), n_tot > 1)


def _frame_features(scen: Scenario, cfg: SimConfig) -> dict:
    feats = {}
    for pair in scen.frames:
        for key in pair:
            if key not in feats:
                seg, dep = scen.load_frame(key)
                feats[key] = pc.frame_features(seg, dep, scen.v_p, n_zones=cfg.n_zones, axis=cfg.axis,
                                               max_depth=cfg.max_depth, reducer=cfg.reducer)
    return feats


def duty_schedule(scen: Scenario, controller: ControllerConfig, cfg: SimConfig):
    """Per-frame nozzle duties ``(n_frames, n_nozzles)`` and any controller notes."""
    feats = _frame_features(scen, cfg)
    n_side = len(scen.boom.heights)
    duties = np.zeros((scen.n_frames, n_side * scen.boom.sides))
    notes = []
    for i, pair in enumerate(scen.frames):
        for side in range(scen.boom.sides):
            cmds = command_frame(feats[pair[side]], controller, frame_id=i, side=side)
            for c in cmds:
                duties[i, c.nozzle_index] = c.duty
                if c.note:
                    notes.append(f"frame {i} nozzle {c.nozzle_index}: {c.note}")
    return duties, notes


def run_trial(scen: Scenario, mode, cfg: SimConfig | None = None, seed: int | None = None,
              keep_trace: bool = False) -> TrialResult:
    """Replay a scenario under one control mode.

    Frames drive the controller, each frame's command is held for one frame
    period, the valve model turns duties into flow and volume, and the plume
    model stamps the papers.
    """
    cfg = cfg or SimConfig()
    mode = Mode.parse(mode)
    seed = scen.seed if seed is None else seed
    controller = replace(cfg.controller, mode=mode)
    if not scen.frames or any(len(f) < scen.boom.sides for f in scen.frames):
        raise ScenarioError("each frame entry must name one library frame per boom side")
    frame_duties, notes = duty_schedule(scen, controller, cfg)

    dt = cfg.dt
    per_frame = int(round(scen.frame_period / dt))
    if per_frame < 1 or abs(per_frame * dt - scen.frame_period) > 1e-9:
        raise ValueError(f"frame period {scen.frame_period} s is not a multiple of dt={dt}")
    steps = np.repeat(frame_duties, per_frame, axis=0)
    steps = np.vstack([steps, steps[-1:]])
    valve = replace(cfg.valve, **scen.valve)
    trace = integrate_volume(steps, dt, valve, pwm_mode=cfg.pwm_mode, frequency=cfg.pwm_frequency)
    papers = [p.make() for p in scen.papers]
    field_ = deposit(trace, papers, cfg.plume, boom=scen.boom, x_start=0.0, speed=scen.v_p,
                     seed=seed, chunk_steps=per_frame)
    return TrialResult(
        mode=mode, seed=seed, paper_ids=[p.id for p in scen.papers], tags=[p.tag for p in scen.papers],
        zones=[p.zone for p in scen.papers], rp=field_.adhesion, volume_used=trace.volume_l,
        duties=frame_duties, trace=trace if keep_trace else None,
        stains=[p.raster for p in field_.papers] if keep_trace else None, notes=notes,
    )


def summarize(results: list) -> Report:
    """Pool papers across trials per (mode, tag); volumes are averaged per mode."""
    if not results:
        raise ValueError("no trial results to summarize")
    raw, vols, seeds = {}, {}, []
    for r in results:
        for tag in TAGS:
            vals = r.rp_for(tag)
            if len(vals):
                raw.setdefault((r.mode.value, tag), []).extend(float(v) for v in vals)
        vols.setdefault(r.mode.value, []).append(r.volume_used)
        if r.seed not in seeds:
            seeds.append(r.seed)
    stats = {k: describe(v) for k, v in raw.items()}
    volume = {m: math.fsum(v) / len(v) for m, v in vols.items()}
    base = volume.get(Mode.ALL_OPEN.value)
    reduction = {}
    for m, v in volume.items():
        reduction[m] = 100.0 * (1.0 - v / base) if base else float("nan")
    return Report(stats, volume, reduction, raw, seeds)


def _trial_job(args):
    scen, mode, cfg, seed = args
    return run_trial(scen, mode, cfg, seed)


def compare_controls(scen: Scenario, seeds, cfg: SimConfig | None = None, jobs: int = 1,
                     validate: bool = True) -> tuple[Report, list]:
    """Run every mode for every seed over the same frames and summarize."""
    cfg = cfg or SimConfig()
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    if validate:
        validate_scenario(scen, cfg.controller.thres_nozzle, max_depth=cfg.max_depth,
                          n_zones=cfg.n_zones, axis=cfg.axis)
    jobs_list = [(scen, mode, cfg, s) for s in seeds for mode in MODES]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_trial_job, jobs_list))
    else:
        results = [_trial_job(j) for j in jobs_list]
    return summarize(results), results
