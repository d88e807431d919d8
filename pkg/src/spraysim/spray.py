"""Plume geometry, Monte Carlo droplet stamping and water-sensitive paper coverage.

Each active nozzle throws a cone of droplets toward the canopy plane. At a
plane ``d`` meters away the droplet density follows a parabolic radial
profile over the full-duty footprint ``d * tan(cone_half_angle_at_100)``.
Lower duties narrow the cone (the profile is cut at the narrower radius) and
shorten the reach; beyond the reach the delivered fraction falls linearly to
zero over ``reach_overshoot`` meters.

Only droplets that land on a paper are sampled: for every paper and time
chunk the expected hit count is integrated from the density field and a
Poisson count is drawn by inverse CDF from a per-paper uniform stream, with
stamp positions taken from a second per-paper stream. Because both streams
depend only on ``(seed, paper index)``, raising the dose on a paper can only
add stains, never remove them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .valve import FlowTrace, ValveParams, integrate_volume

PIXEL_SIZE_M = 1e-3


@dataclass(frozen=True)
class PlumeModel:
    full_reach: float = 1.6
    min_reach_duty: float = 75.0
    near_full_coverage_distance: float = 0.9
    full_coverage_duty: float = 90.0
    cone_half_angle_at_100: float = 35.0
    cone_half_angle_at_floor: float = 30.0
    reach_overshoot: float = 0.4
    droplet_rate: float = 6e6
    rng_seed: int = 0

    def __post_init__(self):
        if not self.full_reach > self.near_full_coverage_distance > 0:
            raise ValueError("need full_reach > near_full_coverage_distance > 0")
        if not 0 < self.full_coverage_duty <= 100:
            raise ValueError("full_coverage_duty must lie in (0, 100]")
        if not 0 < self.min_reach_duty < 100:
            raise ValueError("min_reach_duty must lie in (0, 100)")
        if not 0 < self.cone_half_angle_at_floor <= self.cone_half_angle_at_100 < 90:
            raise ValueError("need 0 < cone_half_angle_at_floor <= cone_half_angle_at_100 < 90")
        if self.reach_overshoot < 0 or self.droplet_rate <= 0:
            raise ValueError("reach_overshoot must be >= 0 and droplet_rate > 0")


@dataclass
class WaterSensitivePaper:
    """A paper hung ``distance`` meters from the boom at row position ``x``, height ``z``."""

    x: float
    z: float
    distance: float
    side: int = 0
    zone: int = 0
    tag: str = "T"
    rows: int = 76
    cols: int = 26
    raster: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.raster is None:
            self.raster = np.zeros((self.rows, self.cols), dtype=bool)
        else:
            self.raster = np.asarray(self.raster, dtype=bool)
            self.rows, self.cols = self.raster.shape

    @property
    def area_m2(self) -> float:
        return self.rows * self.cols * PIXEL_SIZE_M ** 2

    def blank(self) -> "WaterSensitivePaper":
        return WaterSensitivePaper(self.x, self.z, self.distance, self.side, self.zone,
                                   self.tag, self.rows, self.cols)


@dataclass
class DepositionField:
    papers: list
    hits: np.ndarray
    emitted: float
    zone_volume_l: dict

    @property
    def adhesion(self) -> np.ndarray:
        return np.array([adhesion_rate(p) for p in self.papers])


@dataclass(frozen=True)
class Boom:
    """Nozzle heights (top to bottom) repeated on each side of the platform."""

    heights: tuple = (1.9, 1.5, 1.1, 0.7)
    sides: int = 2

    @property
    def n_nozzles(self) -> int:
        return len(self.heights) * self.sides

    def side_of(self, n: int) -> int:
        return n // len(self.heights)

    def height_of(self, n: int) -> float:
        return self.heights[n % len(self.heights)]


def _check_duty(duty, model: PlumeModel):
    d = np.asarray(duty, dtype=np.float64)
    if np.any(d < model.min_reach_duty - 1e-9) or np.any(d > 100.0 + 1e-9):
        raise ValueError(f"duty must lie in [{model.min_reach_duty}, 100]; send 0 for an idle nozzle")
    return d


def plume_reach(duty, model: PlumeModel):
    """Full-coverage reach in meters, linear between the floor and full-duty anchors."""
    d = _check_duty(duty, model)
    frac = (d - model.min_reach_duty) / (100.0 - model.min_reach_duty)
    out = model.near_full_coverage_distance + frac * (model.full_reach - model.near_full_coverage_distance)
    return float(out) if np.ndim(duty) == 0 else out


def cone_half_angle(duty, model: PlumeModel):
    """Cone half-angle in degrees; widens with duty and saturates at ``full_coverage_duty``."""
    d = _check_duty(duty, model)
    span = max(model.full_coverage_duty - model.min_reach_duty, 1e-12)
    frac = np.clip((d - model.min_reach_duty) / span, 0.0, 1.0)
    out = model.cone_half_angle_at_floor + frac * (model.cone_half_angle_at_100 - model.cone_half_angle_at_floor)
    return float(out) if np.ndim(duty) == 0 else out


def areal_density(r, distance, duty, model: PlumeModel):
    """Fraction of emitted droplets landing per m^2 at radial offset ``r`` on a plane ``distance`` away."""
    r = np.asarray(r, dtype=np.float64)
    distance = np.asarray(distance, dtype=np.float64)
    r_full = distance * math.tan(math.radians(model.cone_half_angle_at_100))
    r_cut = distance * np.tan(np.radians(cone_half_angle(duty, model)))
    reach = plume_reach(duty, model)
    if model.reach_overshoot > 0:
        delivered = np.clip(1.0 - (distance - reach) / model.reach_overshoot, 0.0, 1.0)
    else:
        delivered = (distance <= reach).astype(np.float64)
    u = (r / r_full) ** 2
    profile = np.where((u < 1.0) & (r <= r_cut), 2.0 / (math.pi * r_full ** 2) * (1.0 - u), 0.0)
    return profile * delivered


def adhesion_rate(paper) -> float:
    """Stained share of the paper in percent."""
    raster = paper.raster if isinstance(paper, WaterSensitivePaper) else np.asarray(paper)
    if raster.size == 0:
        raise ValueError("zero-area raster")
    return 100.0 * np.count_nonzero(raster) / raster.size


def _paper_streams(seed: int, index: int):
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, index])
    count_ss, pos_ss = ss.spawn(2)
    return np.random.default_rng(count_ss), np.random.default_rng(pos_ss)


def deposit(trace: FlowTrace, papers: list, model: PlumeModel, *, boom: Boom = Boom(),
            x_start: float = 0.0, speed: float = 0.5, seed: int | None = None,
            chunk_steps: int = 20, nozzle_map=None) -> DepositionField:
    """Stamp droplets from a valve trace onto papers.

    The platform moves along the row from ``x_start`` at ``speed`` m/s; nozzle
    ``n`` of the trace sits at ``x(t)`` and ``boom.height_of(nozzle_map[n])``
    and only sprays papers on its own side. Papers are copied, not mutated.
    """
    if seed is None:
        seed = model.rng_seed
    n_steps, n_noz = trace.q_n.shape
    nozzle_map = list(range(n_noz)) if nozzle_map is None else list(nozzle_map)
    if len(nozzle_map) != n_noz:
        raise ValueError("nozzle_map length must match the trace")
    out = [p.blank() for p in papers]
    for p in out:
        if not p.distance > 0 or p.distance > model.full_reach + model.reach_overshoot + 2.0:
            raise ValueError(f"paper at distance {p.distance} m is outside the simulated volume")
        if not 0 <= p.side < boom.sides:
            raise ValueError(f"paper side {p.side} not on the boom")

    n_p = len(out)
    hits = np.zeros(n_p, dtype=np.int64)
    if n_p == 0 or n_steps == 0:
        return DepositionField(out, hits, model.droplet_rate * trace.volume_l, {})

    px = np.array([p.x for p in out])
    pz = np.array([p.z for p in out])
    pd = np.array([p.distance for p in out])
    area = np.array([p.area_m2 for p in out])
    npix = np.array([p.rows * p.cols for p in out])
    nz = np.array([boom.height_of(m) for m in nozzle_map])
    same_side = np.array([[boom.side_of(m) == p.side for p in out] for m in nozzle_map])

    # geometry of a closing valve (duty 0, residual flow) uses the floor cone
    duty_geo = np.where(trace.duty > 0, np.clip(trace.duty, model.min_reach_duty, 100.0),
                        model.min_reach_duty)
    per_m3 = model.droplet_rate * 1000.0
    streams = [_paper_streams(seed, i) for i in range(n_p)]

    for k0 in range(0, n_steps, chunk_steps):
        k1 = min(k0 + chunk_steps, n_steps)
        t = trace.t[k0:k1] - trace.t[0]
        xs = x_start + speed * t
        dx = px[None, None, :] - xs[:, None, None]
        dz = pz[None, None, :] - nz[None, :, None]
        r = np.hypot(dx, dz)
        dens = areal_density(r, pd[None, None, :], duty_geo[k0:k1, :, None], model)
        emitted = trace.q_n[k0:k1] * trace.dt * per_m3
        lam = (emitted[:, :, None] * dens * same_side[None]).sum(axis=(0, 1)) * area
        u = np.array([c.random() for c, _ in streams])
        live = np.flatnonzero(lam > 0)
        if live.size == 0:
            continue
        counts = np.maximum(stats.poisson.ppf(u[live], lam[live]), 0).astype(np.int64)
        for i, k in zip(live, counts):
            if k:
                idx = np.minimum((streams[i][1].random(k) * npix[i]).astype(np.int64), npix[i] - 1)
                out[i].raster.flat[idx] = True
                hits[i] += k

    zone_volume = {}
    for p, h in zip(out, hits):
        zone_volume[p.zone] = zone_volume.get(p.zone, 0.0) + h / model.droplet_rate
    return DepositionField(out, hits, model.droplet_rate * trace.volume_l, zone_volume)


# -- bench duty sweeps --------------------------------------------------------

@dataclass(frozen=True)
class PeSetup:
    """Bench geometry for the duty sweeps; a single nozzle passes fixed papers."""

    pe1_distance: float = 1.0
    pe1_half_span: float = 0.5
    pe2_offset: float = 0.0
    speed: float = 0.5
    papers_per_cell: int = 4
    dt: float = 0.01
    nozzle_height: float = 1.5


PE1_DUTIES = (75, 80, 85, 90, 95, 100)
PE1_AREAS = (30, 40, 50, 60, 70, 80, 90, 100)
PE2_DUTIES = (75, 80, 85, 90, 95, 100)
PE2_DISTANCES = (0.7, 1.0, 1.3, 1.6)


def _pass_cell(duty: float, offsets, distance: float, setup: PeSetup, model: PlumeModel,
               valve: ValveParams, seed: int) -> np.ndarray:
    r_full = distance * math.tan(math.radians(model.cone_half_angle_at_100))
    half = r_full + 0.1
    n_steps = int(round(2 * half / (setup.speed * setup.dt))) + 1
    duties = np.full((n_steps, 1), float(duty))
    trace = integrate_volume(duties, setup.dt, valve, x0=duty / 100.0)
    papers = [WaterSensitivePaper(x=0.0, z=setup.nozzle_height + off, distance=distance)
              for off in offsets]
    boom = Boom(heights=(setup.nozzle_height,), sides=1)
    field_ = deposit(trace, papers, model, boom=boom, x_start=-half, speed=setup.speed, seed=seed)
    return field_.adhesion


def replicate_pe1(model: PlumeModel = PlumeModel(), valve: ValveParams = ValveParams(),
                  setup: PeSetup = PeSetup(), duties=PE1_DUTIES, areas=PE1_AREAS,
                  seed: int | None = None) -> list[dict]:
    """Coverage vs duty and target area at a fixed distance.

    For area fraction ``a`` the papers are spread evenly over vertical offsets
    ``[-a, a] * pe1_half_span`` around the nozzle axis.
    """
    seed = model.rng_seed if seed is None else seed
    rows = []
    for duty in duties:
        for area in areas:
            span = area / 100.0 * setup.pe1_half_span
            offsets = np.linspace(-span, span, setup.papers_per_cell)
            rp = _pass_cell(duty, offsets, setup.pe1_distance, setup, model, valve, seed)
            rows.append(_cell(duty, area, rp))
    return rows


def replicate_pe2(model: PlumeModel = PlumeModel(), valve: ValveParams = ValveParams(),
                  setup: PeSetup = PeSetup(), duties=PE2_DUTIES, distances=PE2_DISTANCES,
                  seed: int | None = None) -> list[dict]:
    """Coverage vs duty and nozzle-to-target distance for on-axis papers."""
    seed = model.rng_seed if seed is None else seed
    rows = []
    for duty in duties:
        for dist in distances:
            offsets = [setup.pe2_offset] * setup.papers_per_cell
            rp = _pass_cell(duty, offsets, dist, setup, model, valve, seed)
            rows.append(_cell(duty, dist, rp))
    return rows


def _cell(duty, key, rp) -> dict:
    sd = float(np.std(rp, ddof=1)) if len(rp) > 1 else 0.0
    return {"duty": float(duty), "area_or_distance": float(key),
            "mean_rp": float(np.mean(rp)), "sd_rp": sd}


def grid(rows: list[dict]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reshape table rows into ``(duties, keys, mean_rp[duty, key])``."""
    duties = sorted({r["duty"] for r in rows})
    keys = sorted({r["area_or_distance"] for r in rows})
    g = np.full((len(duties), len(keys)), np.nan)
    for r in rows:
        g[duties.index(r["duty"]), keys.index(r["area_or_distance"])] = r["mean_rp"]
    return np.array(duties), np.array(keys), g


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["duty", "area_or_distance", "mean_rp", "sd_rp"])
    for r in rows:
        w.writerow([f"{r['duty']:g}", f"{r['area_or_distance']:g}",
                    f"{r['mean_rp']:.6f}", f"{r['sd_rp']:.6f}"])
    return buf.getvalue()
