"""Field scenarios: row layout, synthetic camera frames, paper placement, manifests.

A row is tiled by segments tagged ``T`` (a tree the sprayer should cover) or
``NT`` (a gap between trees). Papers sit on selected segments and carry a
zone label used for reporting. Camera frames are drawn from a small library
of rendered mask/depth pairs; the manifest lists which library entry each
side's camera sees for every ``frame_interval`` meters of travel.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from . import perception as pc
from .perception import SegClass
from .spray import Boom, WaterSensitivePaper

SCENARIO_VERSION = 1


class ScenarioError(ValueError):
    """Missing files, malformed manifests or frames that contradict their segment tag."""


@dataclass(frozen=True)
class Segment:
    tag: str
    start: float
    length: float
    zone: int = 0
    kind: str = ""

    @property
    def end(self) -> float:
        return self.start + self.length


@dataclass(frozen=True)
class PaperSpec:
    id: str
    zone: int
    tag: str
    x: float
    z: float
    distance: float
    side: int = 0

    def make(self) -> WaterSensitivePaper:
        return WaterSensitivePaper(self.x, self.z, self.distance, self.side, self.zone, self.tag)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the synthetic orchard row.

    Tree crowns are rendered as dense ``core`` frames flanked by sparser
    ``edge`` frames that reach closer to the aisle. Gaps show only background
    rows (beyond the depth gate), sky, ground and trellis pipe, plus stray
    branches below the nozzle threshold.
    """

    name: str = "naju_default"
    n_trees: int = 14
    tree_length: float = 2.6
    gap_length: float = 1.1
    edge_length: float = 0.5
    n_zones: int = 3
    v_p: float = 0.5
    frame_interval: float = 0.1
    width: int = 1280
    height: int = 256
    core_ap: tuple = (0.8, 1.0)
    core_depth: tuple = (1.05, 1.35)
    edge_ap: tuple = (0.3, 0.6)
    edge_depth: tuple = (0.75, 0.9)
    gap_stray_ap: float = 0.03
    background_depth: tuple = (3.0, 4.5)
    n_core_variants: int = 6
    n_edge_variants: int = 4
    n_gap_variants: int = 3
    t_paper_positions: tuple = (0.3, 1.3, 2.3)
    t_paper_depth_edge: float = 0.85
    t_paper_depth_core: float = 1.2
    nt_paper_positions: tuple = (0.2, 0.5, 0.8)
    nt_paper_depth: float = 1.4
    paper_heights: tuple = (1.5, 1.1, 0.7)
    boom_heights: tuple = (1.9, 1.5, 1.1, 0.7)
    # orifice area giving about 25 L per row with all nozzles open
    valve_a_n: float = 2.126e-6

    def __post_init__(self):
        if self.n_trees < 0 or self.n_zones < 1:
            raise ValueError("n_trees must be >= 0 and n_zones >= 1")
        if self.tree_length <= 2 * self.edge_length and self.n_trees:
            raise ValueError("tree_length must exceed two edge lengths")
        if self.gap_length <= 0 or self.frame_interval <= 0 or self.v_p <= 0:
            raise ValueError("gap_length, frame_interval and v_p must be positive")
        for lo, hi in (self.core_ap, self.edge_ap):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("area bands must satisfy 0 <= lo <= hi <= 1")
        if self.n_trees and min(self.core_ap[0], self.edge_ap[0]) <= 0.10:
            raise ValueError("target band lies at or below the 10% nozzle threshold; unsatisfiable")
        if self.gap_stray_ap > 0.10:
            raise ValueError("gap stray branches exceed the 10% nozzle threshold; unsatisfiable")
        if max(self.core_depth[1], self.edge_depth[1]) >= 2.0:
            raise ValueError("canopy depth must stay inside the 2 m depth gate")


@dataclass
class Scenario:
    name: str
    row_length: float
    v_p: float
    seed: int
    frame_interval: float
    segments: list
    papers: list
    library: dict
    frames: list
    boom: Boom = field(default_factory=Boom)
    valve: dict = field(default_factory=dict)
    base_dir: str | None = None
    generator: dict | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def frame_period(self) -> float:
        return self.frame_interval / self.v_p

    def segment_at(self, x: float) -> Segment:
        for s in self.segments:
            if s.start <= x < s.end:
                return s
        return self.segments[-1]

    def load_frame(self, key: str) -> tuple[pc.SegmentedFrame, pc.DepthFrame]:
        if key in self._cache:
            return self._cache[key]
        try:
            entry = self.library[key]
        except KeyError:
            raise ScenarioError(f"frame {key!r} not in the scenario library") from None
        paths = []
        for k in ("mask", "depth"):
            p = entry[k]
            if self.base_dir and not os.path.isabs(p):
                p = os.path.join(self.base_dir, p)
            if not os.path.exists(p):
                raise ScenarioError(f"missing raster file: {p}")
            paths.append(p)
        try:
            pair = (pc.load_mask(paths[0]), pc.load_depth(paths[1]))
        except pc.RasterFormatError as exc:
            raise ScenarioError(str(exc)) from exc
        self._cache[key] = pair
        return pair

    def to_manifest(self) -> dict:
        return {
            "scenario_version": SCENARIO_VERSION,
            "name": self.name,
            "seed": self.seed,
            "row_length": _r(self.row_length),
            "v_p": _r(self.v_p),
            "frame_interval": _r(self.frame_interval),
            "boom": {"heights": [_r(h) for h in self.boom.heights], "sides": self.boom.sides},
            "valve": {k: v for k, v in sorted(self.valve.items())},
            "segments": [{"tag": s.tag, "start": _r(s.start), "length": _r(s.length),
                          "zone": s.zone, "kind": s.kind} for s in self.segments],
            "papers": [{"id": p.id, "zone": p.zone, "tag": p.tag, "x": _r(p.x), "z": _r(p.z),
                        "distance": _r(p.distance), "side": p.side} for p in self.papers],
            "frame_library": {k: dict(v) for k, v in sorted(self.library.items())},
            "frames": [list(f) for f in self.frames],
            "generator": self.generator,
        }


def _r(x: float) -> float:
    return round(float(x), 9)


# -- rendering ----------------------------------------------------------------

def _blob(rng, shape, fraction, sigma=12.0) -> np.ndarray:
    """Boolean mask covering exactly ``round(fraction * size)`` pixels of a smooth random field."""
    n = int(round(fraction * shape[0] * shape[1]))
    out = np.zeros(shape, dtype=bool)
    if n <= 0:
        return out
    noise = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    order = np.argsort(noise, axis=None, kind="stable")[::-1]
    out.flat[order[:n]] = True
    return out


def render_frame(rng, a_ps, d_cs, spec: GeneratorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render one mask/depth pair with per-zone canopy fractions and distances.

    A zone with ``a_p == 0`` holds no canopy in range.
    """
    h, w = spec.height, spec.width
    n = len(a_ps)
    classes = np.full((h, w), SegClass.SKY, dtype=np.uint8)
    depth = np.zeros((h, w))
    bounds = pc._bounds(w, n)
    for k, ((c0, c1), a_p, d_c) in enumerate(zip(bounds, a_ps, d_cs)):
        shape = (h, c1 - c0)
        cls = classes[:, c0:c1]
        dep = depth[:, c0:c1]
        # background: sky on the top band, ground on the bottom, distant rows elsewhere
        if k == n - 1:
            cls[:] = SegClass.GROUND
            dep[:] = rng.uniform(1.6, 2.6, shape)
        elif k > 0:
            far = _blob(rng, shape, 0.7)
            cls[far] = SegClass.TREE
            dep[far] = rng.uniform(*spec.background_depth, int(far.sum()))
        else:
            far = _blob(rng, shape, 0.35)
            cls[far] = SegClass.TREE
            dep[far] = rng.uniform(*spec.background_depth, int(far.sum()))
        if k in (1, 2) and rng.random() < 0.5:
            margin = min(20, h // 4)
            row = int(rng.integers(margin, h - margin))
            cls[row:row + 6, :] = SegClass.PIPE
            dep[row:row + 6, :] = 1.45
        canopy = _blob(rng, shape, a_p)
        if canopy.any():
            fruit = canopy & _blob(rng, shape, 0.12, sigma=3.0)
            cls[canopy] = SegClass.TREE
            cls[fruit] = SegClass.FRUIT
            dep[canopy] = np.clip(d_c + 0.06 * rng.standard_normal(int(canopy.sum())), 0.3, 1.95)
    return classes, depth


def _draw(rng, band, n):
    lo, hi = band
    return [round(float(v), 4) for v in rng.uniform(lo, hi, n)]


def generate_scenario(spec: GeneratorSpec | None = None, seed: int = 0, out_dir=None) -> Scenario:
    """Build a deterministic synthetic row.

    With ``out_dir`` the raster library and ``scenario.json`` are written there
    (paths in the manifest are relative to it); otherwise frames stay in memory.
    """
    spec = spec or GeneratorSpec()
    rng = np.random.default_rng([seed, 0x5EED])
    n_noz = len(spec.boom_heights)

    segments = []
    x = 0.0
    if spec.n_trees == 0:
        segments.append(Segment("NT", 0.0, spec.gap_length * 3 * spec.n_zones, 0, "gap"))
    for _ in range(spec.n_trees):
        segments.append(Segment("T", x, spec.tree_length, 0, "tree"))
        x += spec.tree_length
        segments.append(Segment("NT", x, spec.gap_length, 0, "gap"))
        x += spec.gap_length
    row_length = sum(s.length for s in segments)

    # instrument the tree (and following gap) nearest each zone's center
    papers = []
    trees = [i for i, s in enumerate(segments) if s.tag == "T"]
    gaps = [i for i, s in enumerate(segments) if s.tag == "NT"]
    for z in range(1, spec.n_zones + 1):
        centre = (z - 0.5) * row_length / spec.n_zones
        if trees:
            ti = min(trees, key=lambda i: abs(segments[i].start + segments[i].length / 2 - centre))
            t_seg = segments[ti]
            segments[ti] = Segment("T", t_seg.start, t_seg.length, z, t_seg.kind)
            for j, u in enumerate(spec.t_paper_positions):
                is_edge = u < spec.edge_length or u > t_seg.length - spec.edge_length
                d = spec.t_paper_depth_edge if is_edge else spec.t_paper_depth_core
                for hz in spec.paper_heights:
                    papers.append(PaperSpec(f"z{z}-T-{len(papers)}", z, "T", t_seg.start + u, hz, d))
            gi = ti + 1 if ti + 1 < len(segments) else ti - 1
        else:
            gi = min(gaps, key=lambda i: abs(segments[i].start + segments[i].length / 2 - centre))
        g_seg = segments[gi]
        segments[gi] = Segment("NT", g_seg.start, g_seg.length, z, g_seg.kind)
        base = g_seg.start if trees else centre - spec.gap_length / 2
        for u in spec.nt_paper_positions:
            for hz in spec.paper_heights:
                papers.append(PaperSpec(f"z{z}-NT-{len(papers)}", z, "NT", base + u, hz,
                                        spec.nt_paper_depth))

    # frame library
    library_arrays = {}
    for i in range(spec.n_core_variants if spec.n_trees else 0):
        library_arrays[f"core_{i:02d}"] = (_draw(rng, spec.core_ap, n_noz), _draw(rng, spec.core_depth, n_noz))
    for i in range(spec.n_edge_variants if spec.n_trees else 0):
        library_arrays[f"edge_{i:02d}"] = (_draw(rng, spec.edge_ap, n_noz), _draw(rng, spec.edge_depth, n_noz))
    for i in range(spec.n_gap_variants):
        stray = [spec.gap_stray_ap if k in (1, 2) else 0.0 for k in range(n_noz)]
        library_arrays[f"gap_{i:02d}"] = (stray, [1.3] * n_noz)

    rendered = {}
    for key, (a_ps, d_cs) in library_arrays.items():
        rendered[key] = render_frame(rng, a_ps, d_cs, spec)

    n_frames = int(round(row_length / spec.frame_interval))
    frames = []
    for i in range(n_frames):
        xc = (i + 0.5) * spec.frame_interval
        seg = next((s for s in segments if s.start <= xc < s.end), segments[-1])
        u = xc - seg.start
        if seg.tag == "NT":
            pool = [k for k in rendered if k.startswith("gap_")]
        elif u < spec.edge_length or u > seg.length - spec.edge_length:
            pool = [k for k in rendered if k.startswith("edge_")]
        else:
            pool = [k for k in rendered if k.startswith("core_")]
        frames.append([pool[int(rng.integers(len(pool)))] for _ in range(2)])

    library = {k: {"mask": f"frames/{k}.segmask", "depth": f"frames/{k}.depth16"} for k in rendered}
    gen = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()}
    scen = Scenario(
        name=spec.name, row_length=row_length, v_p=spec.v_p, seed=seed,
        frame_interval=spec.frame_interval, segments=segments, papers=papers,
        library=library, frames=frames, boom=Boom(tuple(spec.boom_heights), 2),
        valve={"a_n": spec.valve_a_n}, generator=gen,
    )
    for key, (cls, dep) in rendered.items():
        scen._cache[key] = (pc.SegmentedFrame(cls), pc.DepthFrame(np.rint(dep * 1000) / 1000))
    if out_dir is not None:
        write_scenario(scen, out_dir, rendered)
    return scen


def write_scenario(scen: Scenario, out_dir, rendered=None) -> str:
    """Write rasters and ``scenario.json``; returns the manifest path."""
    os.makedirs(os.path.join(out_dir, "frames"), exist_ok=True)
    for key, entry in scen.library.items():
        if rendered is not None and key in rendered:
            cls, dep = rendered[key]
        else:
            seg, dframe = scen.load_frame(key)
            cls, dep = seg.classes, dframe.depth
        pc.save_mask(os.path.join(out_dir, entry["mask"]), cls)
        pc.save_depth(os.path.join(out_dir, entry["depth"]), dep)
    path = os.path.join(out_dir, "scenario.json")
    data = json.dumps(scen.to_manifest(), indent=1, sort_keys=True) + "\n"
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)
    scen.base_dir = os.path.abspath(out_dir)
    return path


def load_scenario(path) -> Scenario:
    """Read a manifest (file or directory containing ``scenario.json``)."""
    if os.path.isdir(path):
        path = os.path.join(path, "scenario.json")
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        with open(path) as fh:
            m = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if m.get("scenario_version") != SCENARIO_VERSION:
        raise ScenarioError(f"{path}: unsupported scenario_version {m.get('scenario_version')!r}")
    try:
        boom = m.get("boom", {})
        return Scenario(
            name=m["name"], row_length=float(m["row_length"]), v_p=float(m["v_p"]),
            seed=int(m.get("seed", 0)), frame_interval=float(m["frame_interval"]),
            segments=[Segment(**s) for s in m["segments"]],
            papers=[PaperSpec(**p) for p in m["papers"]],
            library=m["frame_library"], frames=[list(f) for f in m["frames"]],
            boom=Boom(tuple(boom.get("heights", Boom().heights)), int(boom.get("sides", 2))),
            valve=dict(m.get("valve", {})), base_dir=os.path.dirname(os.path.abspath(path)),
            generator=m.get("generator"),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"{path}: malformed manifest ({exc})") from exc


def validate_scenario(scen: Scenario, thres: float = 0.10, *, max_depth: float = 2.0,
                      n_zones: int = 4, axis: str = "width") -> None:
    """Check that T frames exceed ``thres`` in some nozzle zone and NT frames never do."""
    if not scen.segments or not scen.frames:
        raise ScenarioError("scenario has no segments or no frames")
    if abs(sum(s.length for s in scen.segments) - scen.row_length) > 1e-6:
        raise ScenarioError("segments do not tile the row")
    peak = {}
    for i, pair in enumerate(scen.frames):
        xc = (i + 0.5) * scen.frame_interval
        tag = scen.segment_at(xc).tag
        for side, key in enumerate(pair):
            if key not in peak:
                seg, dep = scen.load_frame(key)
                feats = pc.frame_features(seg, dep, max_depth=max_depth, n_zones=n_zones, axis=axis)
                peak[key] = max(f.a_p for f in feats)
            if tag == "T" and not peak[key] > thres:
                raise ScenarioError(f"frame {i} side {side} ({key}) in a T segment never exceeds thres {thres}")
            if tag == "NT" and peak[key] > thres:
                raise ScenarioError(f"frame {i} side {side} ({key}) in an NT segment exceeds thres {thres}")
