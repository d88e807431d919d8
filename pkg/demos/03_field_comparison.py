"""Replay the built-in orchard row under all three controls and print the summary table.

Run: python3 demos/03_field_comparison.py [seed ...]
"""

import sys

from spraysim.harness import compare_controls
from spraysim.scenario import GeneratorSpec, generate_scenario

seeds = [int(s) for s in sys.argv[1:]] or [1, 2, 3]
scen = generate_scenario(GeneratorSpec(), seed=0)
print(f"{scen.name}: {scen.row_length:.1f} m row, {scen.n_frames} frames, {len(scen.papers)} papers")

report, results = compare_controls(scen, seeds)
print(f"\n{'mode':>9} {'tag':>3} {'mean':>7} {'sd':>6} {'max':>6} {'min':>6} {'L':>6} {'cut %':>6}")
for mode in ("all", "onoff", "variable"):
    for tag in ("T", "NT"):
        s = report.stats[(mode, tag)]
        print(f"{mode:>9} {tag:>3} {s.mean:7.2f} {s.sd:6.2f} {s.max:6.2f} {s.min:6.2f} "
              f"{report.volume[mode]:6.2f} {report.reduction_pct[mode]:6.1f}")

# where the duty went: mean commanded duty per segment type
for r in results[:3]:
    on_t = [r.duties[i].mean() for i in range(scen.n_frames)
            if scen.segment_at((i + 0.5) * scen.frame_interval).tag == "T"]
    on_nt = [r.duties[i].mean() for i in range(scen.n_frames)
             if scen.segment_at((i + 0.5) * scen.frame_interval).tag == "NT"]
    print(f"{r.mode.value:>9}: mean duty over trees {sum(on_t) / len(on_t):5.1f} %, over gaps {sum(on_nt) / len(on_nt):5.1f} %")
