"""Bench sweeps: coverage against duty and target area, then against duty and distance.

Run: python3 demos/04_duty_sweeps.py
"""

from spraysim.spray import grid, replicate_pe1, replicate_pe2

for title, rows, unit in (("area (%)", replicate_pe1(), "{:5.0f}"), ("distance (m)", replicate_pe2(), "{:5.1f}")):
    duties, keys, g = grid(rows)
    print(f"\nmean R_p by duty (rows) and {title} (columns)")
    print("      " + " ".join(unit.format(k) for k in keys))
    for d, row in zip(duties, g):
        print(f"{d:5.0f} " + " ".join(f"{v:5.1f}" for v in row))
