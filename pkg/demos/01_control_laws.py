"""Walk through the three nozzle laws on a sweep of canopy fractions and distances.

Run: python3 demos/01_control_laws.py
"""

import numpy as np

from spraysim.control import ControllerConfig, command
from spraysim.perception import ZoneFeatures

a_ps = np.round(np.arange(0.0, 1.01, 0.1), 2)
distances = (0.8, 1.0, 1.2, 1.4, 1.6)

# All-open ignores the camera and on/off only looks at the area fraction.
for mode in ("all", "onoff"):
    cfg = ControllerConfig(mode=mode)
    duties = [command(ZoneFeatures(0, a, 1.2), cfg).duty for a in a_ps]
    print(f"{mode:>8}: " + " ".join(f"{d:5.1f}" for d in duties))

# The variable law scales with both inputs, held between the 75 % floor and 100 %.
cfg = ControllerConfig(mode="variable")
print("\nvariable duty, rows = distance (m), columns = area fraction")
print("        " + " ".join(f"{a:5.1f}" for a in a_ps))
for d in distances:
    row = [command(ZoneFeatures(0, a, d), cfg).duty for a in a_ps]
    print(f"{d:6.1f}  " + " ".join(f"{v:5.1f}" for v in row))

# Loosening the gate lets sparse zones spray at the floor instead of closing.
loose = ControllerConfig(mode="variable", variable_gate_by_threshold=False)
print("\nwithout the threshold gate, a_p=0.05 at 1.2 m ->", command(ZoneFeatures(0, 0.05, 1.2), loose).duty)
