"""Regenerate tests/data/golden_sweep.json from the solver (regression golden).

    python3 tests/gen_golden.py
"""

import json
from pathlib import Path

from enesim.resonator import depth_sweep
from enesim.geometry import shallow_si

DEPTHS = [50e-9, 100e-9, 200e-9, 400e-9, 700e-9, 1000e-9]

rows = depth_sweep(shallow_si(), DEPTHS)
out = [
    {"t_m": s.t, "mode": s.mode.value, "region": s.region.value, "Etilde": s.Etilde,
     "C": s.C, "C0": s.C0, "Z_r": s.Z_r, "g_over_omega": s.g_over_omega}
    for s in rows
]
Path(__file__).with_name("data").joinpath("golden_sweep.json").write_text(json.dumps(out, indent=1) + "\n")
for r in out:
    print(r)
