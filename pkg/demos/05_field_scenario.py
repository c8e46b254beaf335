"""Field scenario: gas injection next to two faults, with and without
mineral sealing of the left fault.

Case "a" leaves both faults untreated; "b" and "c" seal the upper left
fault at decreasing porosity. The run reports the first reactivation time,
its location, and the seismic magnitude of the slip episode, and writes the
full output file set (probe traces, fault margins, slip profiles, VTK
snapshots) to runs/demo_<case>/.

Run:  python3 demos/05_field_scenario.py a     (about five minutes)
"""

import sys

from faultseal.runner import run_showcase_to_dir
from faultseal.scenarios import ShowcaseSpec, build_showcase

case = sys.argv[1] if len(sys.argv) > 1 else "a"
spec = ShowcaseSpec(case=case)
sp = build_showcase(spec)
print(f"case {case}: grid {sp.grid.nx} x {sp.grid.ny} cells, "
      f"{'treated to phi=' + str(spec.treated_phi) if spec.treated_phi else 'untreated'}")

out = run_showcase_to_dir(sp, f"runs/demo_{case}")
import json
summary = json.loads((out / "summary.json").read_text())
print(json.dumps(summary, indent=2))
print(f"outputs in {out}")
print("render figures with:  plots render --fig all "
      f"--runs {out} --out figures/")
