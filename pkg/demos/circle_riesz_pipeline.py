"""Run the full pipeline on the unit circle with the first Riesz kernel and print the constant chain.

    python3 demos/circle_riesz_pipeline.py [K] [outdir]
"""

import sys

from czcurve.goodlambda import run_theorem_pipeline
from czcurve.report import emit_report

K = int(sys.argv[1]) if len(sys.argv) > 1 else 512
out = sys.argv[2] if len(sys.argv) > 2 else "out/demo_circle"

rep = run_theorem_pipeline({"curve": {"name": "circle", "K": K}, "ensemble": {"size": 4, "seed": 0}})
print(f"circle K={K}: passed={rep['passed']}")
for name, c in sorted(rep["constants"].items()):
    print(f"  {name:<24} {c['value']:<14.6g} {c['provenance']}")
gl = rep["goodlambda"]
print(f"good-lambda: {gl['violations']} violations in {gl['checked']} checks")
for route, block in sorted(rep["localization"].items()):
    n = len(block["reports"])
    ok = sum(r["passed"] for r in block["reports"])
    print(f"localization ({route}): {ok}/{n} qualifying points pass")
lp = rep["lp"]["2.0"]
print(f"A_2 = {lp['A_p']:.4e} (feasibility threshold for eps: {lp['feasibility_threshold']:.4g})")
print("wrote", len(emit_report(rep, out)), "files to", out)
