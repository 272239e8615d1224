"""Two competing types started next to each other.

At equal rates both types still touch far shells with positive
probability; a slower second type almost always gets enclosed.
"""
from richardson.coupling import coexistence_window_scan
from richardson.engine import FinitePair, TwoTypeConfig, run_two_type
from richardson.lattice import Box
from richardson.timefield import FieldSpec

box = Box.ball(12)
out = run_two_type(FieldSpec.independent(7), TwoTypeConfig(1.0, FinitePair.standard(), box))
occ = out.state.occupancy.reshape(box.shape)
for row in occ.T[::-1]:
    print("".join(".12"[v] for v in row))
print(out.classification.value)

res = coexistence_window_scan([0.25, 0.5, 1.0], 2, (8, 16, 32), replicas=400, seed=3)
print("\nP(both types on shell |x| = R)")
for (lam, R), c in sorted(res["estimates"].items()):
    print(f"lam={lam:<5} R={R:3d}  {c.mean:.3f} [{c.lo:.3f}, {c.hi:.3f}]")
print("nesting violations:", res["nesting_violations"])
