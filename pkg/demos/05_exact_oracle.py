"""Exact capture probabilities on tiny graphs versus the simulation engine."""
from fractions import Fraction

from richardson.oracle import ExactModel, exact_capture, exact_vs_engine, shipped_graphs

g, t1, t2 = shipped_graphs()["path3"]
for lam in (Fraction(1, 2), Fraction(1), Fraction(3)):
    res = exact_capture(ExactModel.from_sets(g, t1, t2, lam=lam), exact=True)
    print(f"path3 lam={lam}: P(type 2 takes the middle) = {res.capture2[1]}")

g, t1, t2 = shipped_graphs()["grid3x3"]
rep = exact_vs_engine(ExactModel.from_sets(g, t1, t2, lam=2.0), replicas=20_000, seed=0)
print("\nvertex  exact    engine   z")
for v in range(g.n):
    print(f"{v:6d}  {rep.exact[v]:.4f}  {rep.estimate[v]:.4f}  {rep.z[v]:+.2f}  {rep.flags[v]}")
print("passed:", rep.passed)
