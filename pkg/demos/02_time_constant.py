"""Time constant estimates at growing n, and the increment table of a long passage.

The drift of T(0, n e_1)/n towards its limit is slow, so consecutive
estimates differ by more than their sampling error at moderate n.
"""
from richardson.analysis import estimate_time_constant, gm_increments

for n in (8, 16, 32):
    e = estimate_time_constant(2, 1.0, n, replicas=200, seed=n)
    print(f"n={n:3d}  mu_hat={e.mean_T_over_n:.4f} +- {e.half_width:.4f}")

tab = gm_increments(2, n=8, k_max=4, m=32, replicas=100, seed=0)
print("\nk  mean increment T(0,(k+1)n) - T(0,kn)")
for k, c in enumerate(tab.increments):
    print(f"{k}  {c.mean:.3f} +- {c.half_width:.3f}")
print(f"telescoping violations {tab.telescoping_violations}, "
      f"triangle violations {tab.triangle_violations}")
