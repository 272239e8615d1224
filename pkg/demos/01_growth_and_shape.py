"""Grow a one-type cluster, then estimate the limiting shape from hitting times.

Prints an ASCII picture of the infected set at a fixed time and a small
speed table by direction.
"""
import numpy as np

from richardson.analysis import estimate_shape
from richardson.engine import run_one_type
from richardson.lattice import Box
from richardson.timefield import FieldSpec

R = 20
box = Box.ball(R)
state = run_one_type(FieldSpec.shared(2024), 1.0, [(0, 0)], box)
t = state.infection_time.reshape(box.shape)
snapshot = t <= 0.45 * R          # roughly the time the cluster needs to reach radius R
for row in snapshot.T[::-1]:
    print("".join("#" if x else "." for x in row))
print(f"infected at t={0.45 * R:.1f}: {int(snapshot.sum())} sites")

est = estimate_shape(2, 1.0, R=32, replicas=60, seed=1)
print("\ndirection      speed (95% CI)")
for target, s in zip(est.targets, est.speed):
    print(f"{str(tuple(int(v) for v in target)):>12}  {s.mean:.3f} [{s.lo:.3f}, {s.hi:.3f}]")
print(f"symmetry defect {est.symmetry_defect:.4f}, convexity defect {est.convexity_defect:.4f}")
