"""A single type-2 site facing an infinite wall or a half-line of type 1.

Against the wall the type-2 cluster dies out level by level; against the
half-line at equal rates it keeps a foothold far away.
"""
from richardson.analysis import level_occupancy
from richardson.engine import HalfLine

wall = level_occupancy(2, 1.0, W=32, L=32, replicas=300, seed=0)
line = level_occupancy(2, 1.0, W=32, L=32, replicas=300, seed=1, initial=HalfLine())
print("level  survival(wall)  survival(half-line)")
for l in (0, 2, 4, 8, 16, 32):
    print(f"{l:5d}  {wall.survival[l].mean:14.3f}  {line.survival[l].mean:19.3f}")
