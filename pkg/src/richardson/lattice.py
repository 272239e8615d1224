"""Integer lattice geometry: sites, canonical edges, boxes and site sets.

Sites are plain tuples of ints. Boxes are axis-aligned rectangles whose
sites are numbered in lexicographic order, so comparing linear indices is
the same as comparing sites lexicographically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InvalidInputError

Site = tuple


class Edge(NamedTuple):
    """Canonical nearest-neighbour edge: lower endpoint plus axis index."""

    lower: tuple
    axis: int

    @property
    def upper(self) -> tuple:
        y = list(self.lower)
        y[self.axis] += 1
        return tuple(y)

    @property
    def endpoints(self) -> tuple:
        return self.lower, self.upper


def edge(x, y) -> Edge:
    """Canonical edge between two adjacent sites, independent of argument order."""
    x, y = tuple(int(c) for c in x), tuple(int(c) for c in y)
    if len(x) != len(y):
        raise InvalidInputError(f"dimension mismatch: {x} vs {y}")
    diff = [b - a for a, b in zip(x, y)]
    nonzero = [i for i, v in enumerate(diff) if v != 0]
    if len(nonzero) != 1 or abs(diff[nonzero[0]]) != 1:
        raise InvalidInputError(f"{x} and {y} are not nearest neighbours")
    axis = nonzero[0]
    return Edge(min(x, y), axis)


def neighbors(x) -> list:
    """The 2d nearest neighbours of `x`, axis ascending, minus before plus."""
    x = tuple(int(c) for c in x)
    out = []
    for axis in range(len(x)):
        for step in (-1, 1):
            y = list(x)
            y[axis] += step
            out.append(tuple(y))
    return out


def origin(d: int) -> tuple:
    return (0,) * d


def unit(d: int, axis: int = 0, n: int = 1) -> tuple:
    """The site n*e_axis."""
    x = [0] * d
    x[axis] = n
    return tuple(x)


def check_dimension(d: int) -> None:
    if int(d) < 2:
        raise InvalidInputError(f"dimension must be >= 2, got {d}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box of lattice sites with inclusive bounds `lo`..`hi`."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise InvalidInputError("lo and hi must have equal length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise InvalidInputError(f"empty box {self.lo}..{self.hi}")

    @classmethod
    def ball(cls, radius: int, d: int = 2, center=None) -> "Box":
        """L-infinity ball of the given radius."""
        if int(radius) < 1:
            raise InvalidInputError(f"box radius must be positive, got {radius}")
        center = origin(d) if center is None else tuple(int(c) for c in center)
        return cls(tuple(c - radius for c in center), tuple(c + radius for c in center))

    @classmethod
    def slab(cls, depth: int, width: int, d: int = 2) -> "Box":
        """Slab |x_1| <= depth, |x_i| <= width // 2 for the lateral axes."""
        if depth < 1 or width < 2:
            raise InvalidInputError(f"invalid slab depth={depth} width={width}")
        half = width // 2
        return cls((-depth,) + (-half,) * (d - 1), (depth,) + (half,) * (d - 1))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def radius(self) -> int:
        r = {(h - l) // 2 for l, h in zip(self.lo, self.hi)}
        if len(r) != 1 or any((h - l) % 2 for l, h in zip(self.lo, self.hi)):
            raise InvalidInputError("box is not a cube")
        return r.pop()

    @property
    def center(self) -> tuple:
        return tuple((l + h) // 2 for l, h in zip(self.lo, self.hi))

    @cached_property
    def strides(self) -> tuple:
        s, out = 1, []
        for n in reversed(self.shape):
            out.append(s)
            s *= n
        return tuple(reversed(out))

    def contains(self, x) -> bool:
        return len(x) == self.d and all(l <= c <= h for c, l, h in zip(x, self.lo, self.hi))

    def index(self, x) -> int:
        if not self.contains(x):
            raise InvalidInputError(f"site {tuple(x)} outside box {self.lo}..{self.hi}")
        return int(sum((c - l) * s for c, l, s in zip(x, self.lo, self.strides)))

    def site(self, index: int) -> tuple:
        out = []
        for l, s, n in zip(self.lo, self.strides, self.shape):
            out.append(l + (int(index) // s) % n)
        return tuple(out)

    @cached_property
    def coords(self) -> np.ndarray:
        """(n_sites, d) array of site coordinates in index order."""
        grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)],
                            indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        c = self.coords
        lo, hi = np.array(self.lo), np.array(self.hi)
        return np.any((c == lo) | (c == hi), axis=1)

    def shell_index(self) -> np.ndarray:
        """L-infinity distance of each site from the box center."""
        return self._shell

    @cached_property
    def _shell(self) -> np.ndarray:
        return np.abs(self.coords - np.array(self.center)).max(axis=1)

    def adjacency(self) -> tuple:
        """Padded neighbour table for the engine.

        Returns ``(nbr, eid)`` of shape (n_sites, 2d). ``nbr`` holds neighbour
        indices (-1 where the neighbour lies outside), ``eid`` the index of the
        connecting edge in the per-site, per-positive-axis edge numbering
        ``site_index * d + axis`` used by the passage-time arrays.
        """
        return _adjacency(self.lo, self.hi)


_ADJ_CACHE: dict = {}


def _adjacency(lo, hi):
    key = (lo, hi)
    if key in _ADJ_CACHE:
        return _ADJ_CACHE[key]
    box = Box(lo, hi)
    d, n = box.d, box.n_sites
    c = box.coords
    idx = np.arange(n, dtype=np.int64)
    nbr = np.full((n, 2 * d), -1, dtype=np.int64)
    eid = np.full((n, 2 * d), -1, dtype=np.int64)
    for axis in range(d):
        s = box.strides[axis]
        has_minus = c[:, axis] > lo[axis]
        has_plus = c[:, axis] < hi[axis]
        nbr[has_minus, 2 * axis] = idx[has_minus] - s
        eid[has_minus, 2 * axis] = (idx[has_minus] - s) * d + axis
        nbr[has_plus, 2 * axis + 1] = idx[has_plus] + s
        eid[has_plus, 2 * axis + 1] = idx[has_plus] * d + axis
    if len(_ADJ_CACHE) > 16:
        _ADJ_CACHE.clear()
    _ADJ_CACHE[key] = (nbr, eid)
    return nbr, eid


# --- site sets ---------------------------------------------------------------

_SITE_RE = re.compile(r"\(([^()]*)\)")


def site_set(sites: Iterable) -> frozenset:
    """Normalize an iterable of coordinate sequences to a frozenset of tuples."""
    out = [tuple(int(c) for c in s) for s in sites]
    if len(set(out)) != len(out):
        raise InvalidInputError("duplicate sites in site set")
    dims = {len(s) for s in out}
    if len(dims) > 1:
        raise InvalidInputError("sites of mixed dimension")
    return frozenset(out)


def parse_sites(text: str) -> frozenset:
    """Parse whitespace-separated tuples like ``"(0,0) (1,0)"``."""
    text = text.strip()
    found = _SITE_RE.findall(text)
    leftover = _SITE_RE.sub("", text).strip()
    if leftover:
        raise InvalidInputError(f"cannot parse site set: {text!r}")
    try:
        return site_set(tuple(int(c) for c in f.split(",")) for f in found)
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse site set: {text!r}") from exc


def format_sites(sites) -> str:
    return " ".join("(" + ",".join(str(c) for c in s) + ")" for s in sorted(sites))


# --- strangulation -----------------------------------------------------------

def strangles(xi_i, xi_j, d: int | None = None) -> bool:
    """True iff every path from `xi_j` to infinity meets `xi_i`.

    Flood fill from `xi_j` through the complement of `xi_i` inside the
    bounding box of `xi_i` inflated by one; reaching the inflated box's
    boundary means escape, since outside the bounding box the complement of
    a finite set is a single infinite component (d >= 2).
    """
    xi_i, xi_j = site_set(xi_i), site_set(xi_j)
    if d is None:
        d = len(next(iter(xi_i | xi_j))) if (xi_i or xi_j) else 2
    check_dimension(d)
    if any(len(s) != d for s in xi_i | xi_j):
        raise InvalidInputError(f"sites must have dimension {d}")
    if xi_i & xi_j:
        raise InvalidInputError("site sets overlap")
    if not xi_j:
        return True
    if not xi_i:
        return False
    pts = np.array(sorted(xi_i))
    lo = pts.min(axis=0) - 1
    hi = pts.max(axis=0) + 1
    box = Box(tuple(int(v) for v in lo), tuple(int(v) for v in hi))
    blocked = np.zeros(box.n_sites, dtype=bool)
    blocked[[box.index(s) for s in xi_i]] = True
    stack = []
    seen = np.zeros(box.n_sites, dtype=bool)
    for s in xi_j:
        if not box.contains(s) or box.boundary_mask[box.index(s)]:
            return False
        seen[box.index(s)] = True
        stack.append(box.index(s))
    nbr, _ = box.adjacency()
    bnd = box.boundary_mask
    while stack:
        v = stack.pop()
        for u in nbr[v]:
            if u < 0 or seen[u] or blocked[u]:
                continue
            if bnd[u]:
                return False
            seen[u] = True
            stack.append(int(u))
    return True


def is_fertile(xi_1, xi_2, d: int | None = None) -> bool:
    """Neither set strangles the other."""
    return not strangles(xi_1, xi_2, d) and not strangles(xi_2, xi_1, d)
