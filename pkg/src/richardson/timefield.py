"""Stateless exponential passage times keyed by (seed, edge, channel).

Every passage time is a pure function of its key, computed with a
counter-based hash, so any edge can be sampled in any order, by any
worker, as often as needed:

    fmix(z)      = splitmix64 finalizer (shifts 30/27/31, multipliers
                   0xBF58476D1CE4E5B9, 0x94D049BB133111EB), arithmetic mod 2**64
    absorb(h, w) = fmix(h ^ (w + 0x9E3779B97F4A7C15))
    key          = absorb(absorb(fmix(seed + 0x9E3779B97F4A7C15), domain), channel)
    lattice edge : h = absorb(key, axis), then absorb each lower-endpoint coordinate
    graph edge   : h = absorb(key, edge_index)
    U            = ((h >> 11) + 0.5) * 2**-53            in (0, 1)
    base value   = round(-ln(U) * 2**32) * 2**-32, at least 2**-32

The dyadic grid makes sums of passage times exact in float64, so path
identities (subadditivity, telescoping, rate-2 scaling) hold bit-for-bit.
Replica seeds are ``derive_seed(master, r) = fmix(fmix(master + G) ^ (r + G))``
with ``G = 0x9E3779B97F4A7C15``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numba import njit

from .errors import InvalidChannelError, InvalidInputError, InvalidRateError
from .lattice import Box, Edge, edge as make_edge

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
QUANTUM = 2.0 ** -32
_U64 = (1 << 64) - 1

DOMAIN_LATTICE = 1
DOMAIN_GRAPH = 2


class Channel(enum.IntEnum):
    SHARED = 0
    CH1 = 1
    CH2 = 2


@njit(cache=True, inline="always")
def _fmix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _absorb(h, w):
    return _fmix(h ^ (np.uint64(w) + np.uint64(0x9E3779B97F4A7C15)))


@njit(cache=True, inline="always")
def _u_value(u):
    q = np.floor(-np.log(u) * 4294967296.0 + 0.5)
    if q < 1.0:
        q = 1.0
    return q * 2.0 ** -32


@njit(cache=True, inline="always")
def _to_value(h):
    return _u_value((np.float64(h >> np.uint64(11)) + 0.5) * 2.0 ** -53)


@njit(cache=True)
def _u_values(u):
    out = np.empty(u.shape[0], dtype=np.float64)
    for i in range(u.shape[0]):
        out[i] = _u_value(u[i])
    return out


@njit(cache=True)
def _key(seed, domain, channel):
    h = _fmix(np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15))
    h = _absorb(h, np.uint64(domain))
    return _absorb(h, np.uint64(channel))


@njit(cache=True)
def _box_values(seed, channel, lo, shape):
    d = lo.shape[0]
    n = 1
    for a in range(d):
        n *= shape[a]
    key = _key(seed, 1, channel)
    out = np.empty(n * d, dtype=np.float64)
    coords = np.empty(d, dtype=np.int64)
    for v in range(n):
        rem = v
        for a in range(d - 1, -1, -1):
            coords[a] = lo[a] + rem % shape[a]
            rem //= shape[a]
        for axis in range(d):
            h = _absorb(key, np.uint64(axis))
            for a in range(d):
                h = _absorb(h, np.uint64(coords[a]))
            out[v * d + axis] = _to_value(h)
    return out


@njit(cache=True)
def _edge_hashes(seed, channel, lowers, axes):
    key = _key(seed, 1, channel)
    n, d = lowers.shape
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        h = _absorb(key, np.uint64(axes[i]))
        for a in range(d):
            h = _absorb(h, np.uint64(lowers[i, a]))
        out[i] = h
    return out


@njit(cache=True)
def _graph_values(seeds, channel, n_edges):
    out = np.empty((seeds.shape[0], n_edges), dtype=np.float64)
    for r in range(seeds.shape[0]):
        key = _key(seeds[r], 2, channel)
        for e in range(n_edges):
            out[r, e] = _to_value(_absorb(key, np.uint64(e)))
    return out


def fmix(z: int) -> int:
    """Pure-Python splitmix64 finalizer (reference for the jitted version)."""
    z &= _U64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _U64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, replica: int) -> int:
    """Seed of replica `replica` under `master_seed`; fixed across machines."""
    g = int(GOLDEN)
    return fmix((fmix(int(master_seed) + g) ^ ((int(replica) + g) & _U64)) & _U64)


def exp_from_uniform(u):
    """Rate-1 exponential by inversion, snapped to the 2**-32 grid."""
    arr = np.asarray(u, dtype=np.float64)
    out = _u_values(arr.ravel()).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def uniform_from_hash(h):
    h = np.asarray(h, dtype=np.uint64)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not rate > 0 or not np.isfinite(rate):
        raise InvalidRateError(f"rate must be positive and finite, got {rate}")
    return rate


@dataclass(frozen=True)
class FieldSpec:
    """A realization of the passage-time field: seed, dimension, channels."""

    master_seed: int
    d: int = 2
    channels: tuple = (Channel.SHARED,)

    @classmethod
    def shared(cls, seed: int, d: int = 2) -> "FieldSpec":
        return cls(int(seed), d, (Channel.SHARED,))

    @classmethod
    def independent(cls, seed: int, d: int = 2) -> "FieldSpec":
        return cls(int(seed), d, (Channel.CH1, Channel.CH2))

    def _check(self, ch) -> int:
        ch = Channel(ch)
        if ch not in self.channels:
            raise InvalidChannelError(f"channel {ch.name} not in field channels "
                                      f"{[c.name for c in self.channels]}")
        return int(ch)

    @property
    def _seed64(self) -> np.uint64:
        return np.uint64(int(self.master_seed) & _U64)

    def uniform(self, e: Edge, ch) -> float:
        ch = self._check(ch)
        lower = np.array([e.lower], dtype=np.int64)
        h = _edge_hashes(self._seed64, ch, lower, np.array([e.axis], dtype=np.int64))
        return float(uniform_from_hash(h)[0])

    def base_sample(self, e: Edge, ch) -> float:
        return exp_from_uniform(self.uniform(e, ch))

    def edge_samples(self, lowers, axes, ch) -> np.ndarray:
        """Rate-1 values for many lattice edges given as (lower, axis) arrays."""
        ch = self._check(ch)
        lowers = np.ascontiguousarray(lowers, dtype=np.int64)
        h = _edge_hashes(self._seed64, ch, lowers, np.ascontiguousarray(axes, dtype=np.int64))
        return exp_from_uniform(uniform_from_hash(h))

    def box_values(self, box: Box, ch) -> np.ndarray:
        """Rate-1 values indexed ``site_index * d + axis`` (edge to x + e_axis)."""
        ch = self._check(ch)
        if box.d != self.d:
            raise InvalidInputError(f"box dimension {box.d} != field dimension {self.d}")
        return _box_values(self._seed64, ch, np.array(box.lo, dtype=np.int64),
                           np.array(box.shape, dtype=np.int64))

    def graph_values(self, n_edges: int, ch) -> np.ndarray:
        ch = self._check(ch)
        return _graph_values(np.array([self._seed64]), ch, int(n_edges))[0]


def graph_values_batch(seeds, ch, n_edges: int) -> np.ndarray:
    """Rate-1 values for graph-mode edges, one row per seed."""
    seeds = np.array([int(s) & _U64 for s in seeds], dtype=np.uint64)
    return _graph_values(seeds, int(Channel(ch)), int(n_edges))


@dataclass(frozen=True)
class StubField:
    """Explicit edge -> value table for deterministic tests.

    `values` applies to every channel; `per_channel` overrides it for single
    channels. Keys are canonical `Edge`s, pairs of adjacent sites, or (in
    graph mode) integer edge indices. Missing edges take `default`.
    """

    values: Mapping = field(default_factory=dict)
    d: int = 2
    default: float | None = None
    per_channel: Mapping = field(default_factory=dict)
    channels: tuple = (Channel.SHARED, Channel.CH1, Channel.CH2)

    @classmethod
    def uniform(cls, value: float, d: int = 2) -> "StubField":
        return cls({}, d, float(value))

    def _table(self, ch) -> dict:
        table = {_norm_key(k): float(v) for k, v in self.values.items()}
        for k, v in self.per_channel.get(Channel(ch), {}).items():
            table[_norm_key(k)] = float(v)
        return table

    def _lookup(self, table, key):
        if key in table:
            return table[key]
        if self.default is None:
            raise InvalidInputError(f"stub field has no value for {key}")
        return self.default

    def base_sample(self, e, ch) -> float:
        return self._lookup(self._table(ch), _norm_key(e))

    def box_values(self, box: Box, ch) -> np.ndarray:
        table = self._table(ch)
        d = box.d
        out = np.empty(box.n_sites * d)
        for v in range(box.n_sites):
            x = box.site(v)
            for axis in range(d):
                out[v * d + axis] = self._lookup(table, Edge(x, axis)) if _in_range(
                    box, x, axis) else np.inf
        return out

    def graph_values(self, n_edges: int, ch) -> np.ndarray:
        table = self._table(ch)
        return np.array([self._lookup(table, e) for e in range(n_edges)], dtype=np.float64)


def _in_range(box, x, axis):
    return x[axis] < box.hi[axis]


def _norm_key(k):
    if isinstance(k, (int, np.integer)):
        return int(k)
    if isinstance(k, Edge):
        return Edge(tuple(int(c) for c in k.lower), int(k.axis))
    x, y = k
    return make_edge(x, y)


def base_sample(spec, e, ch) -> float:
    """Rate-1 passage time of edge `e` in channel `ch`."""
    return spec.base_sample(_norm_key(e), ch)


def passage_time(spec, e, ch, rate: float) -> float:
    """Passage time at the given rate: ``base_sample / rate``."""
    return base_sample(spec, e, ch) / _check_rate(rate)
