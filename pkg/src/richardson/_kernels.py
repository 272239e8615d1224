"""Jitted competitive best-first growth over a padded neighbour table.

Events are ordered by (time, type, target index, source index); target
indices follow lexicographic site order, so this is the documented tie
rule. Events whose target is already infected are dropped on pop.
"""

import numpy as np
from numba import njit

MODE_FILL = 0
MODE_FIRST_CONTACT = 1   # stop when any boundary site is infected
MODE_TARGET = 2          # stop when `target` is infected
MODE_DECIDE = 3          # two-type: stop once both types touched the boundary or one is strangled
MODE_ALL_MARKED = 4      # stop when every site flagged in `bnd` is infected

STOP_EXHAUSTED = 0
STOP_CONTACT = 1
STOP_TARGET = 2
STOP_BOTH = 3
STOP_STRANGLED_1 = 4
STOP_STRANGLED_2 = 5
STOP_MARKED = 6


@njit(cache=True, inline="always")
def _less(ht, hty, hv, hs, i, j):
    if ht[i] != ht[j]:
        return ht[i] < ht[j]
    if hty[i] != hty[j]:
        return hty[i] < hty[j]
    if hv[i] != hv[j]:
        return hv[i] < hv[j]
    return hs[i] < hs[j]


@njit(cache=True, inline="always")
def _swap(ht, hty, hv, hs, i, j):
    ht[i], ht[j] = ht[j], ht[i]
    hty[i], hty[j] = hty[j], hty[i]
    hv[i], hv[j] = hv[j], hv[i]
    hs[i], hs[j] = hs[j], hs[i]


@njit(cache=True, inline="always")
def _sift_up(ht, hty, hv, hs, i):
    while i > 0:
        p = (i - 1) >> 1
        if _less(ht, hty, hv, hs, i, p):
            _swap(ht, hty, hv, hs, i, p)
            i = p
        else:
            break


@njit(cache=True, inline="always")
def _sift_down(ht, hty, hv, hs, size):
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        m = l
        r = l + 1
        if r < size and _less(ht, hty, hv, hs, r, l):
            m = r
        if _less(ht, hty, hv, hs, m, i):
            _swap(ht, hty, hv, hs, m, i)
            i = m
        else:
            break


@njit(cache=True)
def grow(nbr, eid, w1, w2, init, bnd, mode, target):
    """Run the growth; returns (occ, time, parent, order, first_boundary, stop, n_pops)."""
    n, k = nbr.shape
    occ = init.copy()
    time = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    first_bnd = np.full(3, np.inf)
    reached = np.zeros(3, dtype=np.bool_)
    track = mode == MODE_DECIDE
    pend1 = np.zeros(n if track else 1, dtype=np.int64)
    pend2 = np.zeros(n if track else 1, dtype=np.int64)
    live = np.zeros(3, dtype=np.int64)
    present = np.zeros(3, dtype=np.bool_)

    cap = 1024
    ht = np.empty(cap, dtype=np.float64)
    hty = np.empty(cap, dtype=np.int8)
    hv = np.empty(cap, dtype=np.int64)
    hs = np.empty(cap, dtype=np.int64)
    size = 0

    marked_left = 0
    for v in range(n):
        if bnd[v] and init[v] == 0:
            marked_left += 1

    nf = 0
    for v in range(n):
        if init[v] != 0:
            time[v] = 0.0
            order[nf] = v
            nf += 1
            present[init[v]] = True
            if bnd[v] and not reached[init[v]]:
                reached[init[v]] = True
                first_bnd[init[v]] = 0.0

    stop = STOP_EXHAUSTED
    head = 0
    n_pops = 0
    while True:
        # push events out of every site fixed since the last pass
        while head < nf:
            u = order[head]
            head += 1
            ty = occ[u]
            tu = time[u]
            for j in range(k):
                x = nbr[u, j]
                if x < 0 or occ[x] != 0:
                    continue
                if ty == 1:
                    t = tu + w1[eid[u, j]]
                else:
                    t = tu + w2[eid[u, j]]
                if size == cap:
                    cap *= 2
                    ht2 = np.empty(cap, dtype=np.float64)
                    hty2 = np.empty(cap, dtype=np.int8)
                    hv2 = np.empty(cap, dtype=np.int64)
                    hs2 = np.empty(cap, dtype=np.int64)
                    ht2[:size] = ht[:size]
                    hty2[:size] = hty[:size]
                    hv2[:size] = hv[:size]
                    hs2[:size] = hs[:size]
                    ht, hty, hv, hs = ht2, hty2, hv2, hs2
                ht[size] = t
                hty[size] = ty
                hv[size] = x
                hs[size] = u
                _sift_up(ht, hty, hv, hs, size)
                size += 1
                if track:
                    if ty == 1:
                        pend1[x] += 1
                    else:
                        pend2[x] += 1
                    live[ty] += 1

        if mode == MODE_FIRST_CONTACT and (reached[1] or reached[2]):
            stop = STOP_CONTACT
            break
        if mode == MODE_ALL_MARKED and marked_left == 0:
            stop = STOP_MARKED
            break
        if mode == MODE_TARGET and occ[target] != 0:
            stop = STOP_TARGET
            break
        if track:
            if reached[1] and reached[2]:
                stop = STOP_BOTH
                break
            if present[1] and not reached[1] and live[1] == 0:
                stop = STOP_STRANGLED_1
                break
            if present[2] and not reached[2] and live[2] == 0:
                stop = STOP_STRANGLED_2
                break

        # pop until a live event infects a site
        fixed = False
        while size > 0:
            t = ht[0]
            ty = hty[0]
            x = hv[0]
            s = hs[0]
            size -= 1
            if size > 0:
                ht[0] = ht[size]
                hty[0] = hty[size]
                hv[0] = hv[size]
                hs[0] = hs[size]
                _sift_down(ht, hty, hv, hs, size)
            n_pops += 1
            if occ[x] != 0:
                continue
            occ[x] = ty
            time[x] = t
            parent[x] = s
            order[nf] = x
            nf += 1
            if track:
                live[1] -= pend1[x]
                live[2] -= pend2[x]
                pend1[x] = 0
                pend2[x] = 0
            if bnd[x]:
                marked_left -= 1
                if not reached[ty]:
                    reached[ty] = True
                    first_bnd[ty] = t
            fixed = True
            break
        if not fixed:
            break

    return occ, time, parent, order[:nf].copy(), first_bnd, stop, n_pops


@njit(cache=True)
def grow_batch(nbr, eid, w1, w2, init, bnd):
    """Fill runs for many replicas of a small graph; rows of w1/w2 are replicas."""
    reps = w1.shape[0]
    n = nbr.shape[0]
    occ_out = np.empty((reps, n), dtype=np.int8)
    tmax = np.empty(reps, dtype=np.float64)
    for r in range(reps):
        occ, time, parent, order, fb, stop, npop = grow(nbr, eid, w1[r], w2[r], init, bnd,
                                                        MODE_FILL, -1)
        occ_out[r] = occ
        m = 0.0
        for v in range(n):
            if time[v] != np.inf and time[v] > m:
                m = time[v]
        tmax[r] = m
    return occ_out, tmax
