"""Compiled hot loops for the community-detection engine.

All kernels operate on CSR arrays of the symmetric weight view and mutate
only caller-owned buffers. Randomness comes from a SplitMix64 state passed
as a 1-element uint64 array, matching citemap.rng.SplitMix64 bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Positive-gain threshold guarding against float-noise move cycles.
GAIN_EPS = 1e-12

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xBF58476D1CE4E5B9)
_C3 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0**-53


@njit(cache=True)
def _next_u64(state):
    state[0] = state[0] + _C1
    z = state[0]
    z = (z ^ (z >> _U30)) * _C2
    z = (z ^ (z >> _U27)) * _C3
    return z ^ (z >> _U31)


@njit(cache=True)
def _uniform(state):
    return float(_next_u64(state) >> _U11) * _INV53


@njit(cache=True)
def shuffle(values, state):
    """In-place Fisher-Yates, identical stream to SplitMix64.shuffle."""
    n = values.shape[0]
    for i in range(n - 1, 0, -1):
        j = int(_next_u64(state) % np.uint64(i + 1))
        tmp = values[i]
        values[i] = values[j]
        values[j] = tmp


@njit(cache=True)
def _heap_push(heap, heap_n, val):
    i = heap_n
    heap[i] = val
    while i > 0:
        parent = (i - 1) // 2
        if heap[parent] > heap[i]:
            tmp = heap[parent]
            heap[parent] = heap[i]
            heap[i] = tmp
            i = parent
        else:
            break
    return heap_n + 1


@njit(cache=True)
def _heap_pop(heap, heap_n):
    heap_n -= 1
    heap[0] = heap[heap_n]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        smallest = i
        if left < heap_n and heap[left] < heap[smallest]:
            smallest = left
        if right < heap_n and heap[right] < heap[smallest]:
            smallest = right
        if smallest == i:
            break
        tmp = heap[smallest]
        heap[smallest] = heap[i]
        heap[i] = tmp
        i = smallest
    return heap_n


@njit(cache=True)
def local_move(indptr, indices, weights, node_size, comm, gamma, state):
    """Queue-based local move maximizing the size-penalized quality.

    Processes a queue initialized with all nodes in shuffled order. A node
    moves to the strictly gain-maximizing cluster (including the
    lowest-numbered empty cluster as a fresh singleton target); ties break
    toward the lowest cluster id. Moving re-queues neighbors outside the
    node's new cluster. Mutates ``comm`` in place; returns the move count.
    """
    n = node_size.shape[0]
    csize = np.zeros(n, np.float64)
    ccount = np.zeros(n, np.int64)
    for v in range(n):
        c = comm[v]
        csize[c] += node_size[v]
        ccount[c] += 1

    # min-heap of empty cluster ids; ascending fill is already heap-ordered
    heap = np.empty(n + 1, np.int64)
    heap_n = 0
    for c in range(n):
        if ccount[c] == 0:
            heap[heap_n] = c
            heap_n += 1

    queue = np.empty(n, np.int64)
    order = np.arange(n)
    shuffle(order, state)
    for i in range(n):
        queue[i] = order[i]
    head = 0
    pending = n
    in_queue = np.ones(n, np.bool_)

    wbuf = np.zeros(n, np.float64)
    touched = np.empty(n, np.int64)
    moves = 0

    while pending > 0:
        v = queue[head]
        head += 1
        if head == n:
            head = 0
        pending -= 1
        in_queue[v] = False

        cur = comm[v]
        sv = float(node_size[v])
        ntouched = 0
        for e in range(indptr[v], indptr[v + 1]):
            c = comm[indices[e]]
            if wbuf[c] == 0.0:
                touched[ntouched] = c
                ntouched += 1
            wbuf[c] += weights[e]

        removal = -(wbuf[cur] - gamma * sv * (csize[cur] - sv))
        best_gain = 0.0
        best_c = -1
        if ccount[cur] > 1 and heap_n > 0 and removal > GAIN_EPS:
            best_gain = removal
            best_c = heap[0]
        for t in range(ntouched):
            c = touched[t]
            if c == cur:
                continue
            gain = (wbuf[c] - gamma * sv * csize[c]) + removal
            if gain > GAIN_EPS and (
                gain > best_gain or (gain == best_gain and (best_c == -1 or c < best_c))
            ):
                best_gain = gain
                best_c = c

        if best_c != -1:
            was_empty = ccount[best_c] == 0
            comm[v] = best_c
            csize[cur] -= sv
            ccount[cur] -= 1
            csize[best_c] += sv
            ccount[best_c] += 1
            moves += 1
            if ccount[cur] == 0:
                heap_n = _heap_push(heap, heap_n, cur)
            if was_empty:
                heap_n = _heap_pop(heap, heap_n)
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if comm[u] != best_c and not in_queue[u]:
                    pos = head + pending
                    if pos >= n:
                        pos -= n
                    queue[pos] = u
                    pending += 1
                    in_queue[u] = True

        for t in range(ntouched):
            wbuf[touched[t]] = 0.0

    return moves


@njit(cache=True)
def refine(indptr, indices, weights, node_size, comm, gamma, theta, state, cref):
    """Refinement pass constraining merges to within communities of ``comm``.

    Starts from singletons. Only nodes that are still singleton in the
    refined partition and well connected inside their community may merge,
    and only into target clusters that are themselves well connected.
    Among nonnegative-gain targets one is sampled with probability
    proportional to exp(gain/theta); theta == 0 picks the maximal-gain
    target (ties toward the lowest cluster id). ``cref`` must be arange(n)
    on entry; on exit it holds refined cluster labels (root node indices).
    """
    n = node_size.shape[0]
    ncomm = 0
    for v in range(n):
        if comm[v] + 1 > ncomm:
            ncomm = comm[v] + 1

    com_size = np.zeros(ncomm, np.float64)
    for v in range(n):
        com_size[comm[v]] += node_size[v]

    # weight from each node to the rest of its community
    conn = np.zeros(n, np.float64)
    for v in range(n):
        cv = comm[v]
        acc = 0.0
        for e in range(indptr[v], indptr[v + 1]):
            if comm[indices[e]] == cv:
                acc += weights[e]
        conn[v] = acc

    ref_size = np.empty(n, np.float64)
    for v in range(n):
        ref_size[v] = node_size[v]
    ref_count = np.ones(n, np.int64)
    ext = conn.copy()

    order = np.arange(n)
    shuffle(order, state)

    wbuf = np.zeros(n, np.float64)
    touched = np.empty(n, np.int64)
    cand = np.empty(n, np.int64)
    gains = np.empty(n, np.float64)

    for oi in range(n):
        v = order[oi]
        rv = cref[v]
        if ref_count[rv] != 1:
            continue
        cv = comm[v]
        sv = float(node_size[v])
        if conn[v] < gamma * sv * (com_size[cv] - sv):
            continue

        ntouched = 0
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if comm[u] != cv:
                continue
            c = cref[u]
            if c == rv:
                continue
            if wbuf[c] == 0.0:
                touched[ntouched] = c
                ntouched += 1
            wbuf[c] += weights[e]

        ncand = 0
        for t in range(ntouched):
            c = touched[t]
            sc = ref_size[c]
            if ext[c] < gamma * sc * (com_size[cv] - sc):
                continue
            gain = wbuf[c] - gamma * sv * sc
            if gain >= 0.0:
                cand[ncand] = c
                gains[ncand] = gain
                ncand += 1

        if ncand > 0:
            if theta > 0.0:
                gmax = gains[0]
                for i in range(1, ncand):
                    if gains[i] > gmax:
                        gmax = gains[i]
                total = 0.0
                for i in range(ncand):
                    gains[i] = math.exp((gains[i] - gmax) / theta)
                    total += gains[i]
                r = _uniform(state) * total
                chosen = cand[ncand - 1]
                acc = 0.0
                for i in range(ncand):
                    acc += gains[i]
                    if r < acc:
                        chosen = cand[i]
                        break
            else:
                chosen = cand[0]
                gbest = gains[0]
                for i in range(1, ncand):
                    if gains[i] > gbest or (gains[i] == gbest and cand[i] < chosen):
                        chosen = cand[i]
                        gbest = gains[i]
            cref[v] = chosen
            ref_count[chosen] += 1
            ref_count[rv] = 0
            ref_size[chosen] += sv
            ext[chosen] += conn[v] - 2.0 * wbuf[chosen]
            ext[rv] = 0.0

        for t in range(ntouched):
            wbuf[touched[t]] = 0.0

    return 0


@njit(cache=True)
def relabel_dense(labels, out):
    """Rewrite labels as dense 0..k-1 ids in first-occurrence order."""
    n = labels.shape[0]
    maxv = np.int64(0)
    for v in range(n):
        if labels[v] > maxv:
            maxv = labels[v]
    mapping = np.full(maxv + 1, -1, np.int64)
    k = 0
    for v in range(n):
        c = labels[v]
        if mapping[c] == -1:
            mapping[c] = k
            k += 1
        out[v] = mapping[c]
    return k
