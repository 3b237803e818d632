"""Shared fixtures, graph builders, and independent oracles.

The oracles here (set-partition enumeration, probability-table NMI,
pair-counting ARI) deliberately avoid the library's own code paths so the
tests check the implementation against independent computations.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from citemap.graph import CitationGraph, SymmetricAdjacency


def make_view(
    n: int,
    edges: list[tuple[int, int]] | list[tuple[int, int, float]],
    node_size=None,
) -> SymmetricAdjacency:
    """Undirected view from an edge list (default unit weights)."""
    if edges and len(edges[0]) == 2:
        edges = [(i, j, 1.0) for i, j in edges]
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=np.float64)
    g = CitationGraph.from_edge_arrays(
        [str(i) for i in range(n)], src, dst, w, node_size=node_size
    )
    return g.undirected_view()


def clique_edges(nodes: list[int]) -> list[tuple[int, int]]:
    return [(i, j) for i, j in combinations(nodes, 2)]


def k5_k5_bridge() -> SymmetricAdjacency:
    """Two unit-weight K5 cliques joined by a single edge (nodes 0-4, 5-9)."""
    edges = clique_edges(list(range(5))) + clique_edges(list(range(5, 10)))
    edges.append((0, 5))
    return make_view(10, edges)


def _edges_from_mask(n, iu, ju, mask) -> SymmetricAdjacency:
    src, dst = iu[mask], ju[mask]
    if len(src) == 0:
        src, dst = np.array([0]), np.array([1])
    g = CitationGraph.from_edge_arrays(
        [str(i) for i in range(n)], src, dst, np.ones(len(src))
    )
    return g.undirected_view()


def er_view(n: int, p: float, seed: int) -> SymmetricAdjacency:
    """Erdos-Renyi undirected unit-weight graph (at least one edge)."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    return _edges_from_mask(n, iu, ju, rng.random(len(iu)) < p)


def planted_view(n: int, blocks: int, p_in: float, p_out: float, seed: int) -> SymmetricAdjacency:
    rng = np.random.default_rng(seed)
    membership = rng.integers(0, blocks, size=n)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(membership[iu] == membership[ju], p_in, p_out)
    return _edges_from_mask(n, iu, ju, rng.random(len(iu)) < p)


def random_directed_edges(n_nodes: int, n_edges: int, seed: int):
    """Exactly n_edges distinct directed (src, dst) pairs, vectorized."""
    rng = np.random.default_rng(seed)
    pairs = np.zeros((0, 2), dtype=np.int64)
    while len(pairs) < n_edges:
        need = (n_edges - len(pairs)) * 2 + 64
        src = rng.integers(0, n_nodes, size=need)
        dst = rng.integers(0, n_nodes, size=need)
        keep = src != dst
        batch = np.stack([src[keep], dst[keep]], axis=1)
        pairs = np.unique(np.concatenate([pairs, batch]), axis=0)
    order = rng.permutation(len(pairs))[:n_edges]
    chosen = pairs[order]
    return chosen[:, 0], chosen[:, 1]


def random_citation_graph(
    n_nodes: int, n_edges: int, n_blocks: int, seed: int
) -> CitationGraph:
    """Directed citation-style graph with exactly n_edges distinct edges,
    block-structured, with out-degree-normalized weights."""
    rng = np.random.default_rng(seed)
    block = rng.integers(0, n_blocks, size=n_nodes)
    members = [np.flatnonzero(block == b) for b in range(n_blocks)]
    seen: set[int] = set()
    src = np.empty(n_edges, np.int64)
    dst = np.empty(n_edges, np.int64)
    count = 0
    while count < n_edges:
        batch = (n_edges - count) * 2
        s = rng.integers(0, n_nodes, size=batch)
        internal = rng.random(batch) < 0.85
        u = rng.random(batch)
        for i in range(batch):
            si = int(s[i])
            if internal[i]:
                pool = members[block[si]]
                ti = int(pool[int(u[i] * len(pool))])
            else:
                ti = int(u[i] * n_nodes)
            if si == ti:
                continue
            key = si * n_nodes + ti
            if key in seen:
                continue
            seen.add(key)
            src[count] = si
            dst[count] = ti
            count += 1
            if count == n_edges:
                break
    out_deg = np.bincount(src, minlength=n_nodes).astype(np.float64)
    w = 1.0 / out_deg[src]
    return CitationGraph.from_edge_arrays(
        [str(i) for i in range(n_nodes)], src, dst, w
    )


# --- brute-force CPM oracle ---

def set_partitions(n: int):
    """All set partitions of range(n) as restricted-growth label tuples."""
    labels = [0] * n
    yield tuple(labels)
    while True:
        i = n - 1
        while i > 0 and labels[i] == max(labels[:i]) + 1:
            i -= 1
        if i == 0:
            return
        labels[i] += 1
        for j in range(i + 1, n):
            labels[j] = 0
        yield tuple(labels)


class CpmOracle:
    """Exhaustive CPM optimum over all set partitions of a small graph.

    Quality is linear in gamma (Q = w_in - gamma * pairs), so partitions
    are enumerated once and reused for every resolution value.
    """

    def __init__(self, view: SymmetricAdjacency):
        n = view.n
        dense = np.zeros((n, n))
        rows = view.rows()
        for r, c, w in zip(rows, view.indices, view.weights):
            dense[r, c] = w
        sizes = view.node_size.astype(np.float64)
        self_w = view.self_weight
        w_in, pairs, parts = [], [], []
        for labels in set_partitions(n):
            arr = np.asarray(labels)
            wi = float(self_w.sum())
            pr = 0.0
            for c in range(arr.max() + 1):
                members = np.flatnonzero(arr == c)
                if len(members) > 1:
                    wi += dense[np.ix_(members, members)].sum() / 2.0
                total = sizes[members].sum()
                pr += total * (total - 1.0) / 2.0
            w_in.append(wi)
            pairs.append(pr)
            parts.append(labels)
        self.w_in = np.asarray(w_in)
        self.pairs = np.asarray(pairs)
        self.partitions = parts

    def optimum(self, gamma: float) -> float:
        return float(np.max(self.w_in - gamma * self.pairs))

    def argmax(self, gamma: float) -> tuple[int, ...]:
        return self.partitions[int(np.argmax(self.w_in - gamma * self.pairs))]


# --- labelling and similarity oracles ---

def nmi_bruteforce(counts: tuple[int, int, int, int]) -> float:
    """Direct probability-table NMI (sqrt normalization, bits)."""
    total = sum(counts)
    p = [c / total for c in counts]  # p11, p10, p01, p00
    pt = [p[0] + p[1], p[2] + p[3]]  # label present / absent
    pc = [p[0] + p[2], p[1] + p[3]]  # in cluster / out
    cells = [(p[0], pt[0], pc[0]), (p[1], pt[0], pc[1]),
             (p[2], pt[1], pc[0]), (p[3], pt[1], pc[1])]
    mi = sum(pij * math.log2(pij / (a * b)) for pij, a, b in cells if pij > 0)
    ht = -sum(x * math.log2(x) for x in pt if x > 0)
    hc = -sum(x * math.log2(x) for x in pc if x > 0)
    if ht <= 0 or hc <= 0:
        return 0.0
    return mi / math.sqrt(ht * hc)


def ari_pair_counting(cells: np.ndarray) -> float:
    """Adjusted Rand index by explicit enumeration of document pairs."""
    labels_a, labels_b = [], []
    for i in range(cells.shape[0]):
        for j in range(cells.shape[1]):
            labels_a.extend([i] * int(cells[i, j]))
            labels_b.extend([j] * int(cells[i, j]))
    n = len(labels_a)
    same_a = same_b = same_both = 0
    for x, y in combinations(range(n), 2):
        a_match = labels_a[x] == labels_a[y]
        b_match = labels_b[x] == labels_b[y]
        same_a += a_match
        same_b += b_match
        same_both += a_match and b_match
    pairs = math.comb(n, 2)
    expected = same_a * same_b / pairs
    maximum = (same_a + same_b) / 2
    if maximum == expected:
        return 1.0
    return (same_both - expected) / (maximum - expected)
