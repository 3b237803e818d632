"""Cluster-level analysis: topic affinity networks and solution comparison.

The affinity network links clusters whose directed citation flow exceeds a
random null-model expectation. Flow matrices are document contingencies
between two cluster solutions, the substrate for alluvial diagrams and for
partition similarity scores (NMI, adjusted Rand index).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping
from xml.sax.saxutils import quoteattr

import numpy as np

from .errors import SchemaError
from .graph import CitationGraph

UNASSIGNED_LABEL = "(unassigned)"


@dataclass(frozen=True)
class AffinityEdge:
    source: int
    target: int
    observed: float
    expected: float
    affinity: float
    z_score: float


@dataclass(frozen=True)
class AffinityNode:
    cluster_id: int
    publications: int


@dataclass
class AffinityNetwork:
    nodes: list[AffinityNode]
    edges: list[AffinityEdge]
    total_inter_weight: float


def affinity_network(
    graph: CitationGraph,
    assignment: np.ndarray,
    threshold: float = 1.0,
    min_z: float | None = None,
    use_weights: bool = True,
) -> AffinityNetwork:
    """Cluster-to-cluster citation surplus against a configuration-style
    null model.

    observed(A,B) sums directed weight from cluster A to cluster B (A != B;
    nodes assigned -1 are excluded). With out_A and in_B the inter-cluster
    marginals and W their grand total, expected(A,B) = out_A * in_B / W. An
    edge is emitted when observed > 0 and observed/expected >= threshold
    (optionally also when its binomial z-score >= min_z). ``use_weights``
    False counts raw citation links instead of weights.
    """
    a = np.ascontiguousarray(assignment, dtype=np.int64)
    if a.shape != (graph.n,):
        raise ValueError(f"assignment must cover all {graph.n} nodes")
    cluster_ids = np.unique(a[a >= 0])
    k = len(cluster_ids)
    nodes = [
        AffinityNode(cluster_id=int(c), publications=int(np.sum(a == c)))
        for c in cluster_ids
    ]
    if graph.edge_count == 0 or k == 0:
        warnings.warn("graph has no inter-cluster citation weight")
        return AffinityNetwork(nodes=nodes, edges=[], total_inter_weight=0.0)

    rows = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    src_c = a[rows]
    dst_c = a[graph.indices]
    mask = (src_c >= 0) & (dst_c >= 0) & (src_c != dst_c)
    w = graph.weights[mask] if use_weights else np.ones(int(mask.sum()))
    si = np.searchsorted(cluster_ids, src_c[mask])
    ti = np.searchsorted(cluster_ids, dst_c[mask])

    observed = np.zeros((k, k))
    np.add.at(observed, (si, ti), w)
    out_w = observed.sum(axis=1)
    in_w = observed.sum(axis=0)
    total = float(observed.sum())
    if total <= 0:
        warnings.warn("graph has no inter-cluster citation weight")
        return AffinityNetwork(nodes=nodes, edges=[], total_inter_weight=0.0)

    expected = np.outer(out_w, in_w) / total
    edges = []
    for i in range(k):
        for j in range(k):
            if i == j or observed[i, j] <= 0:
                continue
            exp = expected[i, j]
            if exp <= 0:
                continue
            aff = observed[i, j] / exp
            if aff < threshold:
                continue
            var = exp * (1.0 - exp / total)
            z = (observed[i, j] - exp) / math.sqrt(var) if var > 0 else 0.0
            if min_z is not None and z < min_z:
                continue
            edges.append(
                AffinityEdge(
                    source=int(cluster_ids[i]),
                    target=int(cluster_ids[j]),
                    observed=float(observed[i, j]),
                    expected=float(exp),
                    affinity=float(aff),
                    z_score=float(z),
                )
            )
    return AffinityNetwork(nodes=nodes, edges=edges, total_inter_weight=total)


def inter_cluster_expectation(
    graph: CitationGraph, assignment: np.ndarray, use_weights: bool = True
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """(observed, expected) inter-cluster weight matrices plus the cluster
    id list; expectation rows sum to the observed out-marginals."""
    a = np.ascontiguousarray(assignment, dtype=np.int64)
    unique_ids = np.unique(a[a >= 0])
    cluster_ids = [int(c) for c in unique_ids]
    k = len(cluster_ids)
    observed = np.zeros((k, k))
    if graph.edge_count and k:
        rows = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
        src_c, dst_c = a[rows], a[graph.indices]
        mask = (src_c >= 0) & (dst_c >= 0) & (src_c != dst_c)
        w = graph.weights[mask] if use_weights else np.ones(int(mask.sum()))
        si = np.searchsorted(unique_ids, src_c[mask])
        ti = np.searchsorted(unique_ids, dst_c[mask])
        np.add.at(observed, (si, ti), w)
    total = observed.sum()
    expected = (
        np.outer(observed.sum(axis=1), observed.sum(axis=0)) / total
        if total > 0
        else np.zeros((k, k))
    )
    return observed, expected, cluster_ids


@dataclass
class FlowMatrix:
    """Document contingency between two cluster solutions.

    Rows are clusters of solution A, columns clusters of solution B; cell
    (i, j) counts documents shared by both clusters. Documents present in
    only one solution flow to a synthetic "(unassigned)" column/row, kept
    last. ``shared`` counts documents assigned in both solutions.
    """

    row_labels: list[str]
    col_labels: list[str]
    cells: np.ndarray
    shared: int

    @property
    def row_totals(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.cells.sum(axis=0)

    def real_cells(self) -> np.ndarray:
        """Contingency restricted to real clusters (synthetic unassigned
        row/column stripped)."""
        r = len(self.row_labels) - (1 if UNASSIGNED_LABEL in self.row_labels else 0)
        c = len(self.col_labels) - (1 if UNASSIGNED_LABEL in self.col_labels else 0)
        return self.cells[:r, :c]

    def to_json_obj(self) -> dict:
        return {
            "rows": self.row_labels,
            "cols": self.col_labels,
            "cells": self.cells.tolist(),
            "row_totals": [int(x) for x in self.row_totals],
            "col_totals": [int(x) for x in self.col_totals],
            "shared_documents": self.shared,
        }


def flow_matrix(
    a_membership: Mapping[str, str], b_membership: Mapping[str, str]
) -> FlowMatrix:
    """Contingency of shared documents between two membership mappings.

    Clusters are ordered by descending shared-document count (ties: label
    ascending); the synthetic unassigned row/column appears only when
    residual documents exist and is always last.
    """
    docs_a, docs_b = set(a_membership), set(b_membership)
    shared_docs = docs_a & docs_b
    only_a, only_b = docs_a - docs_b, docs_b - docs_a

    def _order(membership, doc_subset, all_docs):
        counts: dict[str, int] = {}
        for doc in all_docs:
            counts.setdefault(str(membership[doc]), 0)
        for doc in doc_subset:
            lab = str(membership[doc])
            counts[lab] += 1
        return sorted(counts, key=lambda lab: (-counts[lab], lab))

    row_labels = _order(a_membership, shared_docs, docs_a)
    col_labels = _order(b_membership, shared_docs, docs_b)
    ri = {lab: i for i, lab in enumerate(row_labels)}
    ci = {lab: i for i, lab in enumerate(col_labels)}

    n_rows = len(row_labels) + (1 if only_b else 0)
    n_cols = len(col_labels) + (1 if only_a else 0)
    cells = np.zeros((n_rows, n_cols), dtype=np.int64)
    for doc in shared_docs:
        cells[ri[str(a_membership[doc])], ci[str(b_membership[doc])]] += 1
    for doc in only_a:
        cells[ri[str(a_membership[doc])], n_cols - 1] += 1
    for doc in only_b:
        cells[n_rows - 1, ci[str(b_membership[doc])]] += 1
    if only_b:
        row_labels = row_labels + [UNASSIGNED_LABEL]
    if only_a:
        col_labels = col_labels + [UNASSIGNED_LABEL]
    return FlowMatrix(
        row_labels=row_labels, col_labels=col_labels, cells=cells, shared=len(shared_docs)
    )


def partition_similarity(flow: FlowMatrix) -> tuple[float, float]:
    """(NMI, adjusted Rand index) of the two solutions from their shared
    document contingency. NMI uses sqrt normalization and is 0 when either
    partition has zero entropy."""
    cells = flow.real_cells()
    total = int(cells.sum())
    if total < 1:
        raise SchemaError("flow matrix has no shared documents")
    row = cells.sum(axis=1)
    col = cells.sum(axis=0)

    mi = 0.0
    for i in range(cells.shape[0]):
        for j in range(cells.shape[1]):
            nij = cells[i, j]
            if nij > 0:
                mi += (nij / total) * math.log2(nij * total / (row[i] * col[j]))
    h_row = -sum(p / total * math.log2(p / total) for p in row if p > 0)
    h_col = -sum(p / total * math.log2(p / total) for p in col if p > 0)
    if h_row <= 0 or h_col <= 0:
        nmi = 0.0
    else:
        nmi = min(max(mi / math.sqrt(h_row * h_col), 0.0), 1.0)

    sum_ij = sum(math.comb(int(nij), 2) for nij in cells.flat)
    sum_a = sum(math.comb(int(x), 2) for x in row)
    sum_b = sum(math.comb(int(x), 2) for x in col)
    pairs = math.comb(total, 2)
    if pairs == 0:
        return nmi, 1.0
    expected_index = sum_a * sum_b / pairs
    max_index = (sum_a + sum_b) / 2
    if max_index == expected_index:
        # both partitions degenerate in the same way; agreement is perfect
        ari = 1.0
    else:
        ari = (sum_ij - expected_index) / (max_index - expected_index)
    return nmi, float(ari)


# --- exports ---

def save_affinity(network: AffinityNetwork, json_path, graphml_path=None, dot_path=None) -> None:
    obj = {
        "nodes": [
            {"cluster": n.cluster_id, "publications": n.publications}
            for n in network.nodes
        ],
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "observed": e.observed,
                "expected": e.expected,
                "affinity": e.affinity,
                "z_score": e.z_score,
            }
            for e in network.edges
        ],
        "total_inter_weight": network.total_inter_weight,
    }
    Path(json_path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if graphml_path is not None:
        _write_graphml(network, graphml_path)
    if dot_path is not None:
        _write_dot(network, dot_path)


def _write_graphml(network: AffinityNetwork, path) -> None:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="size" for="node" attr.name="publications" attr.type="int"/>',
        '  <key id="affinity" for="edge" attr.name="affinity" attr.type="double"/>',
        '  <key id="observed" for="edge" attr.name="observed" attr.type="double"/>',
        '  <graph edgedefault="directed">',
    ]
    for n in network.nodes:
        lines.append(f'    <node id={quoteattr(str(n.cluster_id))}>')
        lines.append(f'      <data key="size">{n.publications}</data>')
        lines.append("    </node>")
    for e in network.edges:
        lines.append(
            f'    <edge source={quoteattr(str(e.source))} target={quoteattr(str(e.target))}>'
        )
        lines.append(f'      <data key="affinity">{e.affinity!r}</data>')
        lines.append(f'      <data key="observed">{e.observed!r}</data>')
        lines.append("    </edge>")
    lines += ["  </graph>", "</graphml>", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def _write_dot(network: AffinityNetwork, path) -> None:
    lines = ["digraph affinity {"]
    for n in network.nodes:
        lines.append(f'  "{n.cluster_id}" [publications={n.publications}];')
    for e in network.edges:
        lines.append(
            f'  "{e.source}" -> "{e.target}" [affinity={e.affinity:.6f}, weight={e.observed:.6f}];'
        )
    lines += ["}", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def save_flow(flow: FlowMatrix, path) -> None:
    Path(path).write_text(
        json.dumps(flow.to_json_obj(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def save_similarity(nmi: float, ari: float, shared: int, path) -> None:
    obj = {"nmi": nmi, "adjusted_rand_index": ari, "shared_documents": shared}
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
