"""Weighted direct citation network over a publication corpus.

A CitationGraph is a directed sparse graph in CSR form where an edge i -> j
means publication i cites publication j. Node ids are interned to dense
integer indices at construction; all exported artifacts use the original
string ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .corpus import PublicationRecord
from .errors import SchemaError

WEIGHTING_MODES = ("unit", "normalized_out")


@dataclass
class GraphBuildStats:
    """Reference-resolution counters collected while building a graph."""

    resolved_references: int = 0
    unresolved_references: int = 0
    self_references: int = 0

    def to_dict(self) -> dict:
        return {
            "resolved_references": self.resolved_references,
            "unresolved_references": self.unresolved_references,
            "self_references": self.self_references,
        }


@dataclass
class ComponentReport:
    component_count: int
    giant_size: int
    giant_edge_count: int
    dropped_nodes: int

    def to_dict(self) -> dict:
        return {
            "component_count": self.component_count,
            "giant_size": self.giant_size,
            "giant_edge_count": self.giant_edge_count,
            "dropped_nodes": self.dropped_nodes,
        }


@dataclass(frozen=True)
class SymmetricAdjacency:
    """Read-only symmetrized weight view used by the clustering engine.

    weight(i, j) = directed weight(i -> j) + directed weight(j -> i).
    Every undirected edge appears twice in the CSR arrays (once per
    direction); there are no diagonal entries. Aggregated graphs carry the
    weight collapsed inside each node in ``self_weight``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    node_size: np.ndarray
    self_weight: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.weights, self.node_size, self.self_weight):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.node_size)

    def total_weight(self) -> float:
        """Total undirected edge weight, including node self weight."""
        return float(self.weights.sum()) * 0.5 + float(self.self_weight.sum())

    def rows(self) -> np.ndarray:
        """Row index of every CSR entry (cached)."""
        cached = getattr(self, "_rows", None)
        if cached is None:
            cached = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
            cached.setflags(write=False)
            object.__setattr__(self, "_rows", cached)
        return cached

    def weight_between(self, i: int, j: int) -> float:
        """Symmetric weight between two nodes (0.0 when no edge either way)."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = np.searchsorted(self.indices[lo:hi], j)
        if pos < hi - lo and self.indices[lo + pos] == j:
            return float(self.weights[lo + pos])
        return 0.0


@dataclass
class CitationGraph:
    """Directed weighted citation network with CSR out-edges."""

    ids: list[str]
    node_size: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    index: dict[str, int] = field(repr=False)
    stats: GraphBuildStats | None = None

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return len(self.indices)

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def out_weights(self) -> np.ndarray:
        """Summed outgoing weight per node."""
        out = np.zeros(self.n)
        np.add.at(out, np.repeat(np.arange(self.n), np.diff(self.indptr)), self.weights)
        return out

    def iter_edges(self) -> Iterator[tuple[int, int, float]]:
        for i in range(self.n):
            for e in range(self.indptr[i], self.indptr[i + 1]):
                yield i, int(self.indices[e]), float(self.weights[e])

    @classmethod
    def from_edge_arrays(
        cls,
        ids: Sequence[str],
        src: np.ndarray,
        dst: np.ndarray,
        weights: np.ndarray,
        node_size: np.ndarray | None = None,
        stats: GraphBuildStats | None = None,
    ) -> "CitationGraph":
        """Build a graph from parallel edge arrays.

        Self-loops are dropped; duplicate (src, dst) pairs are summed.
        """
        n = len(ids)
        ids = [str(i) for i in ids]
        if node_size is None:
            node_size = np.ones(n, dtype=np.int64)
        else:
            node_size = np.asarray(node_size, dtype=np.int64)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(weights < 0):
            raise SchemaError("edge weights must be nonnegative")
        keep = src != dst
        mat = sp.coo_matrix(
            (weights[keep], (src[keep], dst[keep])), shape=(n, n)
        ).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        return cls(
            ids=ids,
            node_size=node_size,
            indptr=mat.indptr.astype(np.int64),
            indices=mat.indices.astype(np.int64),
            weights=mat.data.astype(np.float64),
            index={pid: i for i, pid in enumerate(ids)},
            stats=stats,
        )

    def undirected_view(self) -> SymmetricAdjacency:
        return undirected_view(self)


def build_graph(
    records: Iterable[PublicationRecord], weighting: str = "normalized_out"
) -> CitationGraph:
    """Construct the direct citation network over in-corpus references.

    One directed edge i -> j is created for every reference of i that
    resolves to an in-corpus id j != i. Under ``unit`` weighting every edge
    has weight 1; under ``normalized_out`` every edge out of i has weight
    1/r_i where r_i is the number of distinct in-corpus references of i, so
    each citing node's out-weight sums to exactly 1.

    Out-of-corpus references are ignored and counted in the returned
    graph's ``stats``.
    """
    if weighting not in WEIGHTING_MODES:
        raise ValueError(f"unknown weighting mode: {weighting!r}")
    records = list(records)
    ids = [r.id for r in records]
    index = {pid: i for i, pid in enumerate(ids)}
    if len(index) != len(ids):
        raise SchemaError("record ids must be unique when building a graph")

    stats = GraphBuildStats()
    src: list[int] = []
    dst: list[int] = []
    for i, rec in enumerate(records):
        resolved: list[int] = []
        seen: set[int] = set()
        for ref in rec.references:
            j = index.get(ref)
            if j is None:
                stats.unresolved_references += 1
                continue
            if j == i:
                stats.self_references += 1
                continue
            if j not in seen:
                seen.add(j)
                resolved.append(j)
        stats.resolved_references += len(resolved)
        src.extend([i] * len(resolved))
        dst.extend(resolved)

    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    if weighting == "unit":
        w = np.ones(len(src_a))
    else:
        out_deg = np.bincount(src_a, minlength=len(ids)).astype(np.float64)
        w = 1.0 / out_deg[src_a] if len(src_a) else np.zeros(0)
    return CitationGraph.from_edge_arrays(ids, src_a, dst_a, w, stats=stats)


def giant_component(graph: CitationGraph) -> tuple[CitationGraph, ComponentReport]:
    """Induced subgraph on the largest weakly connected component.

    Ties between equal-sized components are broken by the lexicographically
    smallest contained node id. Node ids are preserved; indices recomputed.
    """
    n = graph.n
    if n == 0:
        report = ComponentReport(0, 0, 0, 0)
        return (
            CitationGraph.from_edge_arrays([], np.zeros(0), np.zeros(0), np.zeros(0)),
            report,
        )
    mat = sp.csr_matrix(
        (graph.weights, graph.indices, graph.indptr), shape=(n, n)
    )
    ncomp, labels = connected_components(mat, directed=True, connection="weak")
    sizes = np.bincount(labels, minlength=ncomp)
    best = sizes.max()
    candidates = np.flatnonzero(sizes == best)
    if len(candidates) == 1:
        chosen = int(candidates[0])
    else:
        chosen = min(
            (min(graph.ids[i] for i in np.flatnonzero(labels == c)), int(c))
            for c in candidates
        )[1]
    keep = np.flatnonzero(labels == chosen)
    sub = mat[keep][:, keep].tocsr()
    sub.sort_indices()
    ids = [graph.ids[i] for i in keep]
    out = CitationGraph(
        ids=ids,
        node_size=graph.node_size[keep].copy(),
        indptr=sub.indptr.astype(np.int64),
        indices=sub.indices.astype(np.int64),
        weights=sub.data.astype(np.float64),
        index={pid: i for i, pid in enumerate(ids)},
        stats=graph.stats,
    )
    report = ComponentReport(
        component_count=int(ncomp),
        giant_size=len(keep),
        giant_edge_count=int(sub.nnz),
        dropped_nodes=n - len(keep),
    )
    return out, report


def undirected_view(graph: CitationGraph) -> SymmetricAdjacency:
    """Symmetrized weight view: weight(i,j) = w(i->j) + w(j->i)."""
    n = graph.n
    mat = sp.csr_matrix((graph.weights, graph.indices, graph.indptr), shape=(n, n))
    sym = (mat + mat.T).tocsr()
    sym.sum_duplicates()
    sym.sort_indices()
    return SymmetricAdjacency(
        indptr=sym.indptr.astype(np.int64),
        indices=sym.indices.astype(np.int64),
        weights=sym.data.astype(np.float64),
        node_size=graph.node_size.astype(np.int64).copy(),
        self_weight=np.zeros(n),
    )


# --- edge/node list export and import ---

NODES_HEADER = ("id", "node_size")
EDGES_HEADER = ("source_id", "target_id", "weight")


def save_graph(graph: CitationGraph, nodes_path, edges_path, summary_path=None,
               component_report: ComponentReport | None = None) -> None:
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    with nodes_path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(NODES_HEADER) + "\n")
        for i, pid in enumerate(graph.ids):
            fh.write(f"{pid}\t{int(graph.node_size[i])}\n")
    with edges_path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(EDGES_HEADER) + "\n")
        for i, j, w in graph.iter_edges():
            fh.write(f"{graph.ids[i]}\t{graph.ids[j]}\t{w!r}\n")
    if summary_path is not None:
        summary = {
            "nodes": graph.n,
            "edges": graph.edge_count,
            "total_weight": graph.total_weight(),
            "build_stats": graph.stats.to_dict() if graph.stats else None,
            "component_report": component_report.to_dict() if component_report else None,
        }
        Path(summary_path).write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def load_graph(nodes_path, edges_path) -> CitationGraph:
    """Read a graph written by save_graph (header rows optional)."""
    ids: list[str] = []
    sizes: list[int] = []
    for lineno, fields in tsv_rows(nodes_path, 2, NODES_HEADER):
        ids.append(fields[0])
        try:
            sizes.append(int(fields[1]))
        except ValueError:
            raise SchemaError(f"{nodes_path}: line {lineno}: bad node_size {fields[1]!r}")
    index = {pid: i for i, pid in enumerate(ids)}
    if len(index) != len(ids):
        raise SchemaError(f"{nodes_path}: duplicate node ids")
    src, dst, w = [], [], []
    for lineno, fields in tsv_rows(edges_path, 3, EDGES_HEADER):
        try:
            si, ti = index[fields[0]], index[fields[1]]
        except KeyError as exc:
            raise SchemaError(f"{edges_path}: line {lineno}: unknown node id {exc}")
        try:
            wt = float(fields[2])
        except ValueError:
            raise SchemaError(f"{edges_path}: line {lineno}: bad weight {fields[2]!r}")
        src.append(si)
        dst.append(ti)
        w.append(wt)
    return CitationGraph.from_edge_arrays(
        ids, np.asarray(src), np.asarray(dst), np.asarray(w),
        node_size=np.asarray(sizes, dtype=np.int64),
    )


def tsv_rows(path, ncols: int, header: tuple[str, ...]):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if lineno == 1 and tuple(fields) == header:
                continue
            if len(fields) != ncols:
                raise SchemaError(
                    f"{path}: line {lineno}: expected {ncols} columns, got {len(fields)}"
                )
            yield lineno, fields
