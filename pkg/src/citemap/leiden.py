"""Community detection by quality maximization with a connectivity guarantee.

The engine maximizes a constant Potts quality function

    Q = sum over clusters c of [ w_c - gamma * S_c * (S_c - 1) / 2 ]

where w_c is the total symmetric edge weight inside cluster c and S_c the
summed node size of c. Optimization runs the three-phase procedure (fast
local move, refinement, aggregation) from singletons, repeated over
multiple deterministically seeded random starts; the best start wins.
Clusters below a minimum size are discarded afterwards, not merged.

Public phase functions (cpm_quality, move_gain, local_move_phase,
refine_phase, aggregate) operate on plain int64 assignment arrays over a
SymmetricAdjacency so each step can be exercised and checked on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import InternalError, SchemaError
from .graph import CitationGraph, SymmetricAdjacency
from .rng import SplitMix64

#: relative tolerance for "non-decreasing" quality traces; absorbs float
#: summation-order noise between evaluation at different aggregation levels
QUALITY_SLACK = 1e-9


def quality_non_decreasing(trace: list[float], slack: float = QUALITY_SLACK) -> bool:
    """True iff the trace never drops by more than the scale-aware slack."""
    return all(
        cur >= prev - slack * max(1.0, abs(prev))
        for prev, cur in zip(trace, trace[1:])
    )


@dataclass(frozen=True)
class CpmParams:
    """Resolution, iteration, and discard settings for one clustering run."""

    gamma: float
    iterations: int = 100
    random_starts: int = 10
    seed: int = 0
    theta: float = 0.01
    min_cluster_size: int = 1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if self.iterations < 1 or self.random_starts < 1:
            raise ValueError("iterations and random_starts must be >= 1")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "iterations": self.iterations,
            "random_starts": self.random_starts,
            "seed": self.seed,
            "theta": self.theta,
            "min_cluster_size": self.min_cluster_size,
        }


@dataclass
class Partition:
    """Cluster assignment with per-cluster sizes.

    assignment maps node index -> cluster id; discarded nodes carry -1.
    Retained cluster ids are dense integers starting at 0, ordered by
    descending summed node size. ``quality`` is the objective value of the
    optimized partition (before any size-based discarding).
    """

    assignment: np.ndarray
    cluster_sizes: np.ndarray
    quality: float

    @property
    def cluster_count(self) -> int:
        return len(self.cluster_sizes)

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster_id)


@dataclass
class ClusterSolution:
    partition: Partition
    discarded_nodes: np.ndarray
    discarded_share: float
    params: CpmParams
    run_log: list[float] = field(default_factory=list)
    start_qualities: list[float] = field(default_factory=list)
    start_iterations: list[int] = field(default_factory=list)
    best_start: int = 0


def _as_view(graph: CitationGraph | SymmetricAdjacency) -> SymmetricAdjacency:
    if isinstance(graph, SymmetricAdjacency):
        return graph
    return graph.undirected_view()


def _check_assignment(view: SymmetricAdjacency, assignment: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(assignment, dtype=np.int64)
    if a.shape != (view.n,):
        raise ValueError(f"assignment must cover all {view.n} nodes")
    if view.n and (a.min() < 0 or a.max() >= view.n):
        raise ValueError("cluster ids must lie in [0, n); unassigned node found")
    return a


def cpm_quality(
    view: CitationGraph | SymmetricAdjacency, assignment: np.ndarray, gamma: float
) -> float:
    """Quality Q = sum_c [w_c - gamma * S_c (S_c - 1) / 2] of a partition."""
    view = _as_view(view)
    a = _check_assignment(view, assignment)
    if view.n == 0:
        return 0.0
    k = int(a.max()) + 1
    same = a[view.rows()] == a[view.indices]
    w_in = 0.5 * np.bincount(a[view.rows()[same]], weights=view.weights[same], minlength=k)
    w_in += np.bincount(a, weights=view.self_weight, minlength=k)
    sizes = np.bincount(a, weights=view.node_size.astype(np.float64), minlength=k)
    return float(w_in.sum() - gamma * np.sum(sizes * (sizes - 1.0) / 2.0))


def move_gain(
    view: CitationGraph | SymmetricAdjacency,
    assignment: np.ndarray,
    node: int,
    target: int,
    gamma: float,
) -> float:
    """Quality delta of moving ``node`` into cluster ``target``.

    ``target`` may be -1 (or any empty cluster id) meaning a fresh
    singleton. Moving a node to its own cluster is rejected.
    """
    view = _as_view(view)
    a = _check_assignment(view, assignment)
    cur = int(a[node])
    if target == cur:
        raise ValueError("node is already a member of the target cluster")
    sv = float(view.node_size[node])
    lo, hi = view.indptr[node], view.indptr[node + 1]
    nbr_comm = a[view.indices[lo:hi]]
    w = view.weights[lo:hi]
    w_cur = float(w[nbr_comm == cur].sum())
    s_cur = float(view.node_size[a == cur].sum())
    if target < 0:
        w_tgt, s_tgt = 0.0, 0.0
    else:
        w_tgt = float(w[nbr_comm == target].sum())
        s_tgt = float(view.node_size[a == target].sum())
    return (w_tgt - gamma * sv * s_tgt) - (w_cur - gamma * sv * (s_cur - sv))


def local_move_phase(
    view: CitationGraph | SymmetricAdjacency,
    assignment: np.ndarray,
    gamma: float,
    rng: SplitMix64,
) -> tuple[np.ndarray, int]:
    """Run the queue-based local move to exhaustion.

    Returns (new assignment with dense cluster ids, number of moves).
    Quality never decreases.
    """
    view = _as_view(view)
    comm = _check_assignment(view, assignment).copy()
    moves = _kernels.local_move(
        view.indptr, view.indices, view.weights, view.node_size, comm,
        float(gamma), rng.state,
    )
    dense = np.empty(view.n, dtype=np.int64)
    _kernels.relabel_dense(comm, dense)
    return dense, int(moves)


def refine_phase(
    view: CitationGraph | SymmetricAdjacency,
    assignment: np.ndarray,
    gamma: float,
    theta: float,
    rng: SplitMix64,
) -> np.ndarray:
    """Refined partition: every refined cluster is a subset of its
    community in ``assignment``. Returns dense labels 0..k-1."""
    view = _as_view(view)
    comm = _check_assignment(view, assignment)
    cref = np.arange(view.n, dtype=np.int64)
    _kernels.refine(
        view.indptr, view.indices, view.weights, view.node_size, comm,
        float(gamma), float(theta), rng.state, cref,
    )
    dense = np.empty(view.n, dtype=np.int64)
    _kernels.relabel_dense(cref, dense)
    return dense


def aggregate(
    view: CitationGraph | SymmetricAdjacency,
    refined: np.ndarray,
    assignment: np.ndarray,
) -> tuple[SymmetricAdjacency, np.ndarray]:
    """Collapse refined clusters into aggregated nodes.

    Aggregated node sizes are summed node sizes; inter-cluster weights sum
    into aggregated edges; intra-cluster weight moves into node self
    weight, so quality values are preserved across levels. The returned
    initial partition assigns each aggregated node to its community in
    ``assignment``. Raises if ``refined`` is not a refinement of
    ``assignment``.
    """
    view = _as_view(view)
    ref = _check_assignment(view, refined)
    comm = _check_assignment(view, assignment)
    k = int(ref.max()) + 1 if view.n else 0

    rep = np.full(k, -1, dtype=np.int64)
    rep[ref] = comm
    if not np.array_equal(rep[ref], comm):
        raise ValueError("refined partition is not a refinement of the assignment")

    sizes = np.zeros(k, dtype=np.int64)
    np.add.at(sizes, ref, view.node_size)

    rows = view.rows()
    rs = ref[rows]
    cs = ref[view.indices]
    inter = rs != cs
    agg = sp.coo_matrix(
        (view.weights[inter], (rs[inter], cs[inter])), shape=(k, k)
    ).tocsr()
    agg.sum_duplicates()
    agg.sort_indices()
    self_w = np.bincount(ref, weights=view.self_weight, minlength=k)
    intra = ~inter
    self_w += 0.5 * np.bincount(rs[intra], weights=view.weights[intra], minlength=k)

    agg_view = SymmetricAdjacency(
        indptr=agg.indptr.astype(np.int64),
        indices=agg.indices.astype(np.int64),
        weights=agg.data.astype(np.float64),
        node_size=sizes,
        self_weight=self_w,
    )
    init = np.empty(k, dtype=np.int64)
    if k:
        _kernels.relabel_dense(rep, init)
    return agg_view, init


def _leiden_run(
    view: SymmetricAdjacency,
    gamma: float,
    theta: float,
    iterations: int,
    rng: SplitMix64,
) -> tuple[np.ndarray, list[float], int]:
    """One seeded run: up to ``iterations`` of (local move, refine,
    aggregate) from singletons, stopping early once an iteration changes
    nothing. Returns (assignment over base nodes, per-iteration quality
    trace, iterations executed)."""
    level = view
    flat = np.arange(view.n, dtype=np.int64)
    comm_init = np.arange(view.n, dtype=np.int64)
    trace: list[float] = []
    final_level_comm = comm_init
    iters = 0
    for _ in range(iterations):
        comm = comm_init.copy()
        moves = _kernels.local_move(
            level.indptr, level.indices, level.weights, level.node_size, comm,
            gamma, rng.state,
        )
        dense = np.empty(level.n, dtype=np.int64)
        _kernels.relabel_dense(comm, dense)
        iters += 1
        trace.append(cpm_quality(level, dense, gamma))

        cref = np.arange(level.n, dtype=np.int64)
        _kernels.refine(
            level.indptr, level.indices, level.weights, level.node_size, dense,
            gamma, theta, rng.state, cref,
        )
        cref_dense = np.empty(level.n, dtype=np.int64)
        k_ref = _kernels.relabel_dense(cref, cref_dense)

        if moves == 0 and k_ref == level.n:
            final_level_comm = dense
            break
        level, comm_init = aggregate(level, cref_dense, dense)
        flat = cref_dense[flat]
        final_level_comm = comm_init
    return final_level_comm[flat], trace, iters


def cluster(
    graph: CitationGraph | SymmetricAdjacency, params: CpmParams
) -> ClusterSolution:
    """Multi-start community detection with discard-below-threshold.

    Runs ``params.random_starts`` independent starts (seeds derived as
    seed + start index), keeps the one with maximal quality (ties: lowest
    start index), then discards clusters whose summed node size is below
    ``params.min_cluster_size``. Retained clusters are relabelled 0..k-1 by
    descending size. Deterministic given (graph, params).
    """
    view = _as_view(graph)
    if view.n == 0:
        raise SchemaError("cannot cluster an empty graph")

    best_assign: np.ndarray | None = None
    best_quality = -np.inf
    best_trace: list[float] = []
    best_start = 0
    start_qualities: list[float] = []
    start_iterations: list[int] = []

    for start in range(params.random_starts):
        rng = SplitMix64(params.seed + start)
        assign, trace, iters = _leiden_run(
            view, float(params.gamma), float(params.theta), params.iterations, rng
        )
        if not quality_non_decreasing(trace):
            raise InternalError(f"quality trace decreased within start {start}: {trace}")
        quality = trace[-1] if trace else 0.0
        start_qualities.append(quality)
        start_iterations.append(iters)
        if best_assign is None or quality > best_quality:
            best_assign, best_quality, best_trace, best_start = (
                assign, quality, trace, start,
            )

    assert best_assign is not None
    node_size = view.node_size.astype(np.int64)
    k = int(best_assign.max()) + 1
    sizes = np.zeros(k, dtype=np.int64)
    np.add.at(sizes, best_assign, node_size)

    # order clusters by descending size; ties by smallest member node index
    first_member = np.full(k, view.n, dtype=np.int64)
    np.minimum.at(first_member, best_assign, np.arange(view.n, dtype=np.int64))
    order = sorted(range(k), key=lambda c: (-int(sizes[c]), int(first_member[c])))

    relabel = np.full(k, -1, dtype=np.int64)
    kept_sizes: list[int] = []
    next_id = 0
    for c in order:
        if sizes[c] >= params.min_cluster_size:
            relabel[c] = next_id
            kept_sizes.append(int(sizes[c]))
            next_id += 1

    assignment = relabel[best_assign]
    discarded = np.flatnonzero(assignment < 0).astype(np.int64)
    total_mass = float(node_size.sum())
    discarded_mass = float(node_size[discarded].sum())
    partition = Partition(
        assignment=assignment,
        cluster_sizes=np.asarray(kept_sizes, dtype=np.int64),
        quality=float(best_quality),
    )
    return ClusterSolution(
        partition=partition,
        discarded_nodes=discarded,
        discarded_share=discarded_mass / total_mass if total_mass else 0.0,
        params=params,
        run_log=best_trace,
        start_qualities=start_qualities,
        start_iterations=start_iterations,
        best_start=best_start,
    )


def connectivity_check(
    view: CitationGraph | SymmetricAdjacency, assignment: np.ndarray
) -> tuple[bool, list[int]]:
    """True iff every retained cluster induces a connected subgraph of the
    symmetric view. Nodes assigned -1 (discarded) are ignored. Returns
    (ok, offending cluster ids)."""
    view = _as_view(view)
    a = np.ascontiguousarray(assignment, dtype=np.int64)
    if a.shape != (view.n,):
        raise ValueError(f"assignment must cover all {view.n} nodes")
    if view.n == 0:
        return True, []
    rows = view.rows()
    same = (a[rows] == a[view.indices]) & (a[rows] >= 0)
    intra = sp.coo_matrix(
        (np.ones(int(same.sum())), (rows[same], view.indices[same])),
        shape=(view.n, view.n),
    )
    _, labels = connected_components(intra.tocsr(), directed=False)
    offending = []
    for c in np.unique(a[a >= 0]):
        members = np.flatnonzero(a == c)
        if len(np.unique(labels[members])) > 1:
            offending.append(int(c))
    return not offending, offending


# --- partition export / import ---

PARTITION_HEADER = ("pub_id", "cluster_id")


def save_partition(ids: list[str], assignment: np.ndarray, path) -> None:
    """Write (pub_id, cluster_id) rows; discarded nodes get cluster_id -1."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("\t".join(PARTITION_HEADER) + "\n")
        for pid, c in zip(ids, assignment):
            fh.write(f"{pid}\t{int(c)}\n")


def load_membership(path) -> dict[str, str]:
    """Read a partition TSV into doc -> cluster label, skipping rows with
    cluster_id -1 (discarded/unassigned)."""
    out: dict[str, str] = {}
    p = Path(path)
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if lineno == 1 and tuple(fields) == PARTITION_HEADER:
                continue
            if len(fields) != 2:
                raise SchemaError(f"{p}: line {lineno}: expected 2 columns")
            if fields[1] == "-1":
                continue
            out[fields[0]] = fields[1]
    return out
