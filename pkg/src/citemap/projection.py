"""External cluster solution from a global publication classification.

Projection clusters are the intersections of the corpus with one
microfield of a global map, ranked by intersection size. Microfields are
categorized by the share of their global publications falling inside the
corpus (core / boundary / boundary-crossing).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import SchemaError

CATEGORY_CORE = "core"
CATEGORY_BOUNDARY = "boundary"
CATEGORY_BOUNDARY_CROSSING = "boundary_crossing"

DEFAULT_CORE_THRESHOLD = 0.50
DEFAULT_BOUNDARY_THRESHOLD = 0.15

CLASSIFICATION_HEADER = ("pub_id", "microfield_id")
MICROFIELD_META_HEADER = ("microfield_id", "global_size", "label")
PROJECTION_HEADER = (
    "cluster_id", "microfield_id", "member_count", "share", "category",
)


@dataclass
class ClassificationMap:
    """pub_id -> microfield assignment plus optional global field sizes."""

    assignment: dict[str, str]
    microfield_sizes: dict[str, int] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class ProjectionCluster:
    cluster_id: int
    microfield_id: str
    members: frozenset[str]
    share: float | None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class ProjectionResult:
    clusters: list[ProjectionCluster]
    unmapped_ids: frozenset[str]


def load_classification(path, meta_path=None) -> ClassificationMap:
    """Read pub->microfield TSV, optionally with microfield metadata
    (microfield_id, global_size, label)."""
    path = Path(path)
    assignment: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if lineno == 1 and tuple(fields) == CLASSIFICATION_HEADER:
                continue
            if len(fields) != 2:
                raise SchemaError(f"{path}: line {lineno}: expected 2 columns")
            pid, mid = fields[0].strip(), fields[1].strip()
            if not pid or not mid:
                raise SchemaError(f"{path}: line {lineno}: empty pub_id or microfield_id")
            if pid in assignment and assignment[pid] != mid:
                raise SchemaError(
                    f"{path}: line {lineno}: pub {pid!r} mapped to more than one microfield"
                )
            assignment[pid] = mid
    sizes: dict[str, int] = {}
    labels: dict[str, str] = {}
    if meta_path is not None:
        meta_path = Path(meta_path)
        with meta_path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if lineno == 1 and tuple(fields) == MICROFIELD_META_HEADER:
                    continue
                if len(fields) != 3:
                    raise SchemaError(f"{meta_path}: line {lineno}: expected 3 columns")
                try:
                    sizes[fields[0]] = int(fields[1])
                except ValueError:
                    raise SchemaError(
                        f"{meta_path}: line {lineno}: bad global_size {fields[1]!r}"
                    )
                labels[fields[0]] = fields[2]
    return ClassificationMap(assignment=assignment, microfield_sizes=sizes, labels=labels)


def project(
    corpus_ids: Iterable[str],
    cmap: ClassificationMap,
    top_k: int | None = None,
) -> ProjectionResult:
    """Group corpus ids by microfield into ranked projection clusters.

    Clusters are sorted by descending member count (ties: lower microfield
    id), truncated to top_k, and numbered by rank starting at 1. Ids absent
    from the classification are reported separately.
    """
    by_field: dict[str, set[str]] = {}
    unmapped: set[str] = set()
    for pid in corpus_ids:
        mid = cmap.assignment.get(pid)
        if mid is None:
            unmapped.add(pid)
        else:
            by_field.setdefault(mid, set()).add(pid)
    ranked = sorted(by_field.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    if top_k is not None:
        ranked = ranked[:top_k]
    clusters = []
    for rank, (mid, members) in enumerate(ranked, start=1):
        size = cmap.microfield_sizes.get(mid)
        if size is not None and size < len(members):
            raise SchemaError(
                f"microfield {mid!r} global size {size} is smaller than its "
                f"corpus intersection {len(members)}"
            )
        share = len(members) / size if size else None
        clusters.append(
            ProjectionCluster(
                cluster_id=rank,
                microfield_id=mid,
                members=frozenset(members),
                share=share,
            )
        )
    return ProjectionResult(clusters=clusters, unmapped_ids=frozenset(unmapped))


def categorize_microfield(
    share: float,
    core_threshold: float = DEFAULT_CORE_THRESHOLD,
    boundary_threshold: float = DEFAULT_BOUNDARY_THRESHOLD,
) -> str:
    """Classify a microfield by its corpus-overlap share."""
    if not 0.0 <= share <= 1.0:
        raise ValueError(f"share must lie in [0, 1], got {share}")
    if not boundary_threshold < core_threshold:
        raise ValueError("boundary_threshold must be below core_threshold")
    if share >= core_threshold:
        return CATEGORY_CORE
    if share >= boundary_threshold:
        return CATEGORY_BOUNDARY
    return CATEGORY_BOUNDARY_CROSSING


@dataclass
class CoverageCurve:
    """Cumulative corpus share covered by the k largest clusters."""

    points: list[tuple[int, float]]
    total: int

    def smallest_k(self, target: float) -> int | None:
        """Minimal k whose cumulative share reaches ``target``; None when
        the full list cannot reach it."""
        if target <= 0:
            return 0
        for k, share in self.points:
            if share >= target:
                return k
        return None


def coverage_curve(sizes: list[int], total: int) -> CoverageCurve:
    """Cumulative share after each cluster of a descending size list."""
    if any(b > a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("cluster sizes must be sorted descending")
    if total < sum(sizes):
        raise ValueError("total must be at least the sum of cluster sizes")
    if total <= 0:
        raise ValueError("total must be positive")
    points = []
    acc = 0
    for k, size in enumerate(sizes, start=1):
        acc += size
        points.append((k, acc / total))
    return CoverageCurve(points=points, total=total)


def save_projection(
    result: ProjectionResult,
    clusters_path,
    membership_path,
    core_threshold: float = DEFAULT_CORE_THRESHOLD,
    boundary_threshold: float = DEFAULT_BOUNDARY_THRESHOLD,
) -> None:
    """Write the ranked cluster table and the per-document membership."""
    with Path(clusters_path).open("w", encoding="utf-8") as fh:
        fh.write("\t".join(PROJECTION_HEADER) + "\n")
        for cl in result.clusters:
            if cl.share is None:
                share_s, cat = "unknown", "unknown"
            else:
                share_s = f"{cl.share:.6f}"
                cat = categorize_microfield(cl.share, core_threshold, boundary_threshold)
            fh.write(
                f"{cl.cluster_id}\t{cl.microfield_id}\t{cl.size}\t{share_s}\t{cat}\n"
            )
    with Path(membership_path).open("w", encoding="utf-8") as fh:
        fh.write("pub_id\tcluster_id\n")
        for cl in result.clusters:
            for pid in sorted(cl.members):
                fh.write(f"{pid}\t{cl.cluster_id}\n")
