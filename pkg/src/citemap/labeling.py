"""Differential cluster labelling by normalized mutual information.

Each candidate label (an extracted term, or a journal name used as a
single label token) is scored against each cluster by the NMI of the 2x2
contingency between label presence and cluster membership over a document
universe. Higher scores mark labels that characterize the cluster and
differentiate it from the rest; depleted labels (underrepresented in the
cluster) are filtered out because mutual information alone is blind to
direction.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping

from .corpus import PublicationRecord, TermVector
from .errors import SchemaError

UNIVERSE_GIANT_COMPONENT = "giant_component"
UNIVERSE_SOLUTION_MEMBERS = "solution_members"

NORMALIZATION_SQRT = "sqrt"
NORMALIZATION_MIN = "min"

DIRECTION_ENRICHED = "enriched"
DIRECTION_DEPLETED = "depleted"

LABELS_HEADER = (
    "cluster_id", "rank", "label", "nmi", "n11", "n10", "n01", "n00", "mode",
)


@dataclass(frozen=True)
class LabelScore:
    cluster_id: object
    label: str
    nmi: float
    direction: str
    counts: tuple[int, int, int, int]


def contingency(
    cluster_docs: AbstractSet[str],
    label_docs: AbstractSet[str],
    universe: AbstractSet[str],
) -> tuple[int, int, int, int]:
    """2x2 table (n11, n10, n01, n00) of label presence vs cluster
    membership over the universe."""
    if not cluster_docs <= universe:
        raise ValueError("cluster documents must be a subset of the universe")
    if not label_docs <= universe:
        raise ValueError("label documents must be a subset of the universe")
    n11 = len(cluster_docs & label_docs)
    n10 = len(label_docs) - n11
    n01 = len(cluster_docs) - n11
    n00 = len(universe) - n11 - n10 - n01
    return n11, n10, n01, n00


def _entropy2(count: int, total: int) -> float:
    """Binary entropy (bits) of a margin count out of total."""
    h = 0.0
    for part in (count, total - count):
        if part > 0:
            p = part / total
            h -= p * math.log2(p)
    return h


def nmi_score(
    counts: tuple[int, int, int, int], normalization: str = NORMALIZATION_SQRT
) -> tuple[float, str]:
    """NMI of a 2x2 contingency table plus enrichment direction.

    I(T;C) uses log base 2 with the 0*log(0) = 0 convention; the score is
    I normalized by sqrt(H(T)*H(C)) (or min(H(T),H(C)) when requested) and
    defined as 0 when either entropy is 0. Direction is enriched iff the
    label rate inside the cluster exceeds its overall rate.
    """
    n11, n10, n01, n00 = counts
    if min(counts) < 0:
        raise ValueError("contingency counts must be nonnegative")
    total = n11 + n10 + n01 + n00
    if total <= 0:
        raise ValueError("contingency table is empty")
    t1, t0 = n11 + n10, n01 + n00
    c1, c0 = n11 + n01, n10 + n00

    mi = 0.0
    for nij, ti, cj in ((n11, t1, c1), (n10, t1, c0), (n01, t0, c1), (n00, t0, c0)):
        if nij > 0:
            mi += (nij / total) * math.log2(nij * total / (ti * cj))

    h_t = _entropy2(t1, total)
    h_c = _entropy2(c1, total)
    if h_t <= 0.0 or h_c <= 0.0:
        nmi = 0.0
    elif normalization == NORMALIZATION_SQRT:
        nmi = mi / math.sqrt(h_t * h_c)
    elif normalization == NORMALIZATION_MIN:
        nmi = mi / min(h_t, h_c)
    else:
        raise ValueError(f"unknown normalization: {normalization!r}")
    nmi = min(max(nmi, 0.0), 1.0)

    in_rate = n11 / c1 if c1 > 0 else 0.0
    overall = t1 / total
    direction = DIRECTION_ENRICHED if in_rate > overall else DIRECTION_DEPLETED
    return nmi, direction


def rank_labels(
    memberships: Mapping[object, AbstractSet[str]],
    doc_labels: Mapping[str, AbstractSet[str]],
    universe_mode: str = UNIVERSE_GIANT_COMPONENT,
    top_n: int = 10,
    min_doc_frequency: int = 5,
    normalization: str = NORMALIZATION_SQRT,
) -> dict[object, list[LabelScore]]:
    """Ranked enriched labels per cluster.

    Under ``giant_component`` the universe is every document carrying a
    label set (clusters must be contained in it); under
    ``solution_members`` only documents belonging to some cluster are
    scored. Candidates below ``min_doc_frequency`` documents in the
    universe are skipped. Scores are sorted by descending NMI, ties broken
    lexicographically by label, truncated to ``top_n``.
    """
    if universe_mode == UNIVERSE_GIANT_COMPONENT:
        universe = set(doc_labels.keys())
        for cid, members in memberships.items():
            missing = set(members) - universe
            if missing:
                raise SchemaError(
                    f"cluster {cid!r} contains documents without label data, "
                    f"e.g. {sorted(missing)[:3]}"
                )
    elif universe_mode == UNIVERSE_SOLUTION_MEMBERS:
        universe = set()
        for members in memberships.values():
            universe |= set(members)
    else:
        raise ValueError(f"unknown universe mode: {universe_mode!r}")
    if not universe:
        raise SchemaError("label universe is empty")

    total = len(universe)
    doc_frequency: Counter[str] = Counter()
    for doc in universe:
        for label in doc_labels.get(doc, ()):
            doc_frequency[label] += 1

    results: dict[object, list[LabelScore]] = {}
    for cid in memberships:
        members = set(memberships[cid]) & universe
        csize = len(members)
        in_cluster: Counter[str] = Counter()
        for doc in members:
            for label in doc_labels.get(doc, ()):
                in_cluster[label] += 1
        scored: list[LabelScore] = []
        for label, n11 in in_cluster.items():
            df = doc_frequency[label]
            if df < min_doc_frequency:
                continue
            counts = (n11, df - n11, csize - n11, total - df - csize + n11)
            nmi, direction = nmi_score(counts, normalization)
            if direction != DIRECTION_ENRICHED:
                continue
            scored.append(LabelScore(cid, label, nmi, direction, counts))
        scored.sort(key=lambda s: (-s.nmi, s.label))
        results[cid] = scored[:top_n]
    return results


def term_vector_labels(term_vectors: Iterable[TermVector]) -> dict[str, frozenset[str]]:
    return {tv.doc_id: tv.terms for tv in term_vectors}


def journal_labels(records: Iterable[PublicationRecord]) -> dict[str, frozenset[str]]:
    """Each document's journal as its single label token (empty journals
    yield an empty label set)."""
    out: dict[str, frozenset[str]] = {}
    for rec in records:
        journal = " ".join(rec.journal.lower().split())
        out[rec.id] = frozenset({journal}) if journal else frozenset()
    return out


def save_labels(
    ranked: Mapping[object, list[LabelScore]], path, mode: str
) -> None:
    """Write ranked label scores as TSV; clusters ordered by id."""
    def _key(cid):
        try:
            return (0, int(cid))
        except (TypeError, ValueError):
            return (1, str(cid))

    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("\t".join(LABELS_HEADER) + "\n")
        for cid in sorted(ranked.keys(), key=_key):
            for rank, score in enumerate(ranked[cid], start=1):
                n11, n10, n01, n00 = score.counts
                fh.write(
                    f"{cid}\t{rank}\t{score.label}\t{score.nmi:.12g}\t"
                    f"{n11}\t{n10}\t{n01}\t{n00}\t{mode}\n"
                )
