"""citemap: citation-network topic mapping toolkit.

Builds weighted direct citation networks from publication records,
clusters them with a constant-Potts quality function and a three-phase
local-move/refine/aggregate engine, projects the corpus onto an external
global classification, labels clusters by normalized mutual information,
and compares cluster solutions via affinity networks and flow matrices.
"""

from .analysis import (
    AffinityEdge,
    AffinityNetwork,
    FlowMatrix,
    affinity_network,
    flow_matrix,
    partition_similarity,
)
from .corpus import (
    CorpusFilter,
    PublicationRecord,
    TermVector,
    default_exclusions,
    default_stopwords,
    extract_terms,
    filter_corpus,
    ingest_corpus,
    load_term_vectors,
)
from .errors import CitemapError, InternalError, MissingInputError, SchemaError
from .graph import (
    CitationGraph,
    ComponentReport,
    SymmetricAdjacency,
    build_graph,
    giant_component,
    undirected_view,
)
from .labeling import LabelScore, contingency, nmi_score, rank_labels
from .leiden import (
    ClusterSolution,
    CpmParams,
    Partition,
    aggregate,
    cluster,
    connectivity_check,
    cpm_quality,
    local_move_phase,
    move_gain,
    refine_phase,
)
from .projection import (
    ClassificationMap,
    ProjectionCluster,
    categorize_microfield,
    coverage_curve,
    project,
)
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "AffinityEdge",
    "AffinityNetwork",
    "CitationGraph",
    "CitemapError",
    "ClassificationMap",
    "ClusterSolution",
    "ComponentReport",
    "CorpusFilter",
    "CpmParams",
    "FlowMatrix",
    "InternalError",
    "LabelScore",
    "MissingInputError",
    "Partition",
    "ProjectionCluster",
    "PublicationRecord",
    "SchemaError",
    "SplitMix64",
    "SymmetricAdjacency",
    "TermVector",
    "affinity_network",
    "aggregate",
    "build_graph",
    "categorize_microfield",
    "cluster",
    "connectivity_check",
    "contingency",
    "coverage_curve",
    "cpm_quality",
    "default_exclusions",
    "default_stopwords",
    "extract_terms",
    "filter_corpus",
    "flow_matrix",
    "giant_component",
    "ingest_corpus",
    "load_term_vectors",
    "local_move_phase",
    "move_gain",
    "nmi_score",
    "partition_similarity",
    "project",
    "rank_labels",
    "refine_phase",
    "undirected_view",
]
