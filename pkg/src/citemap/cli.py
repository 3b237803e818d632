"""Command-line pipeline driver.

Every subcommand wraps one stage of the mapping pipeline and writes its
artifact files plus a manifest (tool version, resolved config, config
hash, input/output checksums). Outputs contain no wall-clock values, so
re-running a command with identical inputs and seed reproduces
byte-identical files; timings go to stdout only.

Exit codes: 2 missing input / usage error, 3 schema violation,
4 internal invariant breach.
"""

from __future__ import annotations

import functools
import hashlib
import json
import secrets
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import click
import numpy as np

from . import __version__, analysis, corpus, graph as graphmod, labeling, leiden, projection
from .errors import InternalError, MissingInputError, SchemaError

PRESETS = {
    "coarse": {"gamma": 2e-5, "min_cluster_size": 400},
    "fine": {"gamma": 8e-5, "min_cluster_size": 350},
}

OUT_DIR_ENVVAR = "CITEMAP_OUT"


@dataclass
class RunConfig:
    """Resolved configuration of a full pipeline run."""

    publications: str = ""
    format: str = "jsonl"
    classification: str = ""
    microfield_meta: str | None = None
    terms: str | None = None
    stopwords: str | None = None
    exclusions: str | None = None
    year_min: int = 2000
    year_max: int = 2017
    doc_types: tuple[str, ...] = ("article", "letter", "review")
    weighting: str = "normalized_out"
    gamma: float = 8e-5
    iterations: int = 100
    random_starts: int = 10
    seed: int = 0
    theta: float = 0.01
    min_cluster_size: int = 350
    core_threshold: float = 0.50
    boundary_threshold: float = 0.15
    top_k: int | None = None
    label_universe: str = labeling.UNIVERSE_GIANT_COMPONENT
    label_top_n: int = 10
    min_doc_frequency: int = 5
    max_ngram: int = 3
    exclusion_substrings: bool = False
    affinity_threshold: float = 1.0
    affinity_min_z: float | None = None
    coverage_target: float = 0.9

    def to_dict(self) -> dict:
        d = asdict(self)
        d["doc_types"] = list(self.doc_types)
        return d


def load_config(path: Path) -> RunConfig:
    """Read a JSON config file; relative paths resolve against its parent."""
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg})")
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(obj) - known - {"out_dir"}
    if unknown:
        raise SchemaError(f"{path}: unknown config keys: {sorted(unknown)}")
    obj.pop("out_dir", None)
    if "doc_types" in obj:
        obj["doc_types"] = tuple(obj["doc_types"])
    cfg = RunConfig(**obj)
    base = path.parent
    for key in ("publications", "classification", "microfield_meta", "terms",
                "stopwords", "exclusions"):
        value = getattr(cfg, key)
        if value:
            cfg = replace(cfg, **{key: str((base / value).resolve())})
    return cfg


# --- manifest helpers ---

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _file_entry(path: Path, rel_to: Path | None = None) -> dict:
    shown = str(path.relative_to(rel_to)) if rel_to else str(path)
    return {"path": shown, "sha256": _sha256(path), "bytes": path.stat().st_size}


def write_manifest(out_dir: Path, command: str, config: dict,
                   inputs: list[Path], outputs: list[Path]) -> Path:
    config_json = json.dumps(config, sort_keys=True, separators=(",", ":"))
    manifest = {
        "tool": "citemap",
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(config_json.encode("utf-8")).hexdigest(),
        "inputs": [_file_entry(Path(p)) for p in inputs],
        "outputs": [_file_entry(Path(p), rel_to=out_dir) for p in sorted(outputs)],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _mapped_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        started = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except MissingInputError as exc:
            click.echo(f"error (missing input): {exc}", err=True)
            sys.exit(2)
        except (SchemaError, ValueError, TypeError) as exc:
            click.echo(f"error (schema): {exc}", err=True)
            sys.exit(3)
        except (InternalError, AssertionError) as exc:
            click.echo(f"error (internal): {exc}", err=True)
            sys.exit(4)
        click.echo(f"done in {time.perf_counter() - started:.2f}s")
        return result
    return wrapper


def _resolve_seed(seed: str) -> int:
    """'random' draws a fresh seed from system entropy (recorded in the
    manifest); anything else must be a nonnegative integer."""
    if seed == "random":
        drawn = secrets.randbits(63)
        click.echo(f"drew random seed {drawn}")
        return drawn
    try:
        value = int(seed)
    except ValueError:
        raise SchemaError(f"seed must be an integer or 'random', got {seed!r}")
    if value < 0:
        raise SchemaError("seed must be nonnegative")
    return value


def _out_dir(value: str | None) -> Path:
    if value is None:
        raise MissingInputError(
            f"no output directory given (use --out or ${OUT_DIR_ENVVAR})"
        )
    path = Path(value)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: str | None, what: str) -> Path:
    if not path:
        raise MissingInputError(f"{what} is required")
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"{what} not found: {p}")
    return p


def _load_wordlist_or_default(path: str | None, default) -> frozenset[str]:
    if path:
        return corpus.load_wordlist(_require(path, "word list"))
    return default()


# --- stage helpers shared by subcommands and the pipeline ---

def _stage_ingest(cfg: RunConfig, apply_filter: bool = True):
    pubs = _require(cfg.publications, "publications file")
    records, stats = corpus.ingest_corpus(pubs, cfg.format)
    dropped = 0
    if apply_filter:
        cfilter = corpus.CorpusFilter(
            year_min=cfg.year_min,
            year_max=cfg.year_max,
            allowed_doc_types=frozenset(cfg.doc_types),
        )
        records, dropped = corpus.filter_corpus(records, cfilter)
    return records, stats, dropped


def _stage_graph(records, weighting: str, giant: bool = True):
    g = graphmod.build_graph(records, weighting)
    if g.n == 0:
        raise SchemaError("corpus is empty; no graph to build")
    report = None
    if giant:
        g, report = graphmod.giant_component(g)
    return g, report


def _cluster_metadata(solution: leiden.ClusterSolution) -> dict:
    return {
        "params": solution.params.to_dict(),
        "start_qualities": solution.start_qualities,
        "start_iterations": solution.start_iterations,
        "best_start": solution.best_start,
        "best_quality": solution.partition.quality,
        "cluster_count": solution.partition.cluster_count,
        "cluster_sizes": [int(s) for s in solution.partition.cluster_sizes],
        "discarded_nodes": int(len(solution.discarded_nodes)),
        "discarded_share": solution.discarded_share,
        "run_log": solution.run_log,
    }


def _membership_to_assignment(g, membership: dict[str, str]) -> np.ndarray:
    assignment = np.full(g.n, -1, dtype=np.int64)
    for pid, label in membership.items():
        idx = g.index.get(pid)
        if idx is not None:
            try:
                assignment[idx] = int(label)
            except ValueError:
                raise SchemaError(f"cluster id {label!r} is not an integer")
    return assignment


# --- CLI ---

@click.group(name="citemap")
@click.version_option(version=__version__)
def cli():
    """Citation-network topic mapping toolkit."""


out_option = click.option(
    "--out", "out", envvar=OUT_DIR_ENVVAR, default=None,
    help=f"Output directory (or ${OUT_DIR_ENVVAR}).",
)


@cli.command("ingest")
@click.option("--publications", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "tsv"]), default="jsonl")
@click.option("--year-min", type=int, default=2000, show_default=True)
@click.option("--year-max", type=int, default=2017, show_default=True)
@click.option("--doc-types", default="article,letter,review", show_default=True)
@click.option("--no-filter", is_flag=True, help="Keep all records.")
@out_option
@_mapped_errors
def cmd_ingest(publications, fmt, year_min, year_max, doc_types, no_filter, out):
    """Read publication records, filter, and write a normalized corpus."""
    out_dir = _out_dir(out)
    cfg = RunConfig(
        publications=str(Path(publications).resolve()), format=fmt,
        year_min=year_min, year_max=year_max,
        doc_types=tuple(t.strip() for t in doc_types.split(",") if t.strip()),
    )
    records, stats, dropped = _stage_ingest(cfg, apply_filter=not no_filter)
    corpus_path = out_dir / "corpus.jsonl"
    corpus.save_corpus(records, corpus_path)
    summary_path = out_dir / "ingest_summary.json"
    _dump_json(summary_path, {
        **stats.to_dict(), "kept": len(records), "dropped_by_filter": dropped,
        "filtered": not no_filter,
    })
    write_manifest(out_dir, "ingest", {**cfg.to_dict(), "no_filter": no_filter},
                   [Path(publications)], [corpus_path, summary_path])
    click.echo(f"ingested {stats.lines} lines -> {len(records)} records "
               f"({stats.duplicate_ids} duplicates, {dropped} filtered out)")


@cli.command("graph")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--weighting", type=click.Choice(list(graphmod.WEIGHTING_MODES)),
              default="normalized_out", show_default=True)
@click.option("--giant/--full", "giant", default=True,
              help="Restrict to the giant weakly connected component.")
@out_option
@_mapped_errors
def cmd_graph(corpus_path, weighting, giant, out):
    """Build the weighted direct citation network."""
    out_dir = _out_dir(out)
    records, _ = corpus.ingest_corpus(corpus_path, "jsonl")
    g, report = _stage_graph(records, weighting, giant)
    nodes_path, edges_path = out_dir / "nodes.tsv", out_dir / "edges.tsv"
    summary_path = out_dir / "graph_summary.json"
    graphmod.save_graph(g, nodes_path, edges_path, summary_path, report)
    write_manifest(out_dir, "graph",
                   {"corpus": str(Path(corpus_path).resolve()),
                    "weighting": weighting, "giant": giant},
                   [Path(corpus_path)], [nodes_path, edges_path, summary_path])
    click.echo(f"graph: {g.n} nodes, {g.edge_count} edges"
               + (f" (giant of {report.component_count} components)" if report else ""))


@cli.command("cluster")
@click.option("--nodes", "nodes_path", required=True, type=click.Path(exists=True))
@click.option("--edges", "edges_path", required=True, type=click.Path(exists=True))
@click.option("--gamma", type=float, default=None, help="Resolution parameter.")
@click.option("--min-size", "min_size", type=int, default=None,
              help="Minimum retained cluster size.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Named (gamma, min-size) preset; explicit flags override.")
@click.option("--iterations", type=int, default=100, show_default=True)
@click.option("--starts", type=int, default=10, show_default=True)
@click.option("--seed", default="0", show_default=True,
              help="Integer seed or 'random'.")
@click.option("--theta", type=float, default=0.01, show_default=True)
@out_option
@_mapped_errors
def cmd_cluster(nodes_path, edges_path, gamma, min_size, preset, iterations,
                starts, seed, theta, out):
    """Cluster a citation graph and write the partition."""
    out_dir = _out_dir(out)
    preset_vals = PRESETS.get(preset, {})
    gamma = gamma if gamma is not None else preset_vals.get("gamma")
    min_size = min_size if min_size is not None else preset_vals.get("min_cluster_size", 1)
    if gamma is None:
        raise SchemaError("either --gamma or --preset must be given")
    g = graphmod.load_graph(nodes_path, edges_path)
    params = leiden.CpmParams(
        gamma=gamma, iterations=iterations, random_starts=starts,
        seed=_resolve_seed(seed), theta=theta, min_cluster_size=min_size,
    )
    solution = leiden.cluster(g, params)
    partition_path = out_dir / "partition.tsv"
    leiden.save_partition(g.ids, solution.partition.assignment, partition_path)
    metadata_path = out_dir / "cluster_metadata.json"
    _dump_json(metadata_path, _cluster_metadata(solution))
    write_manifest(out_dir, "cluster",
                   {"nodes": str(Path(nodes_path).resolve()),
                    "edges": str(Path(edges_path).resolve()),
                    **solution.params.to_dict()},
                   [Path(nodes_path), Path(edges_path)],
                   [partition_path, metadata_path])
    click.echo(f"clusters: {solution.partition.cluster_count} retained, "
               f"discarded share {solution.discarded_share:.4f}, "
               f"quality {solution.partition.quality:.6f}")


@cli.command("project")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None,
              help="Corpus JSONL whose ids form the projected set.")
@click.option("--nodes", "nodes_path", type=click.Path(exists=True), default=None,
              help="Graph node TSV whose ids form the projected set.")
@click.option("--classification", required=True, type=click.Path(exists=True))
@click.option("--microfield-meta", type=click.Path(exists=True), default=None)
@click.option("--top-k", type=int, default=None)
@click.option("--core-threshold", type=float, default=0.50, show_default=True)
@click.option("--boundary-threshold", type=float, default=0.15, show_default=True)
@out_option
@_mapped_errors
def cmd_project(corpus_path, nodes_path, classification, microfield_meta, top_k,
                core_threshold, boundary_threshold, out):
    """Project corpus ids onto an external classification."""
    out_dir = _out_dir(out)
    if (corpus_path is None) == (nodes_path is None):
        raise SchemaError("exactly one of --corpus / --nodes must be given")
    if corpus_path:
        records, _ = corpus.ingest_corpus(corpus_path, "jsonl")
        ids = [r.id for r in records]
        id_input = Path(corpus_path)
    else:
        ids = [fields[0] for _, fields in
               graphmod.tsv_rows(nodes_path, 2, graphmod.NODES_HEADER)]
        id_input = Path(nodes_path)
    cmap = projection.load_classification(classification, microfield_meta)
    result = projection.project(ids, cmap, top_k)
    clusters_path = out_dir / "projection_clusters.tsv"
    membership_path = out_dir / "projection_membership.tsv"
    projection.save_projection(result, clusters_path, membership_path,
                               core_threshold, boundary_threshold)
    summary_path = out_dir / "projection_summary.json"
    _dump_json(summary_path, {
        "corpus_size": len(ids),
        "clusters": len(result.clusters),
        "mapped": sum(c.size for c in result.clusters),
        "unmapped": len(result.unmapped_ids),
    })
    inputs = [id_input, Path(classification)]
    if microfield_meta:
        inputs.append(Path(microfield_meta))
    write_manifest(out_dir, "project",
                   {"classification": str(Path(classification).resolve()),
                    "top_k": top_k, "core_threshold": core_threshold,
                    "boundary_threshold": boundary_threshold},
                   inputs, [clusters_path, membership_path, summary_path])
    click.echo(f"projection: {len(result.clusters)} clusters, "
               f"{len(result.unmapped_ids)} unmapped publications")


@cli.command("label")
@click.option("--partition", "partition_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--terms", "terms_path", type=click.Path(exists=True), default=None,
              help="Externally produced (doc_id, term) TSV; skips extraction.")
@click.option("--mode", type=click.Choice(["terms", "journals"]), default="terms",
              show_default=True)
@click.option("--universe", type=click.Choice(
    [labeling.UNIVERSE_GIANT_COMPONENT, labeling.UNIVERSE_SOLUTION_MEMBERS]),
    default=labeling.UNIVERSE_GIANT_COMPONENT, show_default=True)
@click.option("--top-n", type=int, default=10, show_default=True)
@click.option("--min-df", type=int, default=5, show_default=True)
@click.option("--max-ngram", type=int, default=3, show_default=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--exclusions", "exclusions_path", type=click.Path(exists=True), default=None)
@click.option("--exclusion-substrings", is_flag=True,
              help="Also drop terms containing an exclusion phrase.")
@out_option
@_mapped_errors
def cmd_label(partition_path, corpus_path, terms_path, mode, universe, top_n,
              min_df, max_ngram, stopwords_path, exclusions_path,
              exclusion_substrings, out):
    """Rank cluster label candidates by normalized mutual information."""
    out_dir = _out_dir(out)
    records, _ = corpus.ingest_corpus(corpus_path, "jsonl")
    membership = leiden.load_membership(partition_path)
    memberships: dict[str, set[str]] = {}
    for pid, cid in membership.items():
        memberships.setdefault(cid, set()).add(pid)
    if not memberships:
        raise SchemaError(f"{partition_path}: no assigned documents")

    doc_labels = _doc_labels(records, mode, terms_path, exclusions_path,
                             stopwords_path, max_ngram, exclusion_substrings)
    ranked = labeling.rank_labels(memberships, doc_labels, universe, top_n, min_df)
    labels_path = out_dir / "labels.tsv"
    labeling.save_labels(ranked, labels_path, mode)
    inputs = [Path(partition_path), Path(corpus_path)]
    for p in (terms_path, stopwords_path, exclusions_path):
        if p:
            inputs.append(Path(p))
    write_manifest(out_dir, "label",
                   {"mode": mode, "universe": universe, "top_n": top_n,
                    "min_doc_frequency": min_df, "max_ngram": max_ngram,
                    "normalization": labeling.NORMALIZATION_SQRT},
                   inputs, [labels_path])
    click.echo(f"labelled {len(ranked)} clusters ({mode})")


def _doc_labels(records, mode, terms_path, exclusions_path, stopwords_path,
                max_ngram, match_substrings=False):
    """Document -> label-token sets for the configured labelling mode."""
    if mode == "journals":
        return labeling.journal_labels(records)
    exclusions = _load_wordlist_or_default(exclusions_path, corpus.default_exclusions)
    if terms_path:
        vectors = corpus.load_term_vectors(terms_path, exclusions, match_substrings)
        doc_labels = labeling.term_vector_labels(vectors)
        # documents without term rows still belong to the universe
        for rec in records:
            doc_labels.setdefault(rec.id, frozenset())
        return doc_labels
    stopwords = _load_wordlist_or_default(stopwords_path, corpus.default_stopwords)
    vectors = corpus.extract_corpus_terms(records, stopwords, max_ngram, exclusions,
                                          match_substrings)
    return labeling.term_vector_labels(vectors)


@cli.command("affinity")
@click.option("--nodes", "nodes_path", required=True, type=click.Path(exists=True))
@click.option("--edges", "edges_path", required=True, type=click.Path(exists=True))
@click.option("--partition", "partition_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=1.0, show_default=True,
              help="Minimum observed/expected ratio.")
@click.option("--min-z", type=float, default=None,
              help="Optional binomial z-score significance filter.")
@click.option("--counts", "use_counts", is_flag=True,
              help="Use raw citation counts instead of weights.")
@out_option
@_mapped_errors
def cmd_affinity(nodes_path, edges_path, partition_path, threshold, min_z,
                 use_counts, out):
    """Topic affinity network of a cluster solution."""
    out_dir = _out_dir(out)
    g = graphmod.load_graph(nodes_path, edges_path)
    membership = leiden.load_membership(partition_path)
    assignment = _membership_to_assignment(g, membership)
    network = analysis.affinity_network(
        g, assignment, threshold, min_z, use_weights=not use_counts
    )
    json_path = out_dir / "affinity.json"
    graphml_path = out_dir / "affinity.graphml"
    dot_path = out_dir / "affinity.dot"
    analysis.save_affinity(network, json_path, graphml_path, dot_path)
    write_manifest(out_dir, "affinity",
                   {"threshold": threshold, "min_z": min_z,
                    "use_weights": not use_counts},
                   [Path(nodes_path), Path(edges_path), Path(partition_path)],
                   [json_path, graphml_path, dot_path])
    click.echo(f"affinity network: {len(network.nodes)} clusters, "
               f"{len(network.edges)} links")


@cli.command("compare")
@click.option("--solution-a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--solution-b", "b_path", required=True, type=click.Path(exists=True))
@out_option
@_mapped_errors
def cmd_compare(a_path, b_path, out):
    """Flow matrix and similarity of two membership files."""
    out_dir = _out_dir(out)
    a = leiden.load_membership(a_path)
    b = leiden.load_membership(b_path)
    flow = analysis.flow_matrix(a, b)
    nmi, ari = analysis.partition_similarity(flow)
    flow_path = out_dir / "flow.json"
    analysis.save_flow(flow, flow_path)
    similarity_path = out_dir / "similarity.json"
    analysis.save_similarity(nmi, ari, flow.shared, similarity_path)
    write_manifest(out_dir, "compare", {},
                   [Path(a_path), Path(b_path)], [flow_path, similarity_path])
    click.echo(f"compared solutions: nmi={nmi:.4f} ari={ari:.4f} "
               f"({flow.shared} shared documents)")


@cli.command("coverage")
@click.option("--clusters", "clusters_path", required=True, type=click.Path(exists=True),
              help="Projection cluster TSV (uses the member_count column).")
@click.option("--total", type=int, required=True,
              help="Corpus size the shares are computed against.")
@click.option("--target", type=float, default=0.9, show_default=True)
@out_option
@_mapped_errors
def cmd_coverage(clusters_path, total, target, out):
    """Cumulative coverage curve over ranked cluster sizes."""
    out_dir = _out_dir(out)
    sizes = []
    for lineno, fields in graphmod.tsv_rows(
        clusters_path, len(projection.PROJECTION_HEADER), projection.PROJECTION_HEADER
    ):
        try:
            sizes.append(int(fields[2]))
        except ValueError:
            raise SchemaError(f"{clusters_path}: line {lineno}: bad member_count")
    sizes.sort(reverse=True)
    curve = projection.coverage_curve(sizes, total)
    smallest = curve.smallest_k(target)
    coverage_path = out_dir / "coverage.json"
    _dump_json(coverage_path, {
        "points": [[k, share] for k, share in curve.points],
        "total": total,
        "target": target,
        "smallest_k": smallest,
        "reachable": smallest is not None,
    })
    write_manifest(out_dir, "coverage", {"total": total, "target": target},
                   [Path(clusters_path)], [coverage_path])
    click.echo(f"coverage target {target}: smallest_k="
               f"{smallest if smallest is not None else 'unreachable'}")


@cli.command("pipeline")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--publications", type=click.Path(exists=True), default=None)
@click.option("--classification", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--min-size", type=int, default=None)
@click.option("--starts", type=int, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--seed", default=None, help="Integer seed or 'random'.")
@click.option("--top-k", type=int, default=None)
@out_option
@_mapped_errors
def cmd_pipeline(config_path, publications, classification, preset, gamma,
                 min_size, starts, iterations, seed, top_k, out):
    """Full run: ingest, graph, cluster + project, label, affinity,
    compare, coverage."""
    out_dir = _out_dir(out)
    cfg = load_config(Path(config_path)) if config_path else RunConfig()
    overrides: dict = {}
    if preset:
        overrides.update(PRESETS[preset])
    if publications:
        overrides["publications"] = str(Path(publications).resolve())
    if classification:
        overrides["classification"] = str(Path(classification).resolve())
    if gamma is not None:
        overrides["gamma"] = gamma
    if min_size is not None:
        overrides["min_cluster_size"] = min_size
    if starts is not None:
        overrides["random_starts"] = starts
    if iterations is not None:
        overrides["iterations"] = iterations
    if seed is not None:
        overrides["seed"] = _resolve_seed(seed)
    if top_k is not None:
        overrides["top_k"] = top_k
    cfg = replace(cfg, **overrides)
    run_pipeline(cfg, out_dir)


def run_pipeline(cfg: RunConfig, out_dir: Path) -> dict:
    """Execute the full processing chain, short-circuiting on first error.

    Returns the run report (also written to run_report.json).
    """
    outputs: list[Path] = []
    report: dict = {}

    def _emit(path: Path):
        outputs.append(path)
        return path

    # ingest + filter
    records, stats, dropped = _stage_ingest(cfg)
    report["records_retrieved"] = stats.lines
    report["duplicate_ids"] = stats.duplicate_ids
    report["records_kept"] = len(records)
    report["dropped_by_filter"] = dropped
    corpus_path = _emit(out_dir / "corpus.jsonl")
    corpus.save_corpus(records, corpus_path)
    click.echo(f"[corpus] {stats.lines} lines -> {len(records)} records")

    # citation graph + giant component
    g, comp_report = _stage_graph(records, cfg.weighting, giant=True)
    assert comp_report is not None
    report["graph"] = {
        "component_count": comp_report.component_count,
        "giant_nodes": comp_report.giant_size,
        "giant_edges": comp_report.giant_edge_count,
        "dropped_nodes": comp_report.dropped_nodes,
        "unresolved_references": g.stats.unresolved_references if g.stats else None,
    }
    graphmod.save_graph(g, _emit(out_dir / "nodes.tsv"), _emit(out_dir / "edges.tsv"),
                        _emit(out_dir / "graph_summary.json"), comp_report)
    click.echo(f"[graph] giant component: {g.n} nodes, {g.edge_count} edges")

    # internal solution: clustering
    params = leiden.CpmParams(
        gamma=cfg.gamma, iterations=cfg.iterations, random_starts=cfg.random_starts,
        seed=cfg.seed, theta=cfg.theta, min_cluster_size=cfg.min_cluster_size,
    )
    solution = leiden.cluster(g, params)
    partition_path = _emit(out_dir / "partition.tsv")
    leiden.save_partition(g.ids, solution.partition.assignment, partition_path)
    _dump_json(_emit(out_dir / "cluster_metadata.json"), _cluster_metadata(solution))
    report["clustering"] = {
        "clusters": solution.partition.cluster_count,
        "discarded_nodes": int(len(solution.discarded_nodes)),
        "discarded_share": solution.discarded_share,
        "quality": solution.partition.quality,
    }
    click.echo(f"[cluster] {solution.partition.cluster_count} clusters, "
               f"discarded share {solution.discarded_share:.4f}")

    # external solution: projection
    cmap = projection.load_classification(
        _require(cfg.classification, "classification file"),
        _require(cfg.microfield_meta, "microfield metadata") if cfg.microfield_meta else None,
    )
    result = projection.project(g.ids, cmap, cfg.top_k)
    projection.save_projection(
        result, _emit(out_dir / "projection_clusters.tsv"),
        _emit(out_dir / "projection_membership.tsv"),
        cfg.core_threshold, cfg.boundary_threshold,
    )
    report["projection"] = {
        "clusters": len(result.clusters),
        "mapped": sum(c.size for c in result.clusters),
        "unmapped": len(result.unmapped_ids),
    }
    click.echo(f"[project] {len(result.clusters)} projection clusters, "
               f"{len(result.unmapped_ids)} unmapped")

    # labelling
    stopwords = _load_wordlist_or_default(cfg.stopwords, corpus.default_stopwords)
    exclusions = _load_wordlist_or_default(cfg.exclusions, corpus.default_exclusions)
    if cfg.terms:
        vectors = corpus.load_term_vectors(_require(cfg.terms, "term file"),
                                           exclusions, cfg.exclusion_substrings)
        doc_terms = labeling.term_vector_labels(vectors)
        for rec in records:
            doc_terms.setdefault(rec.id, frozenset())
    else:
        doc_terms = labeling.term_vector_labels(
            corpus.extract_corpus_terms(records, stopwords, cfg.max_ngram,
                                        exclusions, cfg.exclusion_substrings)
        )
    giant_ids = set(g.ids)
    giant_terms = {pid: doc_terms.get(pid, frozenset()) for pid in giant_ids}
    journal_by_doc = labeling.journal_labels(records)
    giant_journals = {pid: journal_by_doc.get(pid, frozenset()) for pid in giant_ids}

    internal_members: dict[object, set[str]] = {}
    for idx, cid in enumerate(solution.partition.assignment):
        if cid >= 0:
            internal_members.setdefault(int(cid), set()).add(g.ids[idx])
    external_members = {
        cl.cluster_id: set(cl.members) for cl in result.clusters if cl.members
    }

    ranked = labeling.rank_labels(internal_members, giant_terms, cfg.label_universe,
                                  cfg.label_top_n, cfg.min_doc_frequency)
    labeling.save_labels(ranked, _emit(out_dir / "labels_internal_terms.tsv"), "term")
    ranked_j = labeling.rank_labels(internal_members, giant_journals,
                                    cfg.label_universe, cfg.label_top_n, 1)
    labeling.save_labels(ranked_j, _emit(out_dir / "labels_internal_journals.tsv"),
                         "journal")
    if external_members:
        ranked_ext = labeling.rank_labels(
            external_members, giant_terms, labeling.UNIVERSE_SOLUTION_MEMBERS,
            cfg.label_top_n, cfg.min_doc_frequency,
        )
        labeling.save_labels(ranked_ext, _emit(out_dir / "labels_external_terms.tsv"),
                             "term")
    click.echo("[label] wrote NMI-ranked label tables")

    # affinity networks for both solutions
    internal_net = analysis.affinity_network(
        g, solution.partition.assignment, cfg.affinity_threshold, cfg.affinity_min_z
    )
    analysis.save_affinity(internal_net, _emit(out_dir / "affinity_internal.json"),
                           _emit(out_dir / "affinity_internal.graphml"),
                           _emit(out_dir / "affinity_internal.dot"))
    ext_assignment = np.full(g.n, -1, dtype=np.int64)
    for cl in result.clusters:
        for pid in cl.members:
            idx = g.index.get(pid)
            if idx is not None:
                ext_assignment[idx] = cl.cluster_id
    external_net = analysis.affinity_network(
        g, ext_assignment, cfg.affinity_threshold, cfg.affinity_min_z
    )
    analysis.save_affinity(external_net, _emit(out_dir / "affinity_external.json"),
                           _emit(out_dir / "affinity_external.graphml"),
                           _emit(out_dir / "affinity_external.dot"))
    click.echo(f"[affinity] internal {len(internal_net.edges)} links, "
               f"external {len(external_net.edges)} links")

    # cross-solution comparison
    internal_membership = {
        g.ids[i]: str(int(c))
        for i, c in enumerate(solution.partition.assignment) if c >= 0
    }
    external_membership: dict[str, str] = {}
    for cl in result.clusters:
        for pid in cl.members:
            external_membership[pid] = str(cl.cluster_id)
    flow = analysis.flow_matrix(internal_membership, external_membership)
    analysis.save_flow(flow, _emit(out_dir / "flow_internal_external.json"))
    nmi, ari = analysis.partition_similarity(flow)
    analysis.save_similarity(nmi, ari, flow.shared,
                             _emit(out_dir / "similarity_internal_external.json"))
    report["comparison"] = {"nmi": nmi, "adjusted_rand_index": ari,
                            "shared_documents": flow.shared}
    click.echo(f"[compare] nmi={nmi:.4f} ari={ari:.4f}")

    # coverage of the external solution over the giant component
    sizes = sorted((c.size for c in result.clusters), reverse=True)
    curve = projection.coverage_curve(sizes, g.n)
    smallest = curve.smallest_k(cfg.coverage_target)
    _dump_json(_emit(out_dir / "coverage_external.json"), {
        "points": [[k, share] for k, share in curve.points],
        "total": g.n,
        "target": cfg.coverage_target,
        "smallest_k": smallest,
        "reachable": smallest is not None,
    })
    report["coverage"] = {"target": cfg.coverage_target, "smallest_k": smallest}

    report_path = _emit(out_dir / "run_report.json")
    _dump_json(report_path, report)

    inputs = [Path(cfg.publications), Path(cfg.classification)]
    for extra in (cfg.microfield_meta, cfg.terms, cfg.stopwords, cfg.exclusions):
        if extra:
            inputs.append(Path(extra))
    write_manifest(out_dir, "pipeline", cfg.to_dict(), inputs, outputs)
    click.echo(f"[pipeline] wrote {len(outputs) + 1} files to {out_dir}")
    return report


def main(argv=None):
    return cli(args=argv, standalone_mode=True)


if __name__ == "__main__":
    main()
