import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from citemap.cli import cli

FIXTURE = Path(__file__).resolve().parent.parent / "data" / "synthetic"


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def tree_hashes(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def staged(tmp_path_factory, runner):
    """Chained subcommand outputs over the bundled synthetic corpus."""
    base = tmp_path_factory.mktemp("staged")
    ingest_dir = base / "ingest"
    run_ok(runner, ["ingest", "--publications", str(FIXTURE / "publications.jsonl"),
                    "--out", str(ingest_dir)])
    graph_dir = base / "graph"
    run_ok(runner, ["graph", "--corpus", str(ingest_dir / "corpus.jsonl"),
                    "--out", str(graph_dir)])
    cluster_dir = base / "cluster"
    run_ok(runner, ["cluster", "--nodes", str(graph_dir / "nodes.tsv"),
                    "--edges", str(graph_dir / "edges.tsv"),
                    "--gamma", "0.002", "--min-size", "20", "--seed", "42",
                    "--out", str(cluster_dir)])
    project_dir = base / "project"
    run_ok(runner, ["project", "--nodes", str(graph_dir / "nodes.tsv"),
                    "--classification", str(FIXTURE / "classification.tsv"),
                    "--microfield-meta", str(FIXTURE / "microfields.tsv"),
                    "--out", str(project_dir)])
    return base


class TestSubcommands:
    def test_ingest_outputs(self, staged):
        summary = json.loads((staged / "ingest" / "ingest_summary.json").read_text())
        assert summary["duplicate_ids"] == 2
        assert summary["kept"] > 0
        assert (staged / "ingest" / "corpus.jsonl").exists()

    def test_graph_outputs(self, staged):
        summary = json.loads((staged / "graph" / "graph_summary.json").read_text())
        assert summary["nodes"] > 500
        assert summary["component_report"]["giant_size"] == summary["nodes"]

    def test_cluster_outputs(self, staged):
        meta = json.loads((staged / "cluster" / "cluster_metadata.json").read_text())
        assert meta["cluster_count"] >= 2
        assert len(meta["start_qualities"]) == 10
        partition = (staged / "cluster" / "partition.tsv").read_text().splitlines()
        assert partition[0] == "pub_id\tcluster_id"
        assert len(partition) - 1 == json.loads(
            (staged / "graph" / "graph_summary.json").read_text()
        )["nodes"]

    def test_project_outputs(self, staged):
        lines = (staged / "project" / "projection_clusters.tsv").read_text().splitlines()
        assert len(lines) > 2
        categories = {row.split("\t")[4] for row in lines[1:]}
        assert categories <= {"core", "boundary", "boundary_crossing", "unknown"}

    def test_label_journals(self, staged, runner, tmp_path):
        out = tmp_path / "labels"
        run_ok(runner, ["label", "--partition", str(staged / "cluster" / "partition.tsv"),
                        "--corpus", str(staged / "ingest" / "corpus.jsonl"),
                        "--mode", "journals", "--min-df", "1",
                        "--out", str(out)])
        lines = (out / "labels.tsv").read_text().splitlines()
        assert lines[0].endswith("mode")
        assert all(row.split("\t")[-1] == "journals" for row in lines[1:])

    def test_affinity_command(self, staged, runner, tmp_path):
        out = tmp_path / "aff"
        run_ok(runner, ["affinity", "--nodes", str(staged / "graph" / "nodes.tsv"),
                        "--edges", str(staged / "graph" / "edges.tsv"),
                        "--partition", str(staged / "cluster" / "partition.tsv"),
                        "--out", str(out)])
        obj = json.loads((out / "affinity.json").read_text())
        assert obj["nodes"] and "total_inter_weight" in obj

    def test_compare_command(self, staged, runner, tmp_path):
        out = tmp_path / "cmp"
        run_ok(runner, ["compare",
                        "--solution-a", str(staged / "cluster" / "partition.tsv"),
                        "--solution-b", str(staged / "project" / "projection_membership.tsv"),
                        "--out", str(out)])
        sim = json.loads((out / "similarity.json").read_text())
        assert 0.0 <= sim["nmi"] <= 1.0
        assert sim["shared_documents"] > 0

    def test_coverage_command(self, staged, runner, tmp_path):
        out = tmp_path / "cov"
        run_ok(runner, ["coverage",
                        "--clusters", str(staged / "project" / "projection_clusters.tsv"),
                        "--total", "574", "--target", "0.9",
                        "--out", str(out)])
        obj = json.loads((out / "coverage.json").read_text())
        assert obj["smallest_k"] is None or obj["smallest_k"] >= 1

    def test_out_dir_from_environment(self, staged, runner, tmp_path):
        out = tmp_path / "env_out"
        result = runner.invoke(
            cli, ["coverage",
                  "--clusters", str(staged / "project" / "projection_clusters.tsv"),
                  "--total", "574"],
            env={"CITEMAP_OUT": str(out)}, catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        assert (out / "coverage.json").exists()

    def test_cluster_preset(self, staged, runner, tmp_path):
        out = tmp_path / "preset"
        run_ok(runner, ["cluster", "--nodes", str(staged / "graph" / "nodes.tsv"),
                        "--edges", str(staged / "graph" / "edges.tsv"),
                        "--preset", "fine", "--seed", "1", "--out", str(out)])
        meta = json.loads((out / "cluster_metadata.json").read_text())
        assert meta["params"]["gamma"] == pytest.approx(8e-5)
        assert meta["params"]["min_cluster_size"] == 350

    def test_random_seed_recorded(self, staged, runner, tmp_path):
        out = tmp_path / "rand"
        result = run_ok(runner, ["cluster",
                                 "--nodes", str(staged / "graph" / "nodes.tsv"),
                                 "--edges", str(staged / "graph" / "edges.tsv"),
                                 "--gamma", "0.002", "--seed", "random",
                                 "--out", str(out)])
        assert "drew random seed" in result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert isinstance(manifest["config"]["seed"], int)

    def test_label_with_external_terms(self, staged, runner, tmp_path):
        terms = tmp_path / "terms.tsv"
        membership = (staged / "cluster" / "partition.tsv").read_text().splitlines()[1:]
        rows = []
        for line in membership:
            pid, cid = line.split("\t")
            if cid != "-1":
                rows.append(f"{pid}\ttopic {cid} marker")
        terms.write_text("\n".join(rows) + "\n")
        out = tmp_path / "labels"
        run_ok(runner, ["label", "--partition", str(staged / "cluster" / "partition.tsv"),
                        "--corpus", str(staged / "ingest" / "corpus.jsonl"),
                        "--terms", str(terms), "--min-df", "1", "--out", str(out)])
        lines = (out / "labels.tsv").read_text().splitlines()[1:]
        # each cluster's synthetic marker term is a perfect label
        first_by_cluster = {}
        for row in lines:
            fields = row.split("\t")
            first_by_cluster.setdefault(fields[0], fields[2])
        for cid, label in first_by_cluster.items():
            assert label == f"topic {cid} marker"

    def test_graph_full_keeps_all_components(self, staged, runner, tmp_path):
        out = tmp_path / "full"
        run_ok(runner, ["graph", "--corpus", str(staged / "ingest" / "corpus.jsonl"),
                        "--full", "--out", str(out)])
        summary = json.loads((out / "graph_summary.json").read_text())
        assert summary["component_report"] is None
        giant = json.loads((staged / "graph" / "graph_summary.json").read_text())
        assert summary["nodes"] >= giant["nodes"]


class TestManifest:
    def test_every_output_listed_with_valid_checksum(self, staged):
        out_dir = staged / "cluster"
        manifest = json.loads((out_dir / "manifest.json").read_text())
        listed = {entry["path"]: entry["sha256"] for entry in manifest["outputs"]}
        on_disk = {p for p in tree_hashes(out_dir) if p != "manifest.json"}
        assert set(listed) == on_disk
        for rel, digest in listed.items():
            assert hashlib.sha256((out_dir / rel).read_bytes()).hexdigest() == digest

    def test_config_hash_stable(self, staged):
        manifest = json.loads((staged / "cluster" / "manifest.json").read_text())
        blob = json.dumps(manifest["config"], sort_keys=True, separators=(",", ":"))
        assert manifest["config_hash"] == hashlib.sha256(blob.encode()).hexdigest()
        assert manifest["config"]["seed"] == 42


class TestExitCodes:
    def test_missing_input_is_exit_2(self, runner, tmp_path):
        result = runner.invoke(cli, ["graph", "--corpus", "/nonexistent.jsonl",
                                     "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_schema_violation_is_exit_3(self, runner, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a"}\n')  # missing year
        result = runner.invoke(cli, ["graph", "--corpus", str(bad),
                                     "--out", str(tmp_path / "out")])
        assert result.exit_code == 3

    def test_empty_corpus_graph_stage_exit_3(self, runner, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        result = runner.invoke(cli, [
            "pipeline", "--publications", str(empty),
            "--classification", str(FIXTURE / "classification.tsv"),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 3

    def test_bad_seed_rejected(self, runner, tmp_path):
        result = runner.invoke(cli, ["cluster", "--nodes", str(FIXTURE / "microfields.tsv"),
                                     "--edges", str(FIXTURE / "microfields.tsv"),
                                     "--gamma", "0.1", "--seed", "not-a-seed",
                                     "--out", str(tmp_path)])
        assert result.exit_code == 3


class TestPipeline:
    def test_same_command_twice_identical_trees(self, runner, tmp_path):
        args = ["pipeline", "--config", str(FIXTURE / "config.json")]
        run_ok(runner, args + ["--out", str(tmp_path / "one")])
        run_ok(runner, args + ["--out", str(tmp_path / "two")])
        assert tree_hashes(tmp_path / "one") == tree_hashes(tmp_path / "two")

    def test_report_mirrors_processing_chain(self, runner, tmp_path):
        run_ok(runner, ["pipeline", "--config", str(FIXTURE / "config.json"),
                        "--out", str(tmp_path / "run")])
        report = json.loads((tmp_path / "run" / "run_report.json").read_text())
        assert report["records_retrieved"] >= report["records_kept"]
        assert report["graph"]["giant_nodes"] <= report["records_kept"]
        assert report["clustering"]["clusters"] >= 2
        assert report["projection"]["mapped"] + report["projection"]["unmapped"] == \
            report["graph"]["giant_nodes"]
        assert 0 <= report["clustering"]["discarded_share"] < 0.1

    def test_flag_overrides_config(self, runner, tmp_path):
        run_ok(runner, ["pipeline", "--config", str(FIXTURE / "config.json"),
                        "--seed", "7", "--out", str(tmp_path / "run")])
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 7

    def test_unknown_config_key_rejected(self, runner, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"publicatons": "x.jsonl"}))
        result = runner.invoke(cli, ["pipeline", "--config", str(cfg),
                                     "--out", str(tmp_path / "out")])
        assert result.exit_code == 3

    def test_manifest_config_round_trips(self, runner, tmp_path):
        run_ok(runner, ["pipeline", "--config", str(FIXTURE / "config.json"),
                        "--out", str(tmp_path / "first")])
        manifest = json.loads((tmp_path / "first" / "manifest.json").read_text())
        replay_cfg = tmp_path / "replay.json"
        replay_cfg.write_text(json.dumps(manifest["config"]))
        run_ok(runner, ["pipeline", "--config", str(replay_cfg),
                        "--out", str(tmp_path / "second")])
        assert tree_hashes(tmp_path / "first") == tree_hashes(tmp_path / "second")
