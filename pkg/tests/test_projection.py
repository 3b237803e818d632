import random

import pytest
from hypothesis import given, strategies as st

from citemap.errors import SchemaError
from citemap.projection import (
    ClassificationMap,
    categorize_microfield,
    coverage_curve,
    load_classification,
    project,
    save_projection,
)


def simple_map():
    assignment = {}
    for pid in ("1", "2", "3", "4"):
        assignment[pid] = "m1"
    for pid in ("5", "6"):
        assignment[pid] = "m2"
    assignment["7"] = "m3"
    return ClassificationMap(assignment=assignment)


class TestProject:
    def test_counting_and_ranking(self):
        result = project([str(i) for i in range(1, 8)], simple_map())
        got = [(c.cluster_id, c.microfield_id, c.size) for c in result.clusters]
        assert got == [(1, "m1", 4), (2, "m2", 2), (3, "m3", 1)]

    def test_unmapped_reported(self):
        result = project(["1", "2", "zzz"], simple_map())
        assert result.unmapped_ids == {"zzz"}
        assert sum(c.size for c in result.clusters) + 1 == 3

    def test_top_k_truncation(self):
        result = project([str(i) for i in range(1, 8)], simple_map(), top_k=2)
        assert len(result.clusters) == 2
        assert [c.microfield_id for c in result.clusters] == ["m1", "m2"]

    def test_order_invariant_under_shuffle(self):
        ids = [str(i) for i in range(1, 8)]
        base = project(ids, simple_map())
        rng = random.Random(4)
        for _ in range(5):
            rng.shuffle(ids)
            again = project(ids, simple_map())
            assert [(c.microfield_id, c.size) for c in again.clusters] == \
                [(c.microfield_id, c.size) for c in base.clusters]

    def test_tie_broken_by_lower_microfield_id(self):
        cmap = ClassificationMap(assignment={"a": "m9", "b": "m2"})
        result = project(["a", "b"], cmap)
        assert [c.microfield_id for c in result.clusters] == ["m2", "m9"]

    def test_share_from_global_sizes(self):
        cmap = simple_map()
        cmap.microfield_sizes = {"m1": 8, "m2": 100}
        result = project([str(i) for i in range(1, 8)], cmap)
        shares = {c.microfield_id: c.share for c in result.clusters}
        assert shares["m1"] == pytest.approx(0.5)
        assert shares["m2"] == pytest.approx(0.02)
        assert shares["m3"] is None  # size unknown

    def test_partition_identity(self):
        ids = [str(i) for i in range(1, 8)] + ["x", "y"]
        result = project(ids, simple_map())
        assert sum(c.size for c in result.clusters) + len(result.unmapped_ids) == len(ids)

    def test_global_size_below_intersection_rejected(self):
        cmap = simple_map()
        cmap.microfield_sizes = {"m1": 2}
        with pytest.raises(SchemaError):
            project([str(i) for i in range(1, 8)], cmap)


class TestCategorize:
    def test_paper_style_shares(self):
        assert categorize_microfield(0.527) == "core"
        assert categorize_microfield(0.34) == "boundary"
        assert categorize_microfield(0.05) == "boundary_crossing"

    def test_thresholds_inclusive_at_core(self):
        assert categorize_microfield(0.50) == "core"
        assert categorize_microfield(0.15) == "boundary"
        assert categorize_microfield(0.1499) == "boundary_crossing"

    def test_monotone_in_share(self):
        order = {"boundary_crossing": 0, "boundary": 1, "core": 2}
        last = -1
        for share in [i / 100 for i in range(101)]:
            rank = order[categorize_microfield(share)]
            assert rank >= last
            last = rank

    def test_share_out_of_range(self):
        with pytest.raises(ValueError):
            categorize_microfield(1.2)
        with pytest.raises(ValueError):
            categorize_microfield(-0.1)

    def test_bad_thresholds(self):
        with pytest.raises(ValueError):
            categorize_microfield(0.5, core_threshold=0.2, boundary_threshold=0.3)


class TestCoverage:
    def test_hand_cumulative_sum(self):
        curve = coverage_curve([50, 30, 15, 5], 100)
        assert curve.smallest_k(0.9) == 3
        assert curve.points[2] == (3, pytest.approx(0.95))

    def test_zero_target(self):
        assert coverage_curve([10], 100).smallest_k(0.0) == 0

    def test_unreachable_target(self):
        assert coverage_curve([10], 100).smallest_k(0.5) is None

    def test_non_decreasing_and_final_share(self):
        sizes = [40, 25, 25, 7, 3]
        curve = coverage_curve(sizes, 120)
        shares = [s for _, s in curve.points]
        assert shares == sorted(shares)
        assert shares[-1] == pytest.approx(sum(sizes) / 120)

    def test_requires_descending(self):
        with pytest.raises(ValueError):
            coverage_curve([10, 20], 100)

    def test_requires_total_at_least_sum(self):
        with pytest.raises(ValueError):
            coverage_curve([60, 50], 100)

    @given(st.lists(st.integers(1, 1000), min_size=1, max_size=30), st.integers(0, 500))
    def test_curve_properties_hold_for_any_sizes(self, sizes, slack):
        sizes = sorted(sizes, reverse=True)
        total = sum(sizes) + slack
        curve = coverage_curve(sizes, total)
        shares = [s for _, s in curve.points]
        assert shares == sorted(shares)
        assert shares[-1] == pytest.approx(sum(sizes) / total)
        ks = [k for k, _ in curve.points]
        assert ks == list(range(1, len(sizes) + 1))


class TestIO:
    def test_load_classification(self, tmp_path):
        c = tmp_path / "class.tsv"
        c.write_text("pub_id\tmicrofield_id\np1\tm1\np2\tm2\n")
        m = tmp_path / "meta.tsv"
        m.write_text("microfield_id\tglobal_size\tlabel\nm1\t100\tfield one\n")
        cmap = load_classification(c, m)
        assert cmap.assignment == {"p1": "m1", "p2": "m2"}
        assert cmap.microfield_sizes == {"m1": 100}
        assert cmap.labels == {"m1": "field one"}

    def test_conflicting_mapping_rejected(self, tmp_path):
        c = tmp_path / "class.tsv"
        c.write_text("p1\tm1\np1\tm2\n")
        with pytest.raises(SchemaError, match="more than one"):
            load_classification(c)

    def test_save_projection_schema(self, tmp_path):
        cmap = simple_map()
        cmap.microfield_sizes = {"m1": 8, "m2": 10, "m3": 50}
        result = project([str(i) for i in range(1, 8)], cmap)
        clusters_path = tmp_path / "clusters.tsv"
        members_path = tmp_path / "members.tsv"
        save_projection(result, clusters_path, members_path)
        lines = clusters_path.read_text().splitlines()
        assert lines[0] == "cluster_id\tmicrofield_id\tmember_count\tshare\tcategory"
        first = lines[1].split("\t")
        assert first[0] == "1" and first[1] == "m1" and first[4] == "core"
        member_lines = members_path.read_text().splitlines()[1:]
        assert len(member_lines) == 7
