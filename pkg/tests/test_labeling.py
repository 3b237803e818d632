import numpy as np
import pytest
from hypothesis import given, strategies as st

from citemap.corpus import PublicationRecord
from citemap.errors import SchemaError
from citemap.labeling import (
    contingency,
    journal_labels,
    nmi_score,
    rank_labels,
    save_labels,
)

from util import nmi_bruteforce

counts_strategy = st.tuples(
    st.integers(0, 200), st.integers(0, 200), st.integers(0, 200), st.integers(0, 200)
).filter(lambda t: sum(t) > 0)


class TestContingency:
    def test_perfect_overlap(self):
        universe = {"d1", "d2", "d3", "d4"}
        assert contingency({"d1", "d2"}, {"d1", "d2"}, universe) == (2, 0, 0, 2)

    def test_disjoint(self):
        universe = {"d1", "d2", "d3", "d4"}
        assert contingency({"d1"}, {"d2"}, universe) == (0, 1, 1, 2)

    def test_label_saturated(self):
        universe = {"d1", "d2", "d3"}
        n11, n10, n01, n00 = contingency({"d1"}, universe, universe)
        assert n11 + n10 == 3 and n01 == 0 and n00 == 0

    def test_subset_violation(self):
        with pytest.raises(ValueError):
            contingency({"outside"}, set(), {"d1"})
        with pytest.raises(ValueError):
            contingency(set(), {"outside"}, {"d1"})


class TestNmiScore:
    def test_perfect_correlation(self):
        nmi, direction = nmi_score((2, 0, 0, 2))
        assert nmi == pytest.approx(1.0, abs=1e-12)
        assert direction == "enriched"

    def test_independence(self):
        nmi, _ = nmi_score((1, 1, 1, 1))
        assert nmi == pytest.approx(0.0, abs=1e-12)

    def test_constant_label_zero(self):
        nmi, _ = nmi_score((3, 2, 0, 0))  # label present everywhere
        assert nmi == 0.0

    def test_depleted_direction(self):
        # label frequent outside the cluster, absent inside
        _, direction = nmi_score((0, 10, 5, 5))
        assert direction == "depleted"

    def test_margin_swap_symmetry(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            t = tuple(int(x) for x in rng.integers(0, 50, 4))
            if sum(t) == 0:
                continue
            n11, n10, n01, n00 = t
            a, _ = nmi_score((n11, n10, n01, n00))
            b, _ = nmi_score((n11, n01, n10, n00))
            assert a == pytest.approx(b, abs=1e-12)

    @given(counts_strategy)
    def test_bounds(self, counts):
        nmi, _ = nmi_score(counts)
        assert 0.0 <= nmi <= 1.0

    @given(counts_strategy)
    def test_matches_probability_bruteforce(self, counts):
        nmi, _ = nmi_score(counts)
        assert nmi == pytest.approx(max(0.0, nmi_bruteforce(counts)), abs=1e-12)

    def test_min_normalization_flag(self):
        counts = (5, 1, 2, 12)
        sqrt_nmi, _ = nmi_score(counts)
        min_nmi, _ = nmi_score(counts, normalization="min")
        assert min_nmi >= sqrt_nmi

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            nmi_score((0, 0, 0, 0))


def toy_universe():
    """Ten documents, two clusters, one perfect marker term per cluster."""
    doc_labels = {}
    for i in range(5):
        doc_labels[f"a{i}"] = frozenset({"alpha", "common"})
    for i in range(5):
        doc_labels[f"b{i}"] = frozenset({"beta", "common"})
    memberships = {
        1: {f"a{i}" for i in range(5)},
        2: {f"b{i}" for i in range(5)},
    }
    return memberships, doc_labels


class TestRankLabels:
    def test_perfect_marker_ranks_first(self):
        memberships, doc_labels = toy_universe()
        ranked = rank_labels(memberships, doc_labels, top_n=5, min_doc_frequency=5)
        assert ranked[1][0].label == "alpha"
        assert ranked[1][0].nmi == pytest.approx(1.0)
        assert ranked[2][0].label == "beta"

    def test_depleted_label_excluded(self):
        memberships, doc_labels = toy_universe()
        ranked = rank_labels(memberships, doc_labels, top_n=5, min_doc_frequency=1)
        assert all(s.label != "beta" for s in ranked[1])

    def test_uninformative_common_label_scores_zero_or_absent(self):
        memberships, doc_labels = toy_universe()
        ranked = rank_labels(memberships, doc_labels, top_n=5, min_doc_frequency=1)
        for score in ranked[1]:
            if score.label == "common":
                assert score.nmi == pytest.approx(0.0)

    def test_min_doc_frequency_filter(self):
        memberships, doc_labels = toy_universe()
        doc_labels = dict(doc_labels)
        doc_labels["a0"] = frozenset({"alpha", "common", "rare"})
        ranked = rank_labels(memberships, doc_labels, top_n=5, min_doc_frequency=2)
        assert all(s.label != "rare" for s in ranked[1])

    def test_solution_members_universe_excludes_outsiders(self):
        memberships, doc_labels = toy_universe()
        doc_labels = dict(doc_labels)
        # outsiders all carry "alpha": under the full universe alpha is no
        # longer exclusive to cluster 1, under solution_members it still is
        for i in range(10):
            doc_labels[f"z{i}"] = frozenset({"alpha"})
        full = rank_labels(memberships, doc_labels, "giant_component",
                           top_n=5, min_doc_frequency=1)
        members_only = rank_labels(memberships, doc_labels, "solution_members",
                                   top_n=5, min_doc_frequency=1)
        full_alpha = [s.nmi for s in full[1] if s.label == "alpha"]
        member_alpha = [s.nmi for s in members_only[1] if s.label == "alpha"]
        assert member_alpha[0] == pytest.approx(1.0)
        assert full_alpha[0] < 1.0

    def test_journal_mode_perfect_marker(self):
        records = [
            PublicationRecord(id=f"a{i}", year=2001, journal="Riverine Biology")
            for i in range(5)
        ] + [
            PublicationRecord(id=f"b{i}", year=2001, journal="Weed Science")
            for i in range(5)
        ]
        memberships = {
            1: {f"a{i}" for i in range(5)},
            2: {f"b{i}" for i in range(5)},
        }
        ranked = rank_labels(memberships, journal_labels(records),
                             top_n=3, min_doc_frequency=1)
        assert ranked[1][0].label == "riverine biology"
        assert ranked[1][0].nmi == pytest.approx(1.0)

    def test_empty_universe_rejected(self):
        with pytest.raises(SchemaError):
            rank_labels({1: set()}, {}, "solution_members")

    def test_cluster_outside_universe_rejected(self):
        with pytest.raises(SchemaError):
            rank_labels({1: {"ghost"}}, {"d1": frozenset()}, "giant_component")

    def test_tie_broken_lexicographically(self):
        memberships, doc_labels = toy_universe()
        doc_labels = {
            doc: (labels | {"alpha2"}) if "alpha" in labels else labels
            for doc, labels in doc_labels.items()
        }
        ranked = rank_labels(memberships, doc_labels, top_n=5, min_doc_frequency=1)
        assert [s.label for s in ranked[1][:2]] == ["alpha", "alpha2"]

    def test_save_labels_schema(self, tmp_path):
        memberships, doc_labels = toy_universe()
        ranked = rank_labels(memberships, doc_labels, top_n=3, min_doc_frequency=1)
        path = tmp_path / "labels.tsv"
        save_labels(ranked, path, "term")
        lines = path.read_text().splitlines()
        assert lines[0].split("\t") == [
            "cluster_id", "rank", "label", "nmi", "n11", "n10", "n01", "n00", "mode",
        ]
        assert lines[1].split("\t")[2] == "alpha"
