#!/usr/bin/env python3
"""Generate the bundled synthetic corpus under data/synthetic/.

Four planted topics with their own organism/habitat vocabulary, journals,
and microfields. The output is deterministic; the files are committed, so
this script only needs re-running when the fixture itself changes.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic"

TOPICS = {
    "plants": {
        "organisms": ["knotweed", "cheatgrass", "tamarisk", "kudzu", "thistle", "buckthorn"],
        "habitats": ["grassland", "prairie", "woodland", "rangeland"],
        "themes": ["restoration", "vegetation", "soil nutrients", "fire regime"],
        "journals": ["Plant Invasions Quarterly", "Vegetation Dynamics", "Restoration Notes"],
        "microfields": ["m101", "m102"],
    },
    "freshwater": {
        "organisms": ["zebra mussel", "round goby", "crayfish", "carp", "water flea"],
        "habitats": ["lake", "river", "wetland", "great lakes"],
        "themes": ["zooplankton", "fisheries", "food web", "nutrient cycling"],
        "journals": ["Freshwater Ecology Letters", "Lake and River Studies", "Hydrobiology Reports"],
        "microfields": ["m201", "m202"],
    },
    "marine": {
        "organisms": ["green crab", "ascidian", "lionfish", "algae mat", "jellyfish"],
        "habitats": ["harbor", "estuary", "coastal shelf", "reef"],
        "themes": ["ballast water", "shipping routes", "fouling", "salinity tolerance"],
        "journals": ["Marine Bioinvasions", "Coastal Ecology Journal", "Estuarine Research"],
        "microfields": ["m301", "m302"],
    },
    "insects": {
        "organisms": ["fire ant", "emerald ash borer", "asian hornet", "lady beetle", "gypsy moth"],
        "habitats": ["forest", "orchard", "urban park", "plantation"],
        "themes": ["biocontrol", "pollination", "pest management", "colony founding"],
        "journals": ["Insect Invasions", "Applied Entomology Notes", "Pollinator Studies"],
        "microfields": ["m401", "m402"],
    },
}

QUERY_PHRASES = ["invasive species", "alien species", "introduced species"]

MICROFIELD_GLOBAL_SIZES = {
    # dominant fields sized so overlap shares span core/boundary/crossing
    "m101": 260, "m102": 900,
    "m201": 340, "m202": 1400,
    "m301": 600, "m302": 2100,
    "m401": 800, "m402": 2600,
    "m900": 5000, "m901": 7000,  # background fields picked up by stray mappings
}

ALL_MICROFIELDS = sorted(MICROFIELD_GLOBAL_SIZES)


def title_for(rng: random.Random, topic: dict) -> str:
    organism = rng.choice(topic["organisms"])
    habitat = rng.choice(topic["habitats"])
    pattern = rng.randrange(4)
    if pattern == 0:
        return f"Spread of {organism} populations across {habitat} sites"
    if pattern == 1:
        return f"{organism.capitalize()} establishment and impact in {habitat} systems"
    if pattern == 2:
        return f"Monitoring {organism} invasion of {habitat} communities"
    return f"Range expansion of {organism} in disturbed {habitat} areas"


def abstract_for(rng: random.Random, topic: dict) -> str:
    if rng.random() < 0.06:
        return ""
    organism = rng.choice(topic["organisms"])
    theme = rng.choice(topic["themes"])
    habitat = rng.choice(topic["habitats"])
    sentences = [
        f"We surveyed {habitat} sites to quantify {organism} abundance.",
        f"Results link {theme} to the persistence of {organism} populations.",
    ]
    if rng.random() < 0.3:
        sentences.append(f"Management of {rng.choice(QUERY_PHRASES)} remains difficult.")
    if rng.random() < 0.4:
        sentences.append(f"Effects on native {theme} were measured over five seasons.")
    return " ".join(sentences)


def main() -> None:
    rng = random.Random(20250809)
    OUT.mkdir(parents=True, exist_ok=True)

    topic_names = list(TOPICS)
    records: list[dict] = []
    topic_of: dict[str, str] = {}
    by_topic: dict[str, list[str]] = {t: [] for t in topic_names}

    n_pubs = 660
    for i in range(n_pubs):
        pid = f"P{i + 1:04d}"
        topic_name = topic_names[
            rng.choices(range(4), weights=[0.34, 0.26, 0.22, 0.18])[0]
        ]
        topic = TOPICS[topic_name]
        year = rng.choices(
            [1998, 1999] + list(range(2000, 2018)) + [2018, 2019],
            weights=[1, 1] + [4] * 18 + [1, 1],
        )[0]
        doc_type = rng.choices(
            ["article", "review", "letter", "proceedings paper", "editorial"],
            weights=[80, 8, 5, 5, 2],
        )[0]

        references: list[str] = []
        pool = by_topic[topic_name]
        n_refs = rng.randrange(0, 9)
        for _ in range(n_refs):
            if pool and rng.random() < 0.88:
                references.append(rng.choice(pool))
            elif rng.random() < 0.75:
                others = [t for t in topic_names if by_topic[t]]
                if others:
                    references.append(rng.choice(by_topic[rng.choice(others)]))
            else:
                references.append(f"EXT{rng.randrange(1, 400):04d}")  # outside corpus
        if rng.random() < 0.01:
            references.append(pid)  # self reference, dropped at graph build
        if rng.random() < 0.05 and references:
            references.append(references[0])  # duplicate reference

        records.append(
            {
                "id": pid,
                "year": year,
                "doc_type": doc_type,
                "title": title_for(rng, topic),
                "abstract": abstract_for(rng, topic),
                "journal": rng.choice(topic["journals"]),
                "references": references,
            }
        )
        topic_of[pid] = topic_name
        # eligible as a citation target only when it passes the corpus filter
        if 2000 <= year <= 2017 and doc_type in ("article", "review", "letter"):
            by_topic[topic_name].append(pid)

    pubs_path = OUT / "publications.jsonl"
    with pubs_path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        # two duplicate lines exercising first-wins deduplication
        fh.write(json.dumps(records[10], sort_keys=True) + "\n")
        fh.write(json.dumps(records[25], sort_keys=True) + "\n")

    # classification: dominant microfield 75%, secondary 15%, stray 4%, unmapped 6%
    class_path = OUT / "classification.tsv"
    with class_path.open("w", encoding="utf-8") as fh:
        fh.write("pub_id\tmicrofield_id\n")
        for rec in records:
            roll = rng.random()
            if roll < 0.06:
                continue
            fields = TOPICS[topic_of[rec["id"]]]["microfields"]
            if roll < 0.81:
                mid = fields[0]
            elif roll < 0.96:
                mid = fields[1]
            else:
                mid = rng.choice(["m900", "m901"])
            fh.write(f"{rec['id']}\t{mid}\n")

    meta_path = OUT / "microfields.tsv"
    with meta_path.open("w", encoding="utf-8") as fh:
        fh.write("microfield_id\tglobal_size\tlabel\n")
        for mid in ALL_MICROFIELDS:
            fh.write(f"{mid}\t{MICROFIELD_GLOBAL_SIZES[mid]}\tsynthetic field {mid}\n")

    config = {
        "publications": "publications.jsonl",
        "format": "jsonl",
        "classification": "classification.tsv",
        "microfield_meta": "microfields.tsv",
        "year_min": 2000,
        "year_max": 2017,
        "doc_types": ["article", "letter", "review"],
        "weighting": "normalized_out",
        "gamma": 0.002,
        "iterations": 100,
        "random_starts": 10,
        "seed": 42,
        "theta": 0.01,
        "min_cluster_size": 20,
        "core_threshold": 0.5,
        "boundary_threshold": 0.15,
        "label_top_n": 8,
        "min_doc_frequency": 5,
        "max_ngram": 3,
        "affinity_threshold": 1.0,
        "coverage_target": 0.9,
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    print(f"wrote fixture to {OUT}")


if __name__ == "__main__":
    main()
