"""Publication ingestion, corpus filtering, and per-document term extraction.

Term extraction is a deterministic stopword-bounded n-gram heuristic over
titles and abstracts. Externally produced noun phrases can be supplied via
term TSV files instead (see load_term_vectors); the downstream labelling
math only needs document-term presence.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import SchemaError

DOC_TYPE_ARTICLE = "article"
DOC_TYPE_LETTER = "letter"
DOC_TYPE_REVIEW = "review"
DEFAULT_DOC_TYPES = frozenset({DOC_TYPE_ARTICLE, DOC_TYPE_LETTER, DOC_TYPE_REVIEW})

PUBLICATIONS_TSV_HEADER = (
    "id", "year", "doc_type", "title", "abstract", "journal", "references",
)
TERMS_TSV_HEADER = ("doc_id", "term")


@dataclass
class PublicationRecord:
    id: str
    year: int
    doc_type: str = ""
    title: str = ""
    abstract: str = ""
    journal: str = ""
    references: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "year": self.year,
            "doc_type": self.doc_type,
            "title": self.title,
            "abstract": self.abstract,
            "journal": self.journal,
            "references": list(self.references),
        }


@dataclass(frozen=True)
class CorpusFilter:
    year_min: int = 2000
    year_max: int = 2017
    allowed_doc_types: frozenset[str] = DEFAULT_DOC_TYPES

    def __post_init__(self):
        if self.year_min > self.year_max:
            raise ValueError("year_min must be <= year_max")
        if not self.allowed_doc_types:
            raise ValueError("allowed_doc_types must be nonempty")

    def accepts(self, record: PublicationRecord) -> bool:
        return (
            self.year_min <= record.year <= self.year_max
            and record.doc_type in self.allowed_doc_types
        )


@dataclass(frozen=True)
class TermVector:
    doc_id: str
    terms: frozenset[str]


@dataclass
class IngestStats:
    records: int = 0
    duplicate_ids: int = 0
    lines: int = 0

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "duplicate_ids": self.duplicate_ids,
            "lines": self.lines,
        }


def _normalize_doc_type(value: str) -> str:
    return value.strip().lower()


def _normalize_references(refs: Iterable[str]) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for ref in refs:
        ref = str(ref).strip()
        if ref and ref not in seen:
            seen.add(ref)
            out.append(ref)
    return out


def _record_from_obj(obj: dict, where: str) -> PublicationRecord:
    pid = str(obj.get("id", "") or "").strip()
    if not pid:
        raise SchemaError(f"{where}: missing mandatory field 'id'")
    if "year" not in obj or obj["year"] in ("", None):
        raise SchemaError(f"{where}: missing mandatory field 'year'")
    try:
        year = int(obj["year"])
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: year {obj['year']!r} is not an integer")
    if year <= 0:
        raise SchemaError(f"{where}: year must be positive, got {year}")
    refs = obj.get("references", [])
    if isinstance(refs, str):
        refs = [r for r in refs.split(";") if r.strip()]
    return PublicationRecord(
        id=pid,
        year=year,
        doc_type=_normalize_doc_type(str(obj.get("doc_type", "") or "")),
        title=str(obj.get("title", "") or ""),
        abstract=str(obj.get("abstract", "") or ""),
        journal=str(obj.get("journal", "") or ""),
        references=_normalize_references(refs),
    )


def ingest_corpus(
    source: str | Path | IO[str], fmt: str = "jsonl"
) -> tuple[list[PublicationRecord], IngestStats]:
    """Read publication records from a JSONL or TSV stream.

    Ids are trimmed (case preserved) and deduplicated first-wins; duplicate
    occurrences increment a counter instead of failing, because citation
    index dumps commonly contain duplicates. Reference lists are
    deduplicated preserving order.
    """
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format: {fmt!r}")
    close = False
    if isinstance(source, (str, Path)):
        fh = open(source, "r", encoding="utf-8")
        name = str(source)
        close = True
    else:
        fh = source
        name = getattr(source, "name", "<stream>")
    try:
        records: list[PublicationRecord] = []
        seen: set[str] = set()
        stats = IngestStats()
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            stats.lines += 1
            where = f"{name}: line {lineno}"
            if fmt == "jsonl":
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{where}: malformed JSON ({exc.msg})")
                if not isinstance(obj, dict):
                    raise SchemaError(f"{where}: expected a JSON object")
                record = _record_from_obj(obj, where)
            else:
                fields = line.split("\t")
                if lineno == 1 and tuple(fields) == PUBLICATIONS_TSV_HEADER:
                    stats.lines -= 1
                    continue
                if len(fields) != len(PUBLICATIONS_TSV_HEADER):
                    raise SchemaError(
                        f"{where}: expected {len(PUBLICATIONS_TSV_HEADER)} columns, "
                        f"got {len(fields)}"
                    )
                obj = dict(zip(PUBLICATIONS_TSV_HEADER, fields))
                record = _record_from_obj(obj, where)
            if record.id in seen:
                stats.duplicate_ids += 1
                continue
            seen.add(record.id)
            records.append(record)
        stats.records = len(records)
        return records, stats
    finally:
        if close:
            fh.close()


def save_corpus(records: Iterable[PublicationRecord], path: str | Path) -> None:
    """Write normalized records as JSONL (one object per line)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_obj(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def filter_corpus(
    records: Iterable[PublicationRecord], corpus_filter: CorpusFilter
) -> tuple[list[PublicationRecord], int]:
    """Keep records inside the year window with an allowed document type.

    Returns (kept, dropped_count); input order is preserved.
    """
    kept = []
    dropped = 0
    for rec in records:
        if corpus_filter.accepts(rec):
            kept.append(rec)
        else:
            dropped += 1
    return kept, dropped


# --- term extraction ---

_TOKEN_RE = re.compile(r"([a-z0-9]+)|[^a-z0-9\s]+")


def _segments(text: str, stopwords: frozenset[str] | set[str]) -> Iterator[list[str]]:
    """Split lowercase text into runs of tokens not interrupted by
    punctuation or stopwords."""
    current: list[str] = []
    for match in _TOKEN_RE.finditer(text.lower()):
        token = match.group(1)
        if token is not None and token not in stopwords:
            current.append(token)
        else:
            # punctuation or stopword: hard boundary
            if current:
                yield current
                current = []
    if current:
        yield current


def apply_exclusions(
    terms: set[str],
    exclusions: set[str] | frozenset[str],
    match_substrings: bool = False,
) -> set[str]:
    """Drop excluded terms. Default is exact whole-term matching; the
    substring mode additionally drops terms containing an exclusion
    phrase anywhere."""
    if not exclusions:
        return terms
    kept = terms - set(exclusions)
    if match_substrings:
        kept = {t for t in kept if not any(e in t for e in exclusions)}
    return kept


def extract_terms(
    record: PublicationRecord,
    stopwords: set[str] | frozenset[str],
    max_ngram: int = 3,
    exclusions: set[str] | frozenset[str] = frozenset(),
    match_substrings: bool = False,
) -> TermVector:
    """All 1..max_ngram-grams of title+abstract token runs.

    No n-gram crosses a stopword or punctuation boundary, so extracted
    terms never contain a stopword. Terms equal to an exclusion entry
    (case-insensitive whole-term match; optionally substring match) are
    removed.
    """
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    terms: set[str] = set()
    for text in (record.title, record.abstract):
        if not text:
            continue
        for segment in _segments(text, stopwords):
            m = len(segment)
            for n in range(1, min(max_ngram, m) + 1):
                for i in range(m - n + 1):
                    terms.add(" ".join(segment[i : i + n]))
    terms = apply_exclusions(terms, exclusions, match_substrings)
    return TermVector(doc_id=record.id, terms=frozenset(terms))


def extract_corpus_terms(
    records: Iterable[PublicationRecord],
    stopwords: set[str] | frozenset[str],
    max_ngram: int = 3,
    exclusions: set[str] | frozenset[str] = frozenset(),
    match_substrings: bool = False,
) -> list[TermVector]:
    return [
        extract_terms(r, stopwords, max_ngram, exclusions, match_substrings)
        for r in records
    ]


def load_term_vectors(
    path: str | Path,
    exclusions: set[str] | frozenset[str] = frozenset(),
    match_substrings: bool = False,
) -> list[TermVector]:
    """Read (doc_id, term) TSV rows into per-document presence sets.

    Rows for unknown doc ids are kept; the join happens later by id.
    """
    path = Path(path)
    grouped: dict[str, set[str]] = {}
    order: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if lineno == 1 and tuple(fields) == TERMS_TSV_HEADER:
                continue
            if len(fields) != 2:
                raise SchemaError(f"{path}: line {lineno}: expected 2 columns")
            doc_id, term = fields[0].strip(), _normalize_entry(fields[1])
            if not doc_id or not term:
                raise SchemaError(f"{path}: line {lineno}: empty doc_id or term")
            if doc_id not in grouped:
                grouped[doc_id] = set()
                order.append(doc_id)
            grouped[doc_id].add(term)
    return [
        TermVector(
            doc_id=d,
            terms=frozenset(apply_exclusions(grouped[d], exclusions, match_substrings)),
        )
        for d in order
    ]


def _normalize_entry(raw: str) -> str:
    return " ".join(raw.lower().split())


def load_wordlist(path: str | Path) -> frozenset[str]:
    """One entry per line; '#' comment lines and blanks ignored; entries are
    lowercased with inner whitespace collapsed."""
    entries: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            entries.add(_normalize_entry(line))
    return frozenset(entries)


def _load_packaged(name: str) -> frozenset[str]:
    text = resources.files("citemap.data").joinpath(name).read_text(encoding="utf-8")
    entries = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(_normalize_entry(line))
    return frozenset(entries)


def default_stopwords() -> frozenset[str]:
    """Minimal English stopword list shipped with the toolkit."""
    return _load_packaged("stopwords_en.txt")


def default_exclusions() -> frozenset[str]:
    """Field-delineation query phrases excluded from label candidates."""
    return _load_packaged("query_exclusions.txt")
