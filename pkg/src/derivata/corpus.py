"""Data model and ingestion.

A corpus is described by a JSON manifest that points at plain UTF-8 text
files::

    {
      "theses":   [{"id", "author", "supervisors": [...], "completion_year",
                    "text_file", "gold_articles": [...]}],
      "articles": [{"id", "thesis_id", "authors": [...], "year", "text_file"}]
    }

``text_file`` paths are resolved relative to the manifest's directory.

Comparison records (one article measured against its thesis) are read and
written in the column layout of the published validation tables, see
:data:`FIXTURE_COLUMNS`.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from derivata.errors import (
    DanglingReference,
    DuplicateId,
    FixtureIntegrityError,
    IngestError,
)

log = logging.getLogger(__name__)


class Role(str, enum.Enum):
    THESIS = "Thesis"
    ARTICLE = "Article"


class SectionLabel(str, enum.Enum):
    """IMRaD-based section labels, in document order."""

    TITLE = "Title"
    ABSTRACT = "Abstract"
    INTRODUCTION = "Introduction"
    METHODOLOGY = "Methodology"
    RESULTS = "Results"
    DISCUSSION = "Discussion"
    REFERENCES = "References"


SECTION_ORDER: tuple[SectionLabel, ...] = tuple(SectionLabel)

FIXTURE_COLUMNS: tuple[str, ...] = (
    "AUTHORS-ARTICLES",
    "SIMILARITY INDEX",
    "TITLE",
    "ABSTRACT",
    "INTRODUCTION",
    "METHODOLOGY",
    "RESULTS",
    "DISCUSSION",
    "REFERENCES",
    "MATCHES",
    "AUTHOR POSITION",
    "SUPERVISORS",
)


class Partition(str, enum.Enum):
    """Group a fixture row was printed in."""

    DERIVATIVE = "Derivative"
    NON_DERIV_SUPERVISED = "NonDerivSupervised"
    NON_DERIV_UNSUPERVISED = "NonDerivUnsupervised"

    @property
    def is_derivative(self) -> bool:
        return self is Partition.DERIVATIVE


FIXTURE_FILES: dict[Partition, str] = {
    Partition.DERIVATIVE: "table1.csv",
    Partition.NON_DERIV_SUPERVISED: "table2.csv",
    Partition.NON_DERIV_UNSUPERVISED: "table3.csv",
}


@dataclass(frozen=True)
class Document:
    id: str
    role: Role
    author_ids: tuple[str, ...]
    year: int
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise IngestError("document id must be nonempty")
        if not self.author_ids:
            raise IngestError(f"{self.id}: author list is empty")
        if self.role is Role.THESIS and len(self.author_ids) != 1:
            raise IngestError(f"{self.id}: a thesis has exactly one author")


@dataclass(frozen=True)
class ThesisRecord:
    thesis_id: str
    candidate_author_id: str
    supervisor_ids: frozenset[str]
    completion_year: int
    gold_article_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.candidate_author_id in self.supervisor_ids:
            raise IngestError(
                f"{self.thesis_id}: candidate {self.candidate_author_id!r} "
                "is listed as their own supervisor"
            )
        if not self.supervisor_ids:
            raise IngestError(f"{self.thesis_id}: at least one supervisor required")


@dataclass(frozen=True)
class ComparisonRecord:
    """One article measured against the thesis of its author.

    ``year_offset`` is ``None`` when publication years are unknown (the
    published tables carry no dates). ``missing_sections`` lists sections
    the segmenter could not find; their counts are zero but not observed.
    """

    article_id: str
    thesis_id: str
    similarity_index: float
    section_matches: Mapping[SectionLabel, int]
    total_matches: int
    author_position: tuple[int, int]
    supervisor_overlap: tuple[int, int]
    year_offset: int | None = None
    missing_sections: frozenset[SectionLabel] = frozenset()

    def __post_init__(self) -> None:
        if not 0 <= self.similarity_index <= 100:
            raise ValueError(f"{self.article_id}: similarity index out of [0, 100]")
        i, n = self.author_position
        if not 1 <= i <= n:
            raise ValueError(f"{self.article_id}: author position {i}/{n}")
        s, m = self.supervisor_overlap
        if not 0 <= s <= m:
            raise ValueError(f"{self.article_id}: supervisor overlap {s}/{m}")
        if any(v < 0 for v in self.section_matches.values()):
            raise ValueError(f"{self.article_id}: negative match count")

    def matches(self, label: SectionLabel) -> int:
        return self.section_matches.get(label, 0)

    @property
    def section_sum(self) -> int:
        return sum(self.matches(label) for label in SECTION_ORDER)

    @property
    def byline_length(self) -> int:
        return self.author_position[1]


@dataclass(frozen=True)
class Corpus:
    documents: Mapping[str, Document]
    theses: Mapping[str, ThesisRecord]
    article_thesis: Mapping[str, str]

    def articles(self) -> list[Document]:
        return [d for d in self.documents.values() if d.role is Role.ARTICLE]

    def thesis_documents(self) -> list[Document]:
        return [d for d in self.documents.values() if d.role is Role.THESIS]

    def thesis_for(self, article_id: str) -> ThesisRecord:
        return self.theses[self.article_thesis[article_id]]

    def gold_article_ids(self) -> frozenset[str]:
        ids: set[str] = set()
        for rec in self.theses.values():
            ids |= rec.gold_article_ids
        return frozenset(ids)


@dataclass
class Fixture:
    """Records loaded from the three published validation tables."""

    records: list[ComparisonRecord]
    partitions: list[Partition]
    integrity_warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def by_partition(self, partition: Partition) -> list[ComparisonRecord]:
        return [r for r, p in zip(self.records, self.partitions) if p is partition]

    @property
    def derivative_mask(self) -> list[bool]:
        return [p.is_derivative for p in self.partitions]


def _read_text(base: Path, doc_id: str, rel: str | None) -> str:
    if not rel:
        raise IngestError(f"{doc_id}: no text_file given")
    path = base / rel
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"{doc_id}: cannot read {path}: {exc.strerror}") from exc


def load_manifest(path: str | os.PathLike) -> Corpus:
    """Load theses, articles and their links from a JSON manifest.

    Raises:
        IngestError: unreadable manifest or text file, malformed entry.
        DuplicateId: two documents share an id.
        DanglingReference: an article names a thesis that is not declared.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent

    documents: dict[str, Document] = {}
    theses: dict[str, ThesisRecord] = {}
    links: dict[str, str] = {}

    def add(doc: Document) -> None:
        if doc.id in documents:
            raise DuplicateId(doc.id)
        documents[doc.id] = doc

    try:
        for t in raw.get("theses", []):
            tid = str(t["id"])
            author = str(t["author"])
            year = int(t["completion_year"])
            add(Document(tid, Role.THESIS, (author,), year,
                         _read_text(base, tid, t.get("text_file"))))
            theses[tid] = ThesisRecord(
                thesis_id=tid,
                candidate_author_id=author,
                supervisor_ids=frozenset(map(str, t.get("supervisors", []))),
                completion_year=year,
                gold_article_ids=frozenset(map(str, t.get("gold_articles", []))),
            )
        for a in raw.get("articles", []):
            aid = str(a["id"])
            add(Document(aid, Role.ARTICLE, tuple(map(str, a["authors"])),
                         int(a["year"]), _read_text(base, aid, a.get("text_file"))))
            links[aid] = str(a["thesis_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed manifest entry: {exc!r}") from exc

    for aid, tid in links.items():
        if tid not in theses:
            raise DanglingReference(tid)
        author = theses[tid].candidate_author_id
        if author not in documents[aid].author_ids:
            raise IngestError(f"{aid}: thesis author {author!r} not in byline")
    return Corpus(documents, theses, links)


def save_manifest(corpus: Corpus, path: str | os.PathLike, text_dir: str = "texts") -> None:
    """Write ``corpus`` as a manifest plus one text file per document."""
    path = Path(path)
    (path.parent / text_dir).mkdir(parents=True, exist_ok=True)
    theses, articles = [], []
    for doc in corpus.documents.values():
        rel = f"{text_dir}/{doc.id}.txt"
        (path.parent / rel).write_text(doc.text, encoding="utf-8")
        if doc.role is Role.THESIS:
            rec = corpus.theses[doc.id]
            theses.append({
                "id": doc.id,
                "author": rec.candidate_author_id,
                "supervisors": sorted(rec.supervisor_ids),
                "completion_year": rec.completion_year,
                "text_file": rel,
                "gold_articles": sorted(rec.gold_article_ids),
            })
        else:
            articles.append({
                "id": doc.id,
                "thesis_id": corpus.article_thesis[doc.id],
                "authors": list(doc.author_ids),
                "year": doc.year,
                "text_file": rel,
            })
    atomic_write_text(path, json.dumps({"theses": theses, "articles": articles}, indent=2))


def filter_publication_window(
    corpus: Corpus, max_years_after: int = 2
) -> tuple[Corpus, list[str]]:
    """Drop articles published more than ``max_years_after`` years after
    their thesis was completed. Earlier articles are always kept.

    Returns the filtered corpus and the excluded article ids (sorted).
    """
    excluded = sorted(
        a.id for a in corpus.articles()
        if a.year > corpus.thesis_for(a.id).completion_year + max_years_after
    )
    drop = set(excluded)
    docs = {k: v for k, v in corpus.documents.items() if k not in drop}
    links = {k: v for k, v in corpus.article_thesis.items() if k not in drop}
    return Corpus(docs, corpus.theses, links), excluded


def authorship(article: Document, thesis: ThesisRecord) -> tuple[tuple[int, int], tuple[int, int]]:
    """Byline position of the thesis author and supervisor co-authorship.

    Returns ``((i, N), (s, m))``: ``i`` is the 1-based rank of the candidate
    among ``N`` authors, ``s`` the number of the ``m`` supervisors on the
    byline.
    """
    try:
        i = article.author_ids.index(thesis.candidate_author_id) + 1
    except ValueError:
        raise IngestError(
            f"{article.id}: thesis author {thesis.candidate_author_id!r} not in byline"
        ) from None
    s = sum(1 for a in set(article.author_ids) if a in thesis.supervisor_ids)
    return (i, len(article.author_ids)), (s, len(thesis.supervisor_ids))


# -- comparison-record tables -------------------------------------------------

def _parse_ratio(cell: str) -> tuple[int, int]:
    a, _, b = cell.strip().partition("/")
    return int(a), int(b)


def _parse_percent(cell: str) -> float:
    return float(cell.strip().rstrip("%").strip())


def _row_to_record(row: Mapping[str, str]) -> ComparisonRecord:
    sections = {
        label: int(row[label.value.upper()]) for label in SECTION_ORDER
    }
    return ComparisonRecord(
        article_id=row["AUTHORS-ARTICLES"].strip(),
        thesis_id="",
        similarity_index=_parse_percent(row["SIMILARITY INDEX"]),
        section_matches=sections,
        total_matches=int(row["MATCHES"]),
        author_position=_parse_ratio(row["AUTHOR POSITION"]),
        supervisor_overlap=_parse_ratio(row["SUPERVISORS"]),
    )


def read_records_csv(path: str | os.PathLike, *, strict: bool = True) -> tuple[list[ComparisonRecord], list[str]]:
    """Read comparison records from one table in the published layout.

    With ``strict`` a row whose section counts do not add up to MATCHES
    raises :class:`FixtureIntegrityError`; otherwise the row id is returned
    in the warnings list and the record is kept as printed.
    """
    path = Path(path)
    records: list[ComparisonRecord] = []
    warnings: list[str] = []
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise FixtureIntegrityError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        if header != FIXTURE_COLUMNS:
            raise FixtureIntegrityError(f"{path.name}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = _row_to_record(row)
            except (ValueError, TypeError, AttributeError) as exc:
                raise FixtureIntegrityError(f"{path.name}:{lineno}: {exc}") from exc
            if rec.section_sum != rec.total_matches:
                msg = (f"{rec.article_id}: sections sum to {rec.section_sum}, "
                       f"MATCHES is {rec.total_matches}")
                if strict:
                    raise FixtureIntegrityError(msg)
                log.warning(msg)
                warnings.append(rec.article_id)
            records.append(rec)
    return records, warnings


def load_fixture(tables: Sequence[str | os.PathLike], *, strict: bool = True) -> Fixture:
    """Load the derivative, supervised and unsupervised tables, in that order."""
    if len(tables) != 3:
        raise FixtureIntegrityError(f"expected 3 tables, got {len(tables)}")
    fixture = Fixture([], [])
    for partition, table in zip(Partition, tables):
        records, warnings = read_records_csv(table, strict=strict)
        fixture.records.extend(records)
        fixture.partitions.extend([partition] * len(records))
        fixture.integrity_warnings.extend(warnings)
    return fixture


def fixture_paths(directory: str | os.PathLike | None = None) -> list[Path]:
    """Paths of the three tables in ``directory`` (default: bundled copy)."""
    if directory is None:
        base = Path(str(resources.files("derivata") / "data" / "appendix"))
    else:
        base = Path(directory)
    paths = [base / FIXTURE_FILES[p] for p in Partition]
    missing = [p.name for p in paths if not p.is_file()]
    if missing:
        raise FixtureIntegrityError(f"{base}: missing {', '.join(missing)}")
    return paths


def load_fixture_dir(directory: str | os.PathLike | None = None, *, strict: bool = True) -> Fixture:
    return load_fixture(fixture_paths(directory), strict=strict)


def record_row(rec: ComparisonRecord) -> list[str]:
    i, n = rec.author_position
    s, m = rec.supervisor_overlap
    sim = rec.similarity_index
    sim_text = f"{int(sim)}%" if float(sim).is_integer() else f"{sim}%"
    return [
        rec.article_id,
        sim_text,
        *(str(rec.matches(label)) for label in SECTION_ORDER),
        str(rec.total_matches),
        f"{i}/{n}",
        f"{s}/{m}",
    ]


def write_records_csv(records: Iterable[ComparisonRecord], path: str | os.PathLike) -> None:
    lines = [list(FIXTURE_COLUMNS)] + [record_row(r) for r in records]
    with _atomic(path) as fh:
        csv.writer(fh, lineterminator="\n").writerows(lines)


def record_to_json(rec: ComparisonRecord) -> dict:
    return {
        "article_id": rec.article_id,
        "thesis_id": rec.thesis_id,
        "similarity_index": rec.similarity_index,
        "section_matches": {label.value: rec.matches(label) for label in SECTION_ORDER},
        "total_matches": rec.total_matches,
        "author_position": list(rec.author_position),
        "supervisor_overlap": list(rec.supervisor_overlap),
        "year_offset": rec.year_offset,
        "missing_sections": sorted(label.value for label in rec.missing_sections),
    }


def record_from_json(obj: Mapping) -> ComparisonRecord:
    return ComparisonRecord(
        article_id=obj["article_id"],
        thesis_id=obj.get("thesis_id", ""),
        similarity_index=obj["similarity_index"],
        section_matches={SectionLabel(k): int(v) for k, v in obj["section_matches"].items()},
        total_matches=int(obj["total_matches"]),
        author_position=tuple(obj["author_position"]),
        supervisor_overlap=tuple(obj["supervisor_overlap"]),
        year_offset=obj.get("year_offset"),
        missing_sections=frozenset(SectionLabel(v) for v in obj.get("missing_sections", ())),
    )


# -- atomic output ------------------------------------------------------------

class _atomic:
    """Context manager writing a text file through a temp file + rename."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, self.tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.")
        self.fh = os.fdopen(fd, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            os.unlink(self.tmp)
        return False


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    with _atomic(path) as fh:
        fh.write(text)
