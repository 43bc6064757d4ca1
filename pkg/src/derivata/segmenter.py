"""Split article full text into IMRaD-based sections.

The title is the first non-blank line. Every other section starts at a
heading line: a short line (at most ``MAX_HEADING_TOKENS`` words) whose
text, once numbering and punctuation are stripped, is one of the aliases in
:data:`HEADING_ALIASES`. A section runs until the next recognised heading
or the end of the text. Heading lines themselves belong to no section.

Sections that cannot be found are reported in ``SectionSet.missing``; they
are never guessed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from derivata.corpus import SECTION_ORDER, Document, SectionLabel
from derivata.errors import SegmentationError

MAX_HEADING_TOKENS = 8

COMBINED_RESULTS_DISCUSSION = "combined_results_discussion"

HEADING_ALIASES: dict[str, SectionLabel] = {
    "abstract": SectionLabel.ABSTRACT,
    "summary": SectionLabel.ABSTRACT,
    "introduction": SectionLabel.INTRODUCTION,
    "methods": SectionLabel.METHODOLOGY,
    "methodology": SectionLabel.METHODOLOGY,
    "materials and methods": SectionLabel.METHODOLOGY,
    "material and methods": SectionLabel.METHODOLOGY,
    "patients and methods": SectionLabel.METHODOLOGY,
    "subjects and methods": SectionLabel.METHODOLOGY,
    "results": SectionLabel.RESULTS,
    "results and discussion": SectionLabel.RESULTS,
    "discussion": SectionLabel.DISCUSSION,
    "discussion and conclusions": SectionLabel.DISCUSSION,
    "discussion and conclusion": SectionLabel.DISCUSSION,
    "references": SectionLabel.REFERENCES,
    "bibliography": SectionLabel.REFERENCES,
    "literature cited": SectionLabel.REFERENCES,
}

_COMBINED = {"results and discussion"}

# Back matter that closes the running section without opening a new one.
STOP_HEADINGS = frozenset({
    "acknowledgements",
    "acknowledgments",
    "acknowledgement",
    "acknowledgment",
    "funding",
    "conflict of interest",
    "conflicts of interest",
    "competing interests",
    "declaration of interest",
    "declarations",
    "abbreviations",
    "appendix",
    "supplementary material",
    "supplementary data",
})

_NUMBERING = re.compile(
    r"^\s*(?:(?:\d+(?:\.\d+)*|[ivxlc]+|[a-h])[.):]|\d+(?:\.\d+)*)\s+", re.IGNORECASE
)
_NON_WORD = re.compile(r"[^\w\s]+")
_SPACE = re.compile(r"\s+")


@dataclass(frozen=True)
class Section:
    label: SectionLabel
    start: int
    end: int
    text: str


@dataclass
class SectionSet:
    """Sections of one document keyed by label, ordered by start offset."""

    doc_id: str
    source: str
    sections: dict[SectionLabel, Section]
    missing: list[SectionLabel]
    flags: list[str] = field(default_factory=list)
    unassigned: list[tuple[int, int]] = field(default_factory=list)

    def __contains__(self, label: SectionLabel) -> bool:
        return label in self.sections

    def __getitem__(self, label: SectionLabel) -> Section:
        return self.sections[label]

    def __iter__(self) -> Iterator[Section]:
        return iter(self.sections.values())

    def text(self, label: SectionLabel) -> str:
        sec = self.sections.get(label)
        return sec.text if sec else ""

    def gaps(self) -> list[tuple[int, int]]:
        """Source spans covered by no section (headings, blank lead-in, ...)."""
        out, pos = [], 0
        for sec in self.sections.values():
            if sec.start > pos:
                out.append((pos, sec.start))
            pos = sec.end
        if pos < len(self.source):
            out.append((pos, len(self.source)))
        return out

    def reassembled(self) -> str:
        pieces = [(s.start, s.text) for s in self.sections.values()]
        pieces += [(a, self.source[a:b]) for a, b in self.gaps()]
        return "".join(text for _, text in sorted(pieces))

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sections": [
                {"label": s.label.value, "start": s.start, "end": s.end}
                for s in self.sections.values()
            ],
            "missing": [label.value for label in self.missing],
            "flags": list(self.flags),
        }


def normalize_heading(line: str) -> str | None:
    """Canonical heading key for ``line`` or ``None`` if it is too long."""
    text = line.strip()
    if not text or len(text.split()) > MAX_HEADING_TOKENS:
        return None
    text = _NUMBERING.sub("", text)
    text = _NON_WORD.sub(" ", text).replace("_", " ")
    return _SPACE.sub(" ", text).strip().lower()


def classify_heading(line: str) -> SectionLabel | str | None:
    """Section label for a heading line, ``"stop"`` for back matter, else None."""
    key = normalize_heading(line)
    if not key:
        return None
    if key in HEADING_ALIASES:
        return HEADING_ALIASES[key]
    if key in STOP_HEADINGS:
        return "stop"
    return None


def _lines(text: str) -> Iterator[tuple[int, int, str]]:
    """Yield ``(start, end_with_newline, line)`` for every line."""
    pos = 0
    for raw in text.splitlines(keepends=True):
        yield pos, pos + len(raw), raw.rstrip("\r\n")
        pos += len(raw)


def _trimmed_span(text: str, start: int, end: int) -> tuple[int, int]:
    chunk = text[start:end]
    lead = len(chunk) - len(chunk.lstrip())
    trail = len(chunk) - len(chunk.rstrip())
    if lead == len(chunk):
        return start, start
    return start + lead, end - trail


def segment(doc: Document | str, doc_id: str | None = None) -> SectionSet:
    """Segment a document (or raw text) into labelled sections.

    Raises:
        SegmentationError: empty text, or no recognised heading at all.
    """
    if isinstance(doc, Document):
        text, doc_id = doc.text, doc.id
    else:
        text, doc_id = doc, doc_id or ""
    if not text.strip():
        raise SegmentationError(f"{doc_id}: empty text")

    lines = list(_lines(text))
    title_idx = next(i for i, (_, _, ln) in enumerate(lines) if ln.strip())
    t_start, t_end, t_line = lines[title_idx]
    title_span = _trimmed_span(text, t_start, t_start + len(t_line))

    flags: list[str] = []
    # (label-or-stop, heading line start, body start)
    boundaries: list[tuple[SectionLabel | str, int, int]] = []
    seen: set[SectionLabel] = set()
    for start, end, line in lines[title_idx + 1:]:
        kind = classify_heading(line)
        if kind is None:
            continue
        if isinstance(kind, SectionLabel):
            if kind in seen:
                flags.append(f"duplicate_heading:{kind.value}")
                continue
            seen.add(kind)
            if normalize_heading(line) in _COMBINED:
                flags.append(COMBINED_RESULTS_DISCUSSION)
        boundaries.append((kind, start, end))

    if not any(isinstance(k, SectionLabel) for k, _, _ in boundaries):
        raise SegmentationError(f"{doc_id}: Unstructured (no recognised section heading)")

    spans: list[tuple[SectionLabel, int, int]] = [(SectionLabel.TITLE, *title_span)]
    unassigned: list[tuple[int, int]] = []

    lead_start, lead_end = _trimmed_span(text, t_end, boundaries[0][1])
    if lead_end > lead_start:
        if SectionLabel.ABSTRACT not in seen:
            spans.append((SectionLabel.ABSTRACT, lead_start, lead_end))
            flags.append("abstract_from_lead_in")
        else:
            unassigned.append((lead_start, lead_end))

    for j, (kind, _, body_start) in enumerate(boundaries):
        body_end = boundaries[j + 1][1] if j + 1 < len(boundaries) else len(text)
        a, b = _trimmed_span(text, body_start, body_end)
        if isinstance(kind, SectionLabel):
            spans.append((kind, a, b if b > a else a))
        elif b > a:
            unassigned.append((a, b))

    spans.sort(key=lambda s: s[1])
    sections = {
        label: Section(label, a, b, text[a:b]) for label, a, b in spans
    }
    missing = [label for label in SECTION_ORDER if label not in sections]
    return SectionSet(doc_id, text, sections, missing, flags, unassigned)


def section_word_counts(sections: SectionSet) -> dict[SectionLabel, int]:
    """Whitespace-delimited token counts per section (0 for missing ones)."""
    return {
        label: len(sections.text(label).split()) for label in SECTION_ORDER
    }
