"""Token-level fingerprinting and match extraction.

The thesis is reduced to a winnowed set of k-gram fingerprints
(Schleimer, Wilkerson & Aiken, 2003). Every k-gram of an article section is
looked up in that index; each hit is verified token by token and extended
left and right into a maximal run of identical tokens. Runs overlapping on
the article side are resolved longest-first so that every article token
belongs to at most one match, and what is left shorter than
``min_match_tokens`` is dropped. One surviving run is one *match*.

Any run of at least ``k + window - 1`` identical tokens contains a whole
winnowing window of the thesis, so at least one of its k-grams is in the
index and the run is found.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

from derivata.corpus import SECTION_ORDER, Document, SectionLabel
from derivata.errors import ConfigError, IndexTooShortError

MATCH_DEFINITION = (
    "one match = one maximal run of identical normalised tokens shared by an "
    "article section and the thesis, after longest-first overlap resolution, "
    "at least min_match_tokens long"
)

_TOKEN = re.compile(r"[^\W_]+")
_MOD = (1 << 61) - 1
_BASE = 0x5BD1E995_2F4A7C15 % _MOD


@dataclass(frozen=True)
class SimilarityParams:
    k: int = 5
    window: int = 4
    min_match_tokens: int = 8

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.min_match_tokens < self.k:
            raise ConfigError(
                f"min_match_tokens ({self.min_match_tokens}) must be >= k ({self.k})"
            )


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class FingerprintIndex:
    k: int
    window: int
    entries: Mapping[int, tuple[int, ...]]
    tokens: tuple[str, ...]


@dataclass(frozen=True, order=True)
class MatchSpan:
    article_start: int
    thesis_start: int
    length: int

    @property
    def article_span(self) -> tuple[int, int]:
        return self.article_start, self.article_start + self.length

    @property
    def thesis_span(self) -> tuple[int, int]:
        return self.thesis_start, self.thesis_start + self.length


@dataclass
class Comparison:
    """Similarity measurements of one article against one thesis."""

    similarity_index: int
    section_matches: dict[SectionLabel, int]
    spans: dict[SectionLabel, list[MatchSpan]]
    covered_tokens: int
    scored_tokens: int
    missing: list[SectionLabel] = field(default_factory=list)

    @property
    def total_matches(self) -> int:
        return sum(self.section_matches.values())


def tokenize(text: str) -> TokenStream:
    """Lower-cased maximal runs of Unicode letters and digits."""
    tokens, offsets = [], []
    for m in _TOKEN.finditer(text):
        tokens.append(m.group().lower())
        offsets.append(m.span())
    return TokenStream(tuple(tokens), tuple(offsets))


@lru_cache(maxsize=1 << 16)
def _token_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % _MOD


def kgram_hashes(tokens: Sequence[str], k: int) -> list[int]:
    """Rolling polynomial hash of every k-gram, in position order."""
    n = len(tokens) - k + 1
    if n <= 0:
        return []
    th = [_token_hash(t) for t in tokens]
    top = pow(_BASE, k - 1, _MOD)
    h = 0
    for j in range(k):
        h = (h * _BASE + th[j]) % _MOD
    out = [h]
    for i in range(1, n):
        h = ((h - th[i - 1] * top) * _BASE + th[i + k - 1]) % _MOD
        out.append(h)
    return out


def winnow(hashes: Sequence[int], window: int) -> list[int]:
    """Positions selected by winnowing: the minimum of every window of
    ``window`` consecutive hashes, rightmost on ties, each position once."""
    if not hashes:
        return []
    if len(hashes) <= window:
        lo = min(hashes)
        return [max(i for i, h in enumerate(hashes) if h == lo)]
    selected: list[int] = []
    for start in range(len(hashes) - window + 1):
        best = start
        for i in range(start + 1, start + window):
            if hashes[i] <= hashes[best]:
                best = i
        if not selected or selected[-1] != best:
            selected.append(best)
    return selected


def build_index(thesis: TokenStream, k: int = 5, window: int = 4) -> FingerprintIndex:
    """Winnowed k-gram index of the thesis.

    Every selected hash maps to all thesis positions where that k-gram hash
    occurs, not only the selected position.
    """
    if k < 2 or window < 1:
        raise ConfigError(f"invalid index parameters k={k}, window={window}")
    if len(thesis) < k:
        raise IndexTooShortError(f"TooShort: thesis has {len(thesis)} tokens, k={k}")
    hashes = kgram_hashes(thesis.tokens, k)
    keep = {hashes[i] for i in winnow(hashes, window)}
    entries: dict[int, list[int]] = {}
    for pos, h in enumerate(hashes):
        if h in keep:
            entries.setdefault(h, []).append(pos)
    return FingerprintIndex(
        k=k,
        window=window,
        entries={h: tuple(p) for h, p in entries.items()},
        tokens=thesis.tokens,
    )


def _maximal_runs(article: Sequence[str], index: FingerprintIndex) -> set[tuple[int, int, int]]:
    k, thesis = index.k, index.tokens
    runs: set[tuple[int, int, int]] = set()
    reach: dict[int, int] = {}
    for p, h in enumerate(kgram_hashes(article, k)):
        for q in index.entries.get(h, ()):
            diag = q - p
            if reach.get(diag, -1) > p:
                continue
            if tuple(article[p:p + k]) != thesis[q:q + k]:
                continue  # hash collision
            s, u = p, q
            while s > 0 and u > 0 and article[s - 1] == thesis[u - 1]:
                s -= 1
                u -= 1
            e, v = p + k, q + k
            while e < len(article) and v < len(thesis) and article[e] == thesis[v]:
                e += 1
                v += 1
            runs.add((s, u, e - s))
            reach[diag] = e
    return runs


def resolve_overlaps(runs, min_length: int) -> list[MatchSpan]:
    """Longest-first selection of article-disjoint pieces of ``runs``.

    ``runs`` are ``(article_start, thesis_start, length)`` triples. A run
    that partly overlaps already-kept matches contributes its uncovered
    pieces (still exact, since they are sub-runs).
    """
    covered: set[int] = set()
    kept: list[MatchSpan] = []
    for a, t, n in sorted(runs, key=lambda r: (-r[2], r[0], r[1])):
        if n < min_length:
            continue
        i = 0
        while i < n:
            if a + i in covered:
                i += 1
                continue
            j = i
            while j < n and a + j not in covered:
                j += 1
            if j - i >= min_length:
                kept.append(MatchSpan(a + i, t + i, j - i))
                covered.update(range(a + i, a + j))
            i = j
    return sorted(kept)


def match_section(
    section: TokenStream, index: FingerprintIndex, min_match_tokens: int = 8
) -> list[MatchSpan]:
    """Matches between one article section and the indexed thesis,
    sorted by article position."""
    return resolve_overlaps(_maximal_runs(section.tokens, index), min_match_tokens)


def compare(article, thesis: Document | TokenStream | FingerprintIndex,
            params: SimilarityParams = SimilarityParams()) -> Comparison:
    """Measure every section of ``article`` (a ``SectionSet``) against the
    whole thesis.

    The similarity index is the share of non-reference article tokens that
    fall inside a match, as a rounded integer percentage. References still
    get a match count.
    """
    if isinstance(thesis, FingerprintIndex):
        index = thesis
        if index.k != params.k:
            raise ConfigError(f"index built with k={index.k}, params ask k={params.k}")
    else:
        stream = tokenize(thesis.text) if isinstance(thesis, Document) else thesis
        index = build_index(stream, params.k, params.window)

    counts: dict[SectionLabel, int] = {}
    spans: dict[SectionLabel, list[MatchSpan]] = {}
    covered = scored = 0
    for label in SECTION_ORDER:
        if label not in article:
            counts[label] = 0
            spans[label] = []
            continue
        stream = tokenize(article.text(label))
        found = match_section(stream, index, params.min_match_tokens)
        counts[label] = len(found)
        spans[label] = found
        if label is not SectionLabel.REFERENCES:
            scored += len(stream)
            covered += sum(m.length for m in found)
    sim = math.floor(100 * covered / scored + 0.5) if scored else 0
    return Comparison(sim, counts, spans, covered, scored, list(article.missing))


def spans_to_json(spans: Mapping[SectionLabel, Sequence[MatchSpan]]) -> dict:
    return {
        label.value: [
            {"article_start": m.article_start, "thesis_start": m.thesis_start,
             "length": m.length}
            for m in found
        ]
        for label, found in spans.items()
    }
