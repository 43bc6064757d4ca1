"""Derivative classification and authorship analytics."""

from __future__ import annotations

import enum
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from derivata.corpus import ComparisonRecord, SectionLabel
from derivata.errors import DegenerateInput, EmptyGroup, PositionError, Unclassifiable, UnknownGoldId

DEFAULT_CUT = 7.5


class Classification(str, enum.Enum):
    DERIVATIVE = "Derivative"
    NON_DERIVATIVE = "NonDerivative"


def classify(record: ComparisonRecord, cut: float = DEFAULT_CUT) -> Classification:
    """Derivative iff the Discussion match count exceeds ``cut``."""
    if SectionLabel.DISCUSSION in record.missing_sections:
        raise Unclassifiable(f"{record.article_id}: no Discussion section")
    if record.matches(SectionLabel.DISCUSSION) > cut:
        return Classification.DERIVATIVE
    return Classification.NON_DERIVATIVE


def classify_all(records: Iterable[ComparisonRecord], cut: float = DEFAULT_CUT
                 ) -> tuple[dict[str, Classification], list[str]]:
    """Classify every record; unclassifiable ids are returned separately."""
    out: dict[str, Classification] = {}
    skipped: list[str] = []
    for rec in records:
        try:
            out[rec.article_id] = classify(rec, cut)
        except Unclassifiable:
            skipped.append(rec.article_id)
    return out, skipped


def harmonic_number(n: int) -> float:
    return math.fsum(1 / j for j in range(1, n + 1))


def harmonic_credit(i: int, n: int) -> float:
    """Credit share of the i-th of n authors: (1/i) / (1 + 1/2 + ... + 1/n)."""
    if not 1 <= i <= n:
        raise PositionError(f"position {i} outside byline of {n}")
    return (1 / i) / harmonic_number(n)


@dataclass(frozen=True)
class CreditAllocation:
    credits: tuple[float, ...]

    @classmethod
    def for_byline(cls, n: int) -> "CreditAllocation":
        if n < 1:
            raise PositionError(f"byline length must be positive, got {n}")
        h = harmonic_number(n)
        return cls(tuple((1 / i) / h for i in range(1, n + 1)))


@dataclass(frozen=True)
class GroupSummary:
    n: int
    sim_mean: float
    sim_sd: float
    first_author_rate: float
    first_author_count: int
    credit_mean: float
    authors_mean: float
    authors_sd: float
    supervisor_distribution: dict[str, int]
    published_by_completion_rate: float | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sd(values: Sequence[float]) -> float:
    # Sample SD, the SPSS default.
    return statistics.stdev(values) if len(values) > 1 else 0.0


def summarize_group(records: Sequence[ComparisonRecord]) -> GroupSummary:
    if not records:
        raise EmptyGroup("cannot summarise an empty group")
    sims = [float(r.similarity_index) for r in records]
    sizes = [float(r.byline_length) for r in records]
    first = sum(1 for r in records if r.author_position[0] == 1)
    dist = Counter(f"{s}/{m}" for s, m in (r.supervisor_overlap for r in records))
    offsets = [r.year_offset for r in records]
    published = None
    if all(o is not None for o in offsets):
        published = sum(1 for o in offsets if o <= 0) / len(records)
    return GroupSummary(
        n=len(records),
        sim_mean=statistics.fmean(sims),
        sim_sd=_sd(sims),
        first_author_rate=first / len(records),
        first_author_count=first,
        credit_mean=statistics.fmean(harmonic_credit(*r.author_position) for r in records),
        authors_mean=statistics.fmean(sizes),
        authors_sd=_sd(sizes),
        supervisor_distribution=dict(sorted(dist.items())),
        published_by_completion_rate=published,
    )


def summarize(records: Sequence[ComparisonRecord], labels: Sequence[str]
              ) -> dict[str, GroupSummary]:
    """One :class:`GroupSummary` per distinct label, in first-seen order."""
    if len(records) != len(labels):
        raise ValueError("records and labels differ in length")
    groups: dict[str, list[ComparisonRecord]] = {}
    for rec, lab in zip(records, labels):
        groups.setdefault(str(getattr(lab, "value", lab)), []).append(rec)
    return {lab: summarize_group(recs) for lab, recs in groups.items()}


@dataclass(frozen=True)
class SupervisionMeans:
    derivative: float
    nonderivative_supervised: float
    nonderivative_unsupervised: float


def supervised_similarity_means(records: Sequence[ComparisonRecord],
                                derivative: Sequence[bool]) -> SupervisionMeans:
    """Mean similarity of derivatives, and of non-derivatives with and
    without a supervisor on the byline. An empty group yields NaN."""

    def mean(xs):
        xs = list(xs)
        return statistics.fmean(xs) if xs else math.nan

    pairs = list(zip(records, derivative))
    return SupervisionMeans(
        mean(r.similarity_index for r, d in pairs if d),
        mean(r.similarity_index for r, d in pairs if not d and r.supervisor_overlap[0] >= 1),
        mean(r.similarity_index for r, d in pairs if not d and r.supervisor_overlap[0] == 0),
    )


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def sensitivity(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else math.nan

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else math.nan

    def to_json(self) -> dict:
        def rate(x):
            return None if math.isnan(x) else x

        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "sensitivity": rate(self.sensitivity), "fpr": rate(self.fpr)}


def gold_confusion(classifications: Mapping[str, Classification],
                   gold_article_ids: Iterable[str]) -> Confusion:
    gold = set(gold_article_ids)
    if not gold:
        raise DegenerateInput("gold set is empty")
    unknown = sorted(gold - classifications.keys())
    if unknown:
        raise UnknownGoldId(", ".join(unknown))
    tp = fp = fn = tn = 0
    for aid, cls in classifications.items():
        pred = cls is Classification.DERIVATIVE
        if aid in gold:
            tp += pred
            fn += not pred
        else:
            fp += pred
            tn += not pred
    return Confusion(tp, fp, fn, tn)
