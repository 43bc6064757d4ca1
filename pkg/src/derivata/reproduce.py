"""Re-derive the published aggregates from the bundled validation tables.

The similarity engine is not involved: the printed per-article numbers
stand in for its output. Each check compares one computed quantity with
the published value at a fixed tolerance.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from derivata import analysis, stats
from derivata.corpus import Fixture, Partition, SectionLabel, load_fixture_dir

# Published distance table, variables in stats.VARIABLES order.
PUBLISHED_PROXIMITY = np.array([
    [0.000, 10.310, 6.740, 5.608, 4.474, 4.774, 4.720],
    [10.310, 0.000, 7.326, 7.910, 8.085, 8.095, 7.377],
    [6.740, 7.326, 0.000, 4.443, 5.428, 5.318, 3.674],
    [5.608, 7.910, 4.443, 0.000, 5.464, 4.749, 3.193],
    [4.474, 8.085, 5.428, 5.464, 0.000, 4.289, 3.684],
    [4.774, 8.095, 5.318, 4.749, 4.289, 0.000, 2.896],
    [4.720, 7.377, 3.674, 3.193, 3.684, 2.896, 0.000],
])

IMRAD_BODY = ("Introduction", "Abstract", "Methodology", "Discussion", "Results")
EXPECTED_DIVERGENCE = ["Author15-Article6"]


@dataclass(frozen=True)
class Check:
    criterion: str
    name: str
    observed: object
    expected: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.criterion:<3} {status}  {self.name}: observed {self.observed}, expected {self.expected}"


def _within(name, crit, value, target, tol) -> Check:
    ok = bool(abs(value - target) <= tol)
    return Check(crit, name, round(float(value), 4), f"{target} ± {tol}", ok)


def _exact(name, crit, value, target) -> Check:
    return Check(crit, name, value, f"{target}", value == target)


def published_order() -> list[tuple[str, str]]:
    m = stats.ProximityMatrix(stats.VARIABLES, PUBLISHED_PROXIMITY)
    return [(a, b) for a, b, _ in sorted(m.pairs(), key=lambda p: p[2])]


def constructed_roc_instance(fixture: Fixture, positives: int = 37, above: int = 22,
                             cut: float = 7.5) -> tuple[np.ndarray, np.ndarray]:
    """Discussion counts of all records with a gold labelling of
    ``positives`` records, ``above`` of them scoring over ``cut``.

    Positives are taken in row order from each side of the cut.
    """
    scores = np.array([r.matches(SectionLabel.DISCUSSION) for r in fixture.records], dtype=float)
    hi = np.flatnonzero(scores > cut)[:above]
    lo = np.flatnonzero(scores <= cut)[:positives - above]
    gold = np.zeros(len(scores), dtype=bool)
    gold[hi] = True
    gold[lo] = True
    return scores, gold


def fixture_checks(fixture: Fixture) -> list[Check]:
    recs = fixture.records
    checks: list[Check] = []

    # F1 Spearman(similarity, total matches)
    sp = stats.spearman([r.similarity_index for r in recs], [r.total_matches for r in recs])
    checks.append(_within("spearman rho(similarity, matches)", "F1", sp.rho, 0.953, 0.005))
    checks.append(Check("F1", "spearman two-sided p", f"{sp.p_two_sided:.3g}", "< 0.001",
                        sp.p_two_sided < 0.001))

    # F2 proximity matrix
    table = stats.range_normalize(stats.VariableTable.from_records(recs))
    prox = stats.proximity_matrix(table)
    for a, b, target in [("Results", "Discussion", 2.896),
                         ("SimilarityIndex", "Methodology", 4.474),
                         ("SimilarityIndex", "Title", 10.310)]:
        checks.append(_within(f"d({a}, {b})", "F2", prox[a, b], target, 0.05))
    ours = [(a, b) for a, b, _ in sorted(prox.pairs(), key=lambda p: p[2])]
    theirs = published_order()
    first_diff = next((i for i, (x, y) in enumerate(zip(ours, theirs)) if x != y), None)
    checks.append(Check(
        "F2", "ordering of the 21 distances",
        "identical" if first_diff is None else
        f"differs at rank {first_diff + 1}: {'-'.join(ours[first_diff])} vs {'-'.join(theirs[first_diff])}",
        "identical to published table", first_diff is None))

    # F3 dendrogram
    tree = stats.average_linkage_cluster(prox)
    first = tree.merges[0].members
    checks.append(_exact("first merge", "F3", "-".join(sorted(first)), "Discussion-Results"))
    body = tree.first_merge_containing(IMRAD_BODY)
    title = next(i for i, m in enumerate(tree.merges) if "Title" in m.members)
    checks.append(Check("F3", "IMRaD body joined before Title", f"merge {body + 1} vs merge {title + 1}",
                        "body merge earlier", body < title))

    # F4 classification at the Discussion cut-off
    labels = [analysis.classify(r) is analysis.Classification.DERIVATIVE for r in recs]
    diverging = [r.article_id for r, got, want in zip(recs, labels, fixture.derivative_mask) if got != want]
    checks.append(_exact("records agreeing with printed partition", "F4", len(recs) - len(diverging), 198))
    checks.append(_exact("diverging records", "F4", diverging, EXPECTED_DIVERGENCE))

    # F5 group summaries over the printed partition
    der = analysis.summarize_group(fixture.by_partition(Partition.DERIVATIVE))
    non = analysis.summarize_group([r for r, p in zip(recs, fixture.partitions) if not p.is_derivative])
    checks += [
        _within("derivative similarity mean", "F5", der.sim_mean, 39.7, 0.1),
        _within("derivative similarity SD", "F5", der.sim_sd, 17.2, 0.2),
        _within("non-derivative similarity mean", "F5", non.sim_mean, 5.3, 0.1),
        _within("non-derivative similarity SD", "F5", non.sim_sd, 9.8, 0.2),
        _exact("derivative first-author count", "F5", f"{der.first_author_count}/{der.n}", "34/40"),
        _exact("non-derivative first-author count", "F5", f"{non.first_author_count}/{non.n}", "51/159"),
        _within("derivative authors/article", "F5", der.authors_mean, 5.0, 0.1),
        _within("derivative authors/article SD", "F5", der.authors_sd, 2.0, 0.1),
        _within("non-derivative authors/article", "F5", non.authors_mean, 6.4, 0.1),
        _within("non-derivative authors/article SD", "F5", non.authors_sd, 3.5, 0.1),
        _within("derivative credit mean", "F5", der.credit_mean, 0.42, 0.01),
        _within("non-derivative credit mean", "F5", non.credit_mean, 0.24, 0.01),
    ]
    keys = ["1/1", "1/2", "2/2", "2/3", "3/3"]
    checks.append(_exact("derivative supervisor distribution", "F5",
                         [der.supervisor_distribution.get(k, 0) for k in keys], [13, 7, 18, 1, 1]))
    checks.append(_exact("non-derivative supervised distribution", "F5",
                         [non.supervisor_distribution.get(k, 0) for k in keys], [36, 38, 23, 4, 5]))
    zero = sum(v for k, v in non.supervisor_distribution.items() if k.startswith("0/"))
    checks.append(_exact("non-derivative zero-supervisor records", "F5", zero, 53))

    # F6 three-way similarity means
    means = analysis.supervised_similarity_means(recs, fixture.derivative_mask)
    checks += [
        _within("derivative similarity mean", "F6", means.derivative, 39.7, 0.1),
        _within("non-derivative, supervisor co-author", "F6", means.nonderivative_supervised, 7.5, 0.2),
        _within("non-derivative, no supervisor", "F6", means.nonderivative_unsupervised, 0.94, 0.1),
    ]

    # F7 harmonic credit
    worst = max(abs(math.fsum(analysis.CreditAllocation.for_byline(n).credits) - 1) for n in range(1, 101))
    checks.append(Check("F7", "max |sum of credits - 1|, N <= 100", f"{worst:.1e}", "<= 1e-9", worst <= 1e-9))
    checks.append(_within("credit(1, 4)", "F7", analysis.harmonic_credit(1, 4), 0.480, 0.001))

    # F8 constructed ROC instance
    scores, gold = constructed_roc_instance(fixture)
    r = stats.roc(scores, gold)
    at = [p for p in r.points if p[0] == 7.5]
    sens = at[0][1] if at else math.nan
    checks.append(Check("F8", "sensitivity at 7.5, 37 gold / 22 above cut", round(sens, 10),
                        f"{float(Fraction(22, 37)):.10f} ± 1e-9",
                        bool(at) and abs(sens - 22 / 37) <= 1e-9))
    return checks


def reproduce_fixture(fixture_dir: str | os.PathLike | None = None) -> list[Check]:
    """Load the three tables (bundled copy by default) and run every check."""
    return fixture_checks(load_fixture_dir(fixture_dir))


NOT_REPRODUCIBLE = (
    "AUC 0.796 and fpr 0.098 at cut 7.5 need the unpublished per-article gold "
    "labels and are not checked."
)
