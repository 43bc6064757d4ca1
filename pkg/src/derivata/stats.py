"""Statistics over comparison records.

Spearman correlation, range normalisation, squared-Euclidean proximity
between variables, average-linkage (UPGMA) clustering, ROC analysis and
the Youden-optimal cut-point.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from derivata.corpus import ComparisonRecord, SectionLabel
from derivata.errors import DegenerateInput

VARIABLES: tuple[str, ...] = (
    "SimilarityIndex",
    "Title",
    "Abstract",
    "Introduction",
    "Methodology",
    "Results",
    "Discussion",
)

# Row/column captions of the published distance table.
TABLE_CAPTIONS: dict[str, str] = {
    "SimilarityIndex": "SIMILARITY INDEX",
    "Title": "TITLE",
    "Abstract": "ABSTRACT",
    "Introduction": "INTRODUCTION",
    "Methodology": "METHODOLOGY",
    "Results": "RESULTS",
    "Discussion": "DISCUSSION",
}

PERMUTATION_THRESHOLD = 30


@dataclass(frozen=True)
class VariableTable:
    variables: tuple[str, ...]
    rows: np.ndarray
    constant: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.variables):
            raise ValueError("rows must be an (n, #variables) array")
        if not np.all(np.isfinite(self.rows)) or np.any(self.rows < 0):
            raise ValueError("variable values must be finite and non-negative")

    @classmethod
    def from_records(cls, records: Iterable[ComparisonRecord]) -> "VariableTable":
        rows = [
            [r.similarity_index] + [r.matches(SectionLabel(v)) for v in VARIABLES[1:]]
            for r in records
        ]
        return cls(VARIABLES, np.asarray(rows, dtype=float).reshape(-1, len(VARIABLES)))

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.variables.index(name)]


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_two_sided: float
    n: int
    method: str


@dataclass(frozen=True)
class ProximityMatrix:
    labels: tuple[str, ...]
    d: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.d[self.labels.index(a), self.labels.index(b)])

    def pairs(self) -> list[tuple[str, str, float]]:
        """Off-diagonal entries (upper triangle) in label order."""
        n = len(self.labels)
        return [
            (self.labels[i], self.labels[j], float(self.d[i, j]))
            for i in range(n) for j in range(i + 1, n)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        caps = [TABLE_CAPTIONS.get(x, x) for x in self.labels]
        w.writerow(["Case", *caps])
        for cap, row in zip(caps, self.d):
            w.writerow([cap, *(f"{v:.3f}" for v in row)])
        return buf.getvalue()


@dataclass(frozen=True)
class Merge:
    left: tuple[str, ...]
    right: tuple[str, ...]
    height: float
    tie: bool = False

    @property
    def members(self) -> frozenset[str]:
        return frozenset(self.left) | frozenset(self.right)


@dataclass
class Dendrogram:
    labels: tuple[str, ...]
    merges: list[Merge]

    @property
    def ties(self) -> list[int]:
        return [i for i, m in enumerate(self.merges) if m.tie]

    def first_merge_containing(self, members: Iterable[str]) -> int:
        want = frozenset(members)
        return next(i for i, m in enumerate(self.merges) if want <= m.members)

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "merges": [
                {"left": list(m.left), "right": list(m.right),
                 "height": m.height, "tie": m.tie}
                for m in self.merges
            ],
        }

    def to_dot(self) -> str:
        lines = ["graph dendrogram {", "  node [shape=box];"]
        for i, label in enumerate(self.labels):
            lines.append(f'  leaf{i} [label="{label}"];')
        node_of = {(label,): f"leaf{i}" for i, label in enumerate(self.labels)}
        for i, m in enumerate(self.merges):
            name = f"merge{i}"
            lines.append(f'  {name} [shape=point, xlabel="{m.height:.3f}"];')
            lines.append(f"  {name} -- {node_of[m.left]};")
            lines.append(f"  {name} -- {node_of[m.right]};")
            node_of[tuple(sorted(m.left + m.right))] = name
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CutPoint:
    threshold: float
    sensitivity: float
    fpr: float
    youden_j: float


@dataclass
class ROCAnalysis:
    points: list[tuple[float, float, float]]
    auc: float
    scores: np.ndarray = field(repr=False)
    gold: np.ndarray = field(repr=False)
    cut: CutPoint | None = None

    def operating_point(self, threshold: float) -> tuple[float, float]:
        """(sensitivity, fpr) of the rule ``score > threshold``."""
        pred = self.scores > threshold
        pos = self.gold.sum()
        return float((pred & self.gold).sum() / pos), float((pred & ~self.gold).sum() / (len(self.gold) - pos))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "sensitivity", "fpr"])
        for t, s, f in self.points:
            w.writerow([repr(t), repr(s), repr(f)])
        return buf.getvalue()


# -- correlation --------------------------------------------------------------

def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    return float(np.clip((a @ b) / math.sqrt((a @ a) * (b @ b)), -1.0, 1.0))


def spearman(x: Sequence[float], y: Sequence[float], *, permutations: int = 10_000,
             seed: int = 0) -> SpearmanResult:
    """Spearman rank correlation with a two-sided p-value.

    For ``n >= 30`` the p-value uses the t approximation with ``n - 2``
    degrees of freedom; smaller samples use a permutation test.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput("x and y must be vectors of equal length")
    n = len(x)
    if n < 3:
        raise DegenerateInput(f"need at least 3 pairs, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInput("constant vector: rank correlation undefined")
    rx, ry = average_ranks(x), average_ranks(y)
    rho = _pearson(rx, ry)

    if n >= PERMUTATION_THRESHOLD:
        if abs(rho) == 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1 - rho * rho))
            p = float(2 * sps.t.sf(abs(t), n - 2))
        return SpearmanResult(rho, min(p, 1.0), n, "t-approximation")

    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(permutations):
        if abs(_pearson(rx, rng.permutation(ry))) >= abs(rho) - 1e-12:
            hits += 1
    p = (hits + 1) / (permutations + 1)
    return SpearmanResult(rho, p, n, "permutation")


# -- proximity and clustering -------------------------------------------------

def range_normalize(table: VariableTable) -> VariableTable:
    """Rescale every column to [0, 1]; constant columns become zeros and are
    listed in ``constant``."""
    if table.rows.shape[0] < 2:
        raise DegenerateInput("range normalisation needs at least 2 rows")
    lo = table.rows.min(axis=0)
    span = table.rows.max(axis=0) - lo
    flat = span == 0
    out = np.where(flat, 0.0, (table.rows - lo) / np.where(flat, 1.0, span))
    const = tuple(v for v, f in zip(table.variables, flat) if f)
    return VariableTable(table.variables, out, const)


def proximity_matrix(table: VariableTable) -> ProximityMatrix:
    """Squared Euclidean distance between every pair of columns.

    Sums run over rows in a fixed order, so results are bit-stable.
    """
    cols = table.rows.T
    k = len(table.variables)
    d = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            diff = cols[i] - cols[j]
            d[i, j] = d[j, i] = math.fsum(diff * diff)
    return ProximityMatrix(table.variables, d)


def average_linkage_cluster(m: ProximityMatrix, *, rtol: float = 1e-12) -> Dendrogram:
    """Agglomerative clustering with unweighted pair-group averages (UPGMA).

    After merging A and B, the distance to any C is
    ``(|A| d(A,C) + |B| d(B,C)) / (|A| + |B|)``. When several pairs are at
    the minimal distance the lexicographically first pair of (sorted) label
    tuples is merged and the merge is flagged as a tie.
    """
    labels = m.labels
    if len(labels) < 2:
        raise DegenerateInput("clustering needs at least 2 labels")
    clusters: dict[int, tuple[str, ...]] = {i: (lab,) for i, lab in enumerate(labels)}
    dist = {(i, j): float(m.d[i, j]) for i in clusters for j in clusters if i < j}
    next_id = len(labels)
    merges: list[Merge] = []

    def key(pair):
        a, b = sorted((tuple(sorted(clusters[pair[0]])), tuple(sorted(clusters[pair[1]]))))
        return a, b

    while len(clusters) > 1:
        best = min(dist.values())
        tol = rtol * max(abs(best), 1.0)
        tied = [p for p, v in dist.items() if v - best <= tol]
        pair = min(tied, key=key)
        a, b = pair
        left, right = key(pair)
        merges.append(Merge(left, right, best, tie=len(tied) > 1))

        na, nb = len(clusters[a]), len(clusters[b])
        merged = tuple(sorted(clusters[a] + clusters[b], key=labels.index))
        new_dist = {}
        for c in clusters:
            if c in (a, b):
                continue
            dac = dist[(min(a, c), max(a, c))]
            dbc = dist[(min(b, c), max(b, c))]
            new_dist[(c, next_id)] = (na * dac + nb * dbc) / (na + nb)
        dist = {p: v for p, v in dist.items() if a not in p and b not in p}
        dist.update(new_dist)
        del clusters[a], clusters[b]
        clusters[next_id] = merged
        next_id += 1
    return Dendrogram(labels, merges)


# -- ROC ----------------------------------------------------------------------

def roc(scores: Sequence[float], gold: Sequence[bool]) -> ROCAnalysis:
    """ROC curve for the rule ``positive <=> score > threshold``.

    Candidate thresholds are the midpoints between consecutive distinct
    scores plus +inf and -inf, which supply the (0, 0) and (1, 1) corners.
    Points are ordered by increasing fpr; the area is trapezoidal.
    """
    s = np.asarray(scores, dtype=float)
    g = np.asarray(gold, dtype=bool)
    if s.shape != g.shape or s.ndim != 1:
        raise DegenerateInput("scores and gold must be vectors of equal length")
    pos = int(g.sum())
    neg = len(g) - pos
    if pos == 0 or neg == 0:
        raise DegenerateInput("gold labels contain a single class")

    distinct = np.unique(s)
    thresholds = [math.inf] + list(((distinct[1:] + distinct[:-1]) / 2)[::-1]) + [-math.inf]
    # Counts of scores strictly above each threshold via sorted arrays.
    sp = np.sort(s[g])
    sn = np.sort(s[~g])
    points = []
    for t in thresholds:
        tp = pos - np.searchsorted(sp, t, side="right")
        fp = neg - np.searchsorted(sn, t, side="right")
        points.append((float(t), tp / pos, fp / neg))

    auc = 0.0
    for (_, s0, f0), (_, s1, f1) in zip(points, points[1:]):
        auc += (f1 - f0) * (s0 + s1) / 2
    r = ROCAnalysis(points, auc, s, g)
    r.cut = youden_cut(r)
    return r


def youden_cut(r: ROCAnalysis) -> CutPoint:
    """Threshold maximising sensitivity + specificity - 1.

    Ties go to the lower false-positive rate, then the higher threshold.
    """
    pos = int(r.gold.sum())
    neg = len(r.gold) - pos

    def key(p):
        t, sens, fpr = p
        # J scaled by pos * neg, in integer counts so ties compare exactly.
        j = round(sens * pos) * neg - round(fpr * neg) * pos
        return j, -fpr, t

    t, sens, fpr = max(r.points, key=key)
    return CutPoint(t, sens, fpr, sens + (1 - fpr) - 1)
