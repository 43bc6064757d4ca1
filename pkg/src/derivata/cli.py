"""Command-line interface.

Subcommands::

    derivata ingest    --manifest M [--max-years-after 2]
    derivata segment   --manifest M | --text FILE
    derivata compare   --manifest M --out DIR [--k 5 --window 4 --min-match 8 --jobs 1]
    derivata stats     --records R | --fixture [DIR]   --out DIR
    derivata roc       --records R | --fixture [DIR]   --gold FILE --out DIR
    derivata classify  --records R | --fixture [DIR]   [--cut 7.5]
    derivata report    --records R | --fixture [DIR]   --out DIR [--gold FILE]
    derivata run       --manifest M --out DIR [--gold FILE]
    derivata reproduce [--fixture DIR]

``--records`` takes a comparison CSV in the validation-table layout or a
``records.json`` written by ``compare``. Exit codes: 0 ok, 1 reproduction
checks failed, 2 configuration error, 3 ingest error, 4 degenerate input,
5 fixture integrity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from derivata import analysis, stats
from derivata.corpus import (
    FIXTURE_COLUMNS,
    ComparisonRecord,
    Corpus,
    Document,
    SectionLabel,
    ThesisRecord,
    atomic_write_text,
    authorship,
    filter_publication_window,
    load_fixture_dir,
    load_manifest,
    read_records_csv,
    record_from_json,
    record_row,
    record_to_json,
)
from derivata.errors import ConfigError, DegenerateInput, DerivataError, UnknownGoldId
from derivata.reproduce import NOT_REPRODUCIBLE, reproduce_fixture
from derivata.segmenter import segment
from derivata.similarity import (
    MATCH_DEFINITION,
    SimilarityParams,
    build_index,
    compare,
    spans_to_json,
    tokenize,
)

log = logging.getLogger("derivata")

EMIT_FORMATS = ("csv", "json", "dot")
BUNDLED = "bundled"


@dataclass
class RunConfig:
    subcommand: str
    manifest: Path | None = None
    records: Path | None = None
    fixture: Path | str | None = None
    gold: Path | None = None
    params: SimilarityParams = field(default_factory=SimilarityParams)
    cut: float = analysis.DEFAULT_CUT
    max_years_after: int = 2
    out: Path | None = None
    emit: tuple[str, ...] = EMIT_FORMATS
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.cut < 0:
            raise ConfigError(f"cut threshold must be >= 0, got {self.cut}")
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {self.jobs}")
        bad = set(self.emit) - set(EMIT_FORMATS)
        if bad:
            raise ConfigError(f"unknown emit format(s): {', '.join(sorted(bad))}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _finite(x: float):
    return x if abs(x) != float("inf") else str(x)


def _require(value, flag: str, why: str = ""):
    if value is None:
        raise ConfigError(why or f"{flag} is required")
    return value


def read_gold(path: Path) -> set[str]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read gold file {path}: {exc.strerror}") from exc
    return {ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")}


def load_records(cfg: RunConfig) -> list[ComparisonRecord]:
    if cfg.records is not None:
        if cfg.records.suffix == ".json":
            try:
                raw = json.loads(cfg.records.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read {cfg.records}: {exc}") from exc
            return [record_from_json(o) for o in raw["records"]]
        return read_records_csv(cfg.records)[0]
    if cfg.fixture is not None:
        return load_fixture_dir(None if cfg.fixture == BUNDLED else cfg.fixture).records
    raise ConfigError("one of --records or --fixture is required")


# -- pipeline stages ----------------------------------------------------------

def _compare_group(thesis: Document, articles: list[Document], params: SimilarityParams):
    index = build_index(tokenize(thesis.text), params.k, params.window)
    return [(a.id, compare(segment(a), index, params)) for a in articles]


def compare_corpus(corpus: Corpus, params: SimilarityParams, jobs: int = 1):
    """Compare every article with its thesis; results sorted by article id."""
    groups: dict[str, list[Document]] = {}
    for art in corpus.articles():
        groups.setdefault(corpus.article_thesis[art.id], []).append(art)
    tasks = [(corpus.documents[tid], arts, params) for tid, arts in sorted(groups.items())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_compare_group, *zip(*tasks)))
    else:
        chunks = [_compare_group(*t) for t in tasks]
    results = sorted((item for chunk in chunks for item in chunk), key=lambda x: x[0])

    records = []
    for aid, cmp in results:
        art = corpus.documents[aid]
        thesis: ThesisRecord = corpus.thesis_for(aid)
        position, overlap = authorship(art, thesis)
        records.append(ComparisonRecord(
            article_id=aid,
            thesis_id=thesis.thesis_id,
            similarity_index=cmp.similarity_index,
            section_matches=cmp.section_matches,
            total_matches=cmp.total_matches,
            author_position=position,
            supervisor_overlap=overlap,
            year_offset=art.year - thesis.completion_year,
            missing_sections=frozenset(cmp.missing),
        ))
    return records, dict(results)


def stats_artifacts(records: Sequence[ComparisonRecord],
                    skipped: dict[str, str] | None = None) -> dict[str, str]:
    """Spearman, proximity and dendrogram files.

    With a ``skipped`` dict, a degenerate part is recorded there and left
    out instead of raising.
    """
    files: dict[str, str] = {}
    try:
        sp = stats.spearman([r.similarity_index for r in records],
                            [r.total_matches for r in records])
        files["spearman.json"] = _dump({"variables": ["similarity_index", "total_matches"],
                                        "rho": sp.rho, "p_two_sided": sp.p_two_sided,
                                        "n": sp.n, "method": sp.method})
    except DegenerateInput as exc:
        if skipped is None:
            raise
        skipped["spearman"] = str(exc)
    try:
        table = stats.range_normalize(stats.VariableTable.from_records(records))
        prox = stats.proximity_matrix(table)
        tree = stats.average_linkage_cluster(prox)
        files["proximity.csv"] = prox.to_csv()
        files["dendrogram.json"] = _dump({**tree.to_json(), "constant_columns": list(table.constant)})
        files["dendrogram.dot"] = tree.to_dot()
    except DegenerateInput as exc:
        if skipped is None:
            raise
        skipped["clustering"] = str(exc)
    return files


def roc_artifacts(records: Sequence[ComparisonRecord], gold: set[str],
                  section: SectionLabel = SectionLabel.DISCUSSION) -> dict[str, str]:
    ids = {r.article_id for r in records}
    unknown = sorted(gold - ids)
    if unknown:
        raise UnknownGoldId(", ".join(unknown))
    r = stats.roc([rec.matches(section) for rec in records],
                  [rec.article_id in gold for rec in records])
    return {
        "roc.csv": r.to_csv(),
        "roc.json": _dump({"section": section.value, "auc": r.auc,
                           "cut": {**r.cut.__dict__, "threshold": _finite(r.cut.threshold)},
                           "positives": len(gold),
                           "n": len(records)}),
    }


def report(records: Sequence[ComparisonRecord], cut: float, gold: set[str] | None = None) -> dict:
    classes, skipped = analysis.classify_all(records, cut)
    labelled = [r for r in records if r.article_id in classes]
    labels = [classes[r.article_id].value for r in labelled]
    groups = analysis.summarize(labelled, labels) if labelled else {}
    out = {
        "n_records": len(records),
        "cut": cut,
        "counts": {k: v.n for k, v in groups.items()},
        "unclassifiable": skipped,
        "groups": {k: v.to_json() for k, v in groups.items()},
    }
    if labelled:
        means = analysis.supervised_similarity_means(
            labelled, [lab == analysis.Classification.DERIVATIVE.value for lab in labels])
        out["similarity_by_supervision"] = {
            k: (None if v != v else v) for k, v in means.__dict__.items()
        }
    if gold:
        out["gold_confusion"] = analysis.gold_confusion(classes, gold).to_json()
    return out


def report_table(rep: dict) -> str:
    rows = [("", *rep["groups"].keys())]

    def row(name, fmt):
        rows.append((name, *(fmt(g) for g in rep["groups"].values())))

    row("articles", lambda g: str(g["n"]))
    row("similarity mean (SD)", lambda g: f"{g['sim_mean']:.1f} ({g['sim_sd']:.1f})")
    row("thesis author first", lambda g: f"{g['first_author_count']}/{g['n']} ({100 * g['first_author_rate']:.0f}%)")
    row("harmonic credit mean", lambda g: f"{g['credit_mean']:.2f}")
    row("authors/article (SD)", lambda g: f"{g['authors_mean']:.1f} ({g['authors_sd']:.1f})")
    row("supervisors s/m", lambda g: ", ".join(f"{k}:{v}" for k, v in g["supervisor_distribution"].items()))
    row("published by completion", lambda g: "n/a" if g["published_by_completion_rate"] is None
        else f"{100 * g['published_by_completion_rate']:.1f}%")
    width = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, width)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def write_all(out: Path, files: dict[str, str], emit: Sequence[str]) -> None:
    for name, text in files.items():
        if name.rsplit(".", 1)[-1] in emit:
            atomic_write_text(out / name, text)


def run_pipeline(cfg: RunConfig) -> int:
    """ingest -> filter -> segment -> compare -> stats -> classify -> report."""
    out = _require(cfg.out, "--out")
    corpus = load_manifest(_require(cfg.manifest, "--manifest"))
    corpus, excluded = filter_publication_window(corpus, cfg.max_years_after)
    records, comparisons = compare_corpus(corpus, cfg.params, cfg.jobs)
    if not records:
        raise DegenerateInput("no articles left after the publication-window filter")

    gold = read_gold(cfg.gold) if cfg.gold else set(corpus.gold_article_ids()) & set(comparisons)
    files = compare_artifacts(records, comparisons, cfg.params)
    skipped: dict[str, str] = {}
    files.update(stats_artifacts(records, skipped))
    if gold:
        try:
            files.update(roc_artifacts(records, gold))
        except DegenerateInput as exc:
            skipped["roc"] = str(exc)
    for part, why in skipped.items():
        log.warning("%s skipped: %s", part, why)
    rep = report(records, cfg.cut, gold or None)
    rep["excluded_by_window"] = excluded
    rep["skipped"] = skipped
    files["summary.json"] = _dump(rep)
    files["summary.txt"] = report_table(rep)
    write_all(out, files, cfg.emit + ("txt",))
    return 0


def compare_artifacts(records, comparisons, params: SimilarityParams) -> dict[str, str]:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIXTURE_COLUMNS)
    w.writerows(record_row(r) for r in records)
    matches = {
        "match_definition": MATCH_DEFINITION,
        "params": params.__dict__,
        "articles": {aid: spans_to_json(c.spans) for aid, c in sorted(comparisons.items())},
    }
    return {
        "comparisons.csv": buf.getvalue(),
        "records.json": _dump({"records": [record_to_json(r) for r in records]}),
        "matches.json": _dump(matches),
    }


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="derivata", description="Identify thesis-derived articles.")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def manifest(sp, required=True):
        sp.add_argument("--manifest", type=Path, required=required)
        sp.add_argument("--max-years-after", type=int, default=2)

    def similarity(sp):
        sp.add_argument("--k", type=int, default=5)
        sp.add_argument("--window", type=int, default=4)
        sp.add_argument("--min-match", type=int, default=8)
        sp.add_argument("--jobs", type=int, default=1)

    def source(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--records", type=Path)
        g.add_argument("--fixture", nargs="?", const=BUNDLED,
                       help="validation-table directory (bundled copy if no value)")

    def out(sp, required=True):
        sp.add_argument("--out", type=Path, required=required)
        sp.add_argument("--emit", default=",".join(EMIT_FORMATS))

    sp = sub.add_parser("ingest", help="load and filter a manifest")
    manifest(sp)
    sp = sub.add_parser("segment", help="segment documents into sections")
    manifest(sp, required=False)
    sp.add_argument("--text", type=Path)
    sp = sub.add_parser("compare", help="measure articles against their theses")
    manifest(sp)
    similarity(sp)
    out(sp)
    sp = sub.add_parser("stats", help="Spearman, proximity matrix and dendrogram")
    source(sp)
    out(sp)
    sp = sub.add_parser("roc", help="ROC curve and Youden cut on Discussion matches")
    source(sp)
    sp.add_argument("--gold", type=Path)
    out(sp)
    sp = sub.add_parser("classify", help="apply the Discussion cut-off")
    source(sp)
    sp.add_argument("--cut", type=float, default=analysis.DEFAULT_CUT)
    sp = sub.add_parser("report", help="group summaries and authorship analytics")
    source(sp)
    sp.add_argument("--cut", type=float, default=analysis.DEFAULT_CUT)
    sp.add_argument("--gold", type=Path)
    out(sp, required=False)
    sp = sub.add_parser("run", help="full pipeline from a manifest")
    manifest(sp)
    similarity(sp)
    sp.add_argument("--cut", type=float, default=analysis.DEFAULT_CUT)
    sp.add_argument("--gold", type=Path)
    out(sp)
    sp = sub.add_parser("reproduce", help="check the published aggregates")
    sp.add_argument("--fixture", type=Path)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    get = lambda name, default=None: getattr(ns, name, default)  # noqa: E731
    params = SimilarityParams()
    if get("k") is not None:
        params = SimilarityParams(ns.k, ns.window, ns.min_match)
    emit = tuple(e.strip() for e in get("emit", ",".join(EMIT_FORMATS)).split(",") if e.strip())
    return RunConfig(
        subcommand=ns.subcommand,
        manifest=get("manifest"),
        records=get("records"),
        fixture=get("fixture"),
        gold=get("gold"),
        params=params,
        cut=get("cut", analysis.DEFAULT_CUT),
        max_years_after=get("max_years_after", 2),
        out=get("out"),
        emit=emit,
        jobs=get("jobs", 1),
    )


def dispatch(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cmd = cfg.subcommand
    if cmd == "reproduce":
        checks = reproduce_fixture(cfg.fixture)
        for c in checks:
            print(c.line())
        print(f"note: {NOT_REPRODUCIBLE}")
        failed = sorted({c.criterion for c in checks if not c.passed})
        print(f"{len(checks) - sum(not c.passed for c in checks)}/{len(checks)} checks passed"
              + (f"; failing criteria: {', '.join(failed)}" if failed else ""))
        return 1 if failed else 0

    if cmd == "ingest":
        corpus = load_manifest(cfg.manifest)
        kept, excluded = filter_publication_window(corpus, cfg.max_years_after)
        sys.stdout.write(_dump({
            "theses": len(kept.theses),
            "articles": len(kept.articles()),
            "excluded_by_window": excluded,
        }))
        return 0

    if cmd == "segment":
        if ns.text is not None:
            try:
                text = ns.text.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read {ns.text}: {exc.strerror}") from exc
            sys.stdout.write(_dump(segment(text, ns.text.stem).to_json()))
            return 0
        corpus = load_manifest(_require(cfg.manifest, "--manifest", "one of --manifest or --text is required"))
        docs = sorted(corpus.articles(), key=lambda d: d.id)
        sys.stdout.write(_dump([segment(d).to_json() for d in docs]))
        return 0

    if cmd == "compare":
        corpus, _ = filter_publication_window(load_manifest(cfg.manifest), cfg.max_years_after)
        records, comparisons = compare_corpus(corpus, cfg.params, cfg.jobs)
        write_all(cfg.out, compare_artifacts(records, comparisons, cfg.params), cfg.emit)
        return 0

    if cmd == "run":
        return run_pipeline(cfg)

    records = load_records(cfg)
    if cmd == "stats":
        write_all(cfg.out, stats_artifacts(records), cfg.emit)
    elif cmd == "roc":
        gold = read_gold(_require(cfg.gold, "--gold", "gold labels required for ROC"))
        write_all(cfg.out, roc_artifacts(records, gold), cfg.emit)
    elif cmd == "classify":
        classes, skipped = analysis.classify_all(records, cfg.cut)
        print("article_id,classification")
        for aid in sorted(classes):
            print(f"{aid},{classes[aid].value}")
        for aid in sorted(skipped):
            print(f"{aid},Unclassifiable")
    elif cmd == "report":
        gold = read_gold(cfg.gold) if cfg.gold else None
        rep = report(records, cfg.cut, gold)
        if cfg.out is not None:
            write_all(cfg.out, {"summary.json": _dump(rep), "summary.txt": report_table(rep)},
                      ("json", "txt"))
        sys.stdout.write(report_table(rep))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        return dispatch(cfg, ns)
    except DerivataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
