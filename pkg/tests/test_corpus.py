import csv
import json

import pytest

from derivata.corpus import (
    FIXTURE_COLUMNS,
    ComparisonRecord,
    Document,
    Partition,
    Role,
    SectionLabel,
    ThesisRecord,
    authorship,
    filter_publication_window,
    fixture_paths,
    load_fixture,
    load_fixture_dir,
    load_manifest,
    read_records_csv,
    record_from_json,
    record_to_json,
    save_manifest,
    write_records_csv,
)
from derivata.errors import DanglingReference, DuplicateId, FixtureIntegrityError, IngestError

from conftest import write_manifest


def _thesis(tid="T1", author="alice", year=2010, **kw):
    return {"id": tid, "author": author, "supervisors": ["bob"], "completion_year": year,
            "text": f"thesis {tid}", **kw}


def _article(aid, tid="T1", year=2010, authors=("alice", "bob")):
    return {"id": aid, "thesis_id": tid, "authors": list(authors), "year": year,
            "text": f"article {aid}"}


def test_minimal_manifest(tmp_path):
    path = write_manifest(tmp_path, [_thesis()],
                          [_article("A1", authors=("carl", "alice", "bob")), _article("A2")])
    corpus = load_manifest(path)
    assert len(corpus.documents) == 3
    assert list(corpus.theses) == ["T1"]
    assert corpus.documents["A1"].author_ids == ("carl", "alice", "bob")
    assert corpus.documents["T1"].role is Role.THESIS
    assert corpus.thesis_for("A2").supervisor_ids == {"bob"}


def test_dangling_reference(tmp_path):
    path = write_manifest(tmp_path, [_thesis()], [_article("A1", tid="T99")])
    with pytest.raises(DanglingReference) as err:
        load_manifest(path)
    assert err.value.args == ("T99",)


def test_duplicate_id(tmp_path):
    path = write_manifest(tmp_path, [_thesis()], [_article("A1"), _article("A1")])
    with pytest.raises(DuplicateId):
        load_manifest(path)


def test_missing_text_file_names_document(tmp_path):
    path = write_manifest(tmp_path, [_thesis()], [_article("A1")])
    (tmp_path / "texts" / "A1.txt").unlink()
    with pytest.raises(IngestError, match="A1"):
        load_manifest(path)


def test_thesis_author_must_be_on_byline(tmp_path):
    path = write_manifest(tmp_path, [_thesis()], [_article("A1", authors=("zed",))])
    with pytest.raises(IngestError, match="not in byline"):
        load_manifest(path)


def test_candidate_cannot_supervise_self():
    with pytest.raises(IngestError):
        ThesisRecord("T1", "alice", frozenset({"alice"}), 2010)


def test_thesis_has_single_author():
    with pytest.raises(IngestError):
        Document("T1", Role.THESIS, ("a", "b"), 2010, "x")


def test_full_scale_manifest(tmp_path):
    theses = [_thesis(f"T{i}", author=f"cand{i}") for i in range(51)]
    articles = [_article(f"A{j}", tid=f"T{j % 51}", authors=(f"cand{j % 51}",)) for j in range(199)]
    corpus = load_manifest(write_manifest(tmp_path, theses, articles))
    assert len(corpus.thesis_documents()) == 51
    assert len(corpus.articles()) == 199


@pytest.mark.parametrize("offset, kept", [(2, True), (3, False), (-9, True), (0, True)])
def test_publication_window(tmp_path, offset, kept):
    path = write_manifest(tmp_path, [_thesis(year=2010)], [_article("A1", year=2010 + offset)])
    filtered, excluded = filter_publication_window(load_manifest(path))
    assert ("A1" in filtered.documents) is kept
    assert excluded == ([] if kept else ["A1"])


def test_manifest_round_trip(tmp_path):
    src = write_manifest(tmp_path, [_thesis(gold_articles=["A2"])],
                         [_article("A1", authors=("x", "alice")), _article("A2", year=2007)])
    corpus = load_manifest(src)
    out = tmp_path / "copy" / "manifest.json"
    save_manifest(corpus, out)
    again = load_manifest(out)
    assert again.documents == corpus.documents
    assert again.theses == corpus.theses
    assert again.article_thesis == corpus.article_thesis


def test_authorship():
    thesis = ThesisRecord("T1", "alice", frozenset({"bob", "carol", "dora"}), 2010)
    art = Document("A1", Role.ARTICLE, ("bob", "alice", "eve", "carol"), 2011, "x")
    assert authorship(art, thesis) == ((2, 4), (2, 3))


# -- fixture -------------------------------------------------------------------

def test_fixture_sizes(fixture):
    assert len(fixture) == 199
    sizes = [len(fixture.by_partition(p)) for p in Partition]
    assert sizes == [40, 106, 53]
    assert fixture.integrity_warnings == []


def test_fixture_row_parsing(fixture):
    rec = next(r for r in fixture.records if r.article_id == "Author3-Article1")
    assert rec.similarity_index == 61
    assert rec.matches(SectionLabel.DISCUSSION) == 30
    assert rec.total_matches == 175
    assert rec.author_position == (1, 7)
    assert rec.supervisor_overlap == (2, 2)


def test_fixture_zero_row(fixture):
    unsupervised = fixture.by_partition(Partition.NON_DERIV_UNSUPERVISED)
    rec = next(r for r in unsupervised if r.article_id == "Author2-Article2")
    assert rec.similarity_index == 0
    assert rec.total_matches == 0
    assert all(rec.matches(label) == 0 for label in SectionLabel)


def test_fixture_is_ordered_and_deterministic(fixture):
    again = load_fixture_dir()
    assert [r.article_id for r in again.records] == [r.article_id for r in fixture.records]
    with open(fixture_paths()[0], newline="") as fh:
        first_ids = [row["AUTHORS-ARTICLES"] for row in csv.DictReader(fh)]
    assert [r.article_id for r in fixture.records[:40]] == first_ids


def test_every_record_sums_or_warns(fixture):
    for rec in fixture.records:
        assert rec.section_sum == rec.total_matches or rec.article_id in fixture.integrity_warnings


def _bad_table(tmp_path):
    path = tmp_path / "bad.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIXTURE_COLUMNS)
        w.writerow(["X-1", "5%", 0, 0, 1, 1, 0, 0, 0, 3, "1/2", "1/1"])
        w.writerow(["X-2", "7%", 0, 0, 1, 1, 0, 0, 0, 2, "1/2", "1/1"])
    return path


def test_integrity_error_strict(tmp_path):
    with pytest.raises(FixtureIntegrityError, match="X-1"):
        read_records_csv(_bad_table(tmp_path))


def test_integrity_warn_mode(tmp_path):
    bad = _bad_table(tmp_path)
    fx = load_fixture([bad, bad, bad], strict=False)
    assert len(fx) == 6
    assert fx.integrity_warnings == ["X-1"] * 3


def test_empty_fixture_dir(tmp_path):
    with pytest.raises(FixtureIntegrityError):
        load_fixture_dir(tmp_path)


def test_wrong_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("A,B\n1,2\n")
    with pytest.raises(FixtureIntegrityError, match="header"):
        read_records_csv(path)


def test_records_csv_round_trip(fixture, tmp_path):
    out = tmp_path / "records.csv"
    write_records_csv(fixture.records, out)
    back, _ = read_records_csv(out)
    assert back == fixture.records
    with open(fixture_paths()[1], newline="") as fh:
        original = list(csv.reader(fh))
    assert list(csv.reader(out.open(newline="")))[41:147] == original[1:]


def test_record_json_round_trip():
    rec = ComparisonRecord("A1", "T1", 12.0, {SectionLabel.RESULTS: 2, SectionLabel.DISCUSSION: 1},
                           3, (2, 5), (1, 2), year_offset=-1,
                           missing_sections=frozenset({SectionLabel.ABSTRACT}))
    blob = json.loads(json.dumps(record_to_json(rec)))
    back = record_from_json(blob)
    assert back.section_sum == 3
    assert back.missing_sections == {SectionLabel.ABSTRACT}
    assert record_to_json(back) == blob


@pytest.mark.parametrize("kw", [
    {"similarity_index": 101.0},
    {"author_position": (3, 2)},
    {"supervisor_overlap": (2, 1)},
])
def test_record_invariants(kw):
    base = dict(article_id="A", thesis_id="T", similarity_index=1.0, section_matches={},
                total_matches=0, author_position=(1, 1), supervisor_overlap=(0, 1))
    base.update(kw)
    with pytest.raises(ValueError):
        ComparisonRecord(**base)
