import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from derivata.corpus import Document, Role, SectionLabel
from derivata.errors import ConfigError, IndexTooShortError
from derivata.segmenter import segment
from derivata.similarity import (
    MatchSpan,
    SimilarityParams,
    _BASE,
    _MOD,
    _maximal_runs,
    _token_hash,
    build_index,
    compare,
    kgram_hashes,
    match_section,
    resolve_overlaps,
    spans_to_json,
    tokenize,
    winnow,
)

from conftest import paragraph, pseudo_words


def all_maximal_runs(a, t):
    """Every maximal diagonal run of equal tokens, by exhaustive scan."""
    runs = set()
    for p in range(len(a)):
        for q in range(len(t)):
            if a[p] != t[q] or (p and q and a[p - 1] == t[q - 1]):
                continue
            n = 0
            while p + n < len(a) and q + n < len(t) and a[p + n] == t[q + n]:
                n += 1
            runs.add((p, q, n))
    return runs


def small_vocab_pair(rng, n=200, vocab=3):
    words = np.array(["ka", "lo", "mi", "nu", "po"][:vocab])
    a = list(words[rng.integers(0, vocab, n)])
    t = list(words[rng.integers(0, vocab, n)])
    # plant a few longer shared stretches on top of the random noise
    for _ in range(3):
        ln = int(rng.integers(8, 30))
        i, j = int(rng.integers(0, n - ln)), int(rng.integers(0, n - ln))
        a[i:i + ln] = t[j:j + ln]
    return a, t


def section_set(body: str, title: str = "Title"):
    return segment(f"{title}\n\nIntroduction\n{body}\n")


def thesis_doc(text: str) -> Document:
    return Document("T", Role.THESIS, ("x",), 2010, text)


# -- primitives -----------------------------------------------------------------

def test_tokenize_offsets_and_case():
    ts = tokenize("Émile's  data_set, 3.5 GHz!")
    assert ts.tokens == ("émile", "s", "data", "set", "3", "5", "ghz")
    src = "Émile's  data_set, 3.5 GHz!"
    assert [src[a:b].lower() for a, b in ts.offsets] == list(ts.tokens)


def test_kgram_hash_matches_direct_polynomial():
    toks = "a b c d e f g a b c d e".split()
    direct = []
    for i in range(len(toks) - 2):
        h = 0
        for tok in toks[i:i + 3]:
            h = (h * _BASE + _token_hash(tok)) % _MOD
        direct.append(h)
    assert kgram_hashes(toks, 3) == direct
    assert direct[0] == direct[7]
    assert kgram_hashes(toks[:2], 3) == []


def test_winnow_rightmost_tie():
    assert winnow([5, 1, 1, 7, 9], 3) == [2]
    assert winnow([3, 3, 3], 5) == [2]
    assert winnow([], 4) == []


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=60), st.integers(1, 8))
def test_winnow_covers_every_window(hashes, w):
    sel = winnow(hashes, w)
    assert sel == sorted(set(sel))
    for start in range(max(1, len(hashes) - w + 1)):
        window = range(start, min(start + w, len(hashes)))
        lo = min(hashes[i] for i in window)
        assert max(i for i in window if hashes[i] == lo) in sel


@pytest.mark.parametrize("kw", [{"k": 1}, {"window": 0}, {"k": 6, "min_match_tokens": 5}])
def test_params_validation(kw):
    with pytest.raises(ConfigError):
        SimilarityParams(**kw)


def test_index_too_short():
    with pytest.raises(IndexTooShortError, match="TooShort"):
        build_index(tokenize("only four tokens here"), k=5)


def test_index_maps_to_all_positions():
    toks = tokenize(" ".join(["a b c d e"] * 3))
    idx = build_index(toks, k=5, window=1)
    assert sorted(p for ps in idx.entries.values() for p in ps) == list(range(len(toks) - 4))
    h = kgram_hashes(toks.tokens, 5)[0]
    assert idx.entries[h] == (0, 5, 10)


def test_resolve_overlaps_longest_first():
    spans = resolve_overlaps({(0, 100, 10), (5, 200, 20), (40, 0, 7)}, 8)
    # the 10-run keeps only its uncovered prefix of 5, too short; the 7-run is below min
    assert spans == [MatchSpan(5, 200, 20)]
    assert resolve_overlaps({(0, 100, 30), (5, 200, 20)}, 8) == [MatchSpan(0, 100, 30)]
    assert resolve_overlaps({(3, 100, 12), (10, 200, 20)}, 8) == [MatchSpan(10, 200, 20)]
    assert resolve_overlaps({(0, 100, 19), (10, 200, 20)}, 8) == [
        MatchSpan(0, 100, 10), MatchSpan(10, 200, 20)]


# -- oracle equivalence ---------------------------------------------------------

def _oracle_matches(a, t, min_len):
    return resolve_overlaps({r for r in all_maximal_runs(a, t) if r[2] >= min_len}, min_len)


@pytest.mark.parametrize("seed", range(25))
def test_matches_equal_bruteforce(seed):
    rng = np.random.default_rng(seed)
    a, t = small_vocab_pair(rng, n=120, vocab=4)
    idx = build_index(tokenize(" ".join(t)), k=5, window=4)
    got = match_section(tokenize(" ".join(a)), idx, 8)
    assert got == _oracle_matches(a, t, 8)


@pytest.mark.parametrize("seed", range(10))
def test_winnowing_guarantee_on_random_pairs(seed):
    k, w = 5, 4
    rng = np.random.default_rng(100 + seed)
    a, t = small_vocab_pair(rng)
    idx = build_index(tokenize(" ".join(t)), k, w)
    found = _maximal_runs(a, idx)
    needed = {r for r in all_maximal_runs(a, t) if r[2] >= k + w - 1}
    assert needed <= found


def test_spans_are_sound(rng):
    a, t = small_vocab_pair(rng, vocab=2)
    idx = build_index(tokenize(" ".join(t)), 5, 4)
    spans = match_section(tokenize(" ".join(a)), idx, 8)
    covered = set()
    for m in spans:
        assert a[m.article_start:m.article_start + m.length] == t[m.thesis_start:m.thesis_start + m.length]
        assert m.length >= 8
        span = set(range(*m.article_span))
        assert not span & covered
        covered |= span


# -- end to end -----------------------------------------------------------------

def test_self_comparison(rng):
    body = paragraph(pseudo_words(rng, 2000))
    art = section_set(body)
    comp = compare(art, thesis_doc("Title\n" + body))
    assert comp.similarity_index == 100
    assert comp.section_matches[SectionLabel.INTRODUCTION] == 1


def test_planted_fraction(rng):
    thesis_words = pseudo_words(rng, 3000)
    fresh = pseudo_words(rng, 700)
    art_words = fresh[:200] + thesis_words[1000:1300] + fresh[200:]
    comp = compare(section_set(" ".join(art_words), "zzzzq"), thesis_doc(" ".join(thesis_words)))
    assert comp.covered_tokens == 300
    assert comp.scored_tokens == 1001
    assert comp.similarity_index == 30
    assert comp.total_matches == 1


def test_references_counted_but_not_scored(rng):
    t = pseudo_words(rng, 500)
    text = ("Title words\nIntroduction\n" + " ".join(pseudo_words(rng, 100))
            + "\nReferences\n" + " ".join(t[:100]) + "\n")
    comp = compare(segment(text), thesis_doc(" ".join(t)))
    assert comp.section_matches[SectionLabel.REFERENCES] == 1
    assert comp.covered_tokens == 0
    assert comp.similarity_index == 0
    assert SectionLabel.ABSTRACT in comp.missing


def test_unrelated_documents(rng):
    comp = compare(section_set(" ".join(pseudo_words(rng, 800))),
                   thesis_doc(" ".join(pseudo_words(rng, 3000))))
    assert comp.similarity_index == 0
    assert comp.total_matches == 0


def test_prebuilt_index_must_match_params(rng):
    idx = build_index(tokenize(" ".join(pseudo_words(rng, 100))), k=6)
    with pytest.raises(ConfigError):
        compare(section_set("a b c"), idx, SimilarityParams())
    compare(section_set("a b c"), idx, SimilarityParams(k=6))


def test_spans_json_round_trip(rng):
    t = pseudo_words(rng, 300)
    comp = compare(section_set(" ".join(t[50:90])), thesis_doc(" ".join(t)))
    blob = spans_to_json(comp.spans)
    assert blob["Introduction"] == [{"article_start": 0, "thesis_start": 50, "length": 40}]
    assert blob["Results"] == []
