import numpy as np
import pytest

from masksum.corruptions import harvest_entity_pool, negate
from masksum.data import generate_pairs, load_tsv, synth_corpus, write_tsv


def test_load_tsv_basic(tmp_path):
    path = tmp_path / "data.tsv"
    path.write_text("src\tsum\n", encoding="utf-8")
    assert load_tsv(path) == [("src", "sum")]


def test_load_tsv_rejects_extra_tab(tmp_path):
    path = tmp_path / "data.tsv"
    path.write_text("a\tb\nx\ty\tz\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 2: expected 2 fields"):
        load_tsv(path)


def test_load_tsv_rejects_missing_tab(tmp_path):
    path = tmp_path / "data.tsv"
    path.write_text("no tab here\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        load_tsv(path)


def test_load_tsv_normalizes_crlf(tmp_path):
    path = tmp_path / "data.tsv"
    path.write_bytes(b"a\tb\r\nc\td\r\n")
    assert load_tsv(path) == [("a", "b"), ("c", "d")]


def test_load_tsv_rejects_empty_file(tmp_path):
    path = tmp_path / "data.tsv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="empty file"):
        load_tsv(path)


def test_round_trip_write_then_load(tmp_path):
    pairs = generate_pairs(20, seed=5)
    path = tmp_path / "data.tsv"
    write_tsv(pairs, path)
    assert load_tsv(path) == pairs


def test_generate_pairs_deterministic_and_sized(tmp_path):
    a = synth_corpus(50, seed=9, path=tmp_path / "a.tsv")
    b = synth_corpus(50, seed=9, path=tmp_path / "b.tsv")
    assert a == b
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert len((tmp_path / "a.tsv").read_text().splitlines()) == 50
    assert generate_pairs(50, seed=10) != a


def test_reference_lengths_span_seven_to_sixteen_with_median_near_twelve():
    pairs = generate_pairs(3000, seed=1)
    lengths = [len(ref.split()) for _src, ref in pairs]
    assert min(lengths) == 7
    assert max(lengths) == 16
    assert 11 <= float(np.median(lengths)) <= 13


def test_references_end_with_period_and_appear_inside_source():
    for src, ref in generate_pairs(200, seed=3):
        ref_words = ref.split()
        assert ref_words[-1] == "."
        src_words = src.split()
        # core words occur in the source in order (filler interleaved)
        it = iter(src_words)
        assert all(w in it for w in ref_words[:-1])


def test_corpus_supports_every_corruption_kind():
    pairs = generate_pairs(500, seed=7)
    refs = [ref for _s, ref in pairs]
    assert harvest_entity_pool(refs)
    negatable = sum(1 for r in refs if negate(r) is not None)
    assert negatable > 50
    long_enough = sum(1 for r in refs if len(r.split()) > 5)
    assert long_enough == len(refs)


def test_invalid_count_rejected():
    with pytest.raises(ValueError):
        generate_pairs(0, seed=1)
