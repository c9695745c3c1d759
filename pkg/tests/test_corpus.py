"""
Tests for aligned-corpus parsing, token alignment, filtering and statistics.
"""

# Standard library imports
import math

# Third-party imports
import pytest

# Local imports
from components.report_display import corpus_stats_frame
from core.corpus import (
    AlignedRecord,
    CorpusStats,
    align_tokens,
    corpus_stats,
    export_token_pairs,
    filter_by_noise,
    format_aligned,
    parse_aligned,
    read_records,
    sentence_frame,
    split_train_dev,
)
from utils.error_handling import DataError, MalformedRecord

TRIPLET = "[OCR_toInput] th ca#t\n[OCR_aligned] th@ ca#t\n[GS_aligned] the cat@\n"


def test_parse_aligned_reads_triplets():
    records = parse_aligned(TRIPLET + "\n" + TRIPLET, source="page")
    assert len(records) == 2
    assert records[0] == AlignedRecord("th ca#t", "th@ ca#t", "the cat@", "page:0")
    assert records[1].source_id == "page:1"


def test_parse_aligned_without_source_numbers_records():
    assert [r.source_id for r in parse_aligned(TRIPLET)] == ["0"]


def test_parse_aligned_reports_missing_tag_line():
    text = "[OCR_toInput] ab\n[GS_aligned] ab\n[GS_aligned] ab\n"
    with pytest.raises(MalformedRecord) as excinfo:
        parse_aligned(text)
    assert excinfo.value.line_number == 2


def test_parse_aligned_rejects_length_mismatch():
    text = "[OCR_toInput] ab\n[OCR_aligned] ab\n[GS_aligned] abc\n"
    with pytest.raises(MalformedRecord):
        parse_aligned(text)


def test_parse_aligned_rejects_incomplete_record():
    with pytest.raises(MalformedRecord):
        parse_aligned("[OCR_toInput] ab\n[OCR_aligned] ab\n\n")


def test_align_tokens_slices_before_stripping():
    sentence = align_tokens(parse_aligned(TRIPLET)[0])
    assert [(t.ocr_token, t.gs_token, t.label) for t in sentence.tokens] == [
        ("th", "the", 1),
        ("cat", "cat", 0),
    ]
    assert sentence.tokens[1].char_span == (4, 8)
    assert sentence.ocr_text == "th cat"
    assert sentence.gs_text == "the cat"


def test_align_tokens_leading_padding(make_sentence):
    sentence = make_sentence("xab cd", "@ab cd")
    assert [(t.ocr_token, t.gs_token, t.label) for t in sentence.tokens] == [("xab", "ab", 1), ("cd", "cd", 0)]


def test_align_tokens_deleted_token(make_sentence):
    sentence = make_sentence("ab @@", "ab cd")
    assert sentence.tokens[1].ocr_token == ""
    assert sentence.tokens[1].label == 1


def test_corpus_stats_on_fixture(aligned_20):
    stats = corpus_stats(aligned_20)
    assert stats.n_sentences == 20
    assert stats.n_words == 40
    assert stats.n_errors == 5
    assert stats.mean_cer == pytest.approx(2.5)
    assert stats.std_cer == pytest.approx(math.sqrt(18.75))


def test_corpus_stats_excludes_empty_gold(make_sentence):
    stats = corpus_stats([make_sentence("ab", "ab"), make_sentence("", "")])
    assert stats.n_sentences == 2
    assert stats.mean_cer == 0.0
    frame = sentence_frame([make_sentence("", "")])
    assert math.isnan(frame.loc[0, "cer"])


def test_published_statistics_rows_format():
    frame = corpus_stats_frame(CorpusStats(4900, 68511, 25703, None, None), name="ICDAR")
    row = frame.iloc[0]
    assert row["Sentences"] == "4,900"
    assert row["Words"] == "68,511"
    assert row["Errors"] == "25,703"
    assert row["CER (%)"] == "N/A"

    small = corpus_stats_frame(CorpusStats(227, 5152, 589, 11.4, 9.2)).iloc[0]
    assert (small["Sentences"], small["Words"], small["Errors"]) == ("227", "5,152", "589")


def test_filter_by_noise_is_strict(make_sentence):
    half = make_sentence("ab", "ax")
    clean = make_sentence("ab", "ab")
    assert half.norm_lev == pytest.approx(0.5)
    assert filter_by_noise([half, clean], 0.5) == [clean]
    assert filter_by_noise([half, clean], 0.6) == [half, clean]


@pytest.mark.parametrize("threshold", [0.0, -0.1, 1.5])
def test_filter_by_noise_rejects_bad_threshold(threshold):
    with pytest.raises(DataError):
        filter_by_noise([], threshold)


def test_format_aligned_is_parseable():
    records = parse_aligned(TRIPLET + "\n" + TRIPLET)
    reparsed = parse_aligned(format_aligned(records))
    assert [(r.ocr_raw, r.ocr_aligned, r.gs_aligned) for r in reparsed] == [
        (r.ocr_raw, r.ocr_aligned, r.gs_aligned) for r in records
    ]


def test_split_train_dev():
    items = list(range(100))
    train, dev = split_train_dev(items, 0.1, seed=3)
    assert len(train) == 90 and len(dev) == 10
    assert sorted(train + dev) == items
    assert split_train_dev(items, 0.1, seed=3) == (train, dev)
    assert split_train_dev([1], 0.1, seed=3) == ([1], [])
    assert len(split_train_dev([1, 2], 0.1, seed=3)[1]) == 1


def test_export_token_pairs(aligned_20, tmp_path):
    path = tmp_path / "pairs.ndjson"
    assert export_token_pairs(aligned_20, str(path)) == 40
    records = read_records(str(path))
    assert records[0] == {
        "gs_token": "пѣсень",
        "index": 0,
        "label": 1,
        "ocr_token": "пѣсенъ",
        "source_id": "aligned_20:0",
    }
    assert sum(record["label"] for record in records) == 5
