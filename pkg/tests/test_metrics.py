"""
Tests for edit-distance metrics, detection scores, improvement and error types.
"""

# Standard library imports
import itertools
import math
from functools import lru_cache

# Third-party imports
import pytest

# Local imports
from core.detect import Lexicon
from core.metrics import (
    ErrorType,
    cer,
    classify_error_type,
    detection_scores,
    improvement_pct,
    levenshtein,
    mean_and_std,
    normalized_levenshtein,
    segmentation_error_census,
    word_error_kind_census,
)
from utils.error_handling import EmptyReference, LengthMismatch, NotAnError


@lru_cache(maxsize=None)
def recursive_distance(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        recursive_distance(a[1:], b) + 1,
        recursive_distance(a, b[1:]) + 1,
        recursive_distance(a[1:], b[1:]) + (a[0] != b[0]),
    )


def all_strings(alphabet: str, max_length: int):
    for length in range(max_length + 1):
        for chars in itertools.product(alphabet, repeat=length):
            yield "".join(chars)


def test_levenshtein_matches_recursive_definition_on_short_strings():
    strings = list(all_strings("abc", 4))
    for a in strings:
        for b in strings:
            assert levenshtein(a, b) == recursive_distance(a, b)


@pytest.mark.slow
def test_levenshtein_matches_recursive_definition_up_to_length_six():
    strings = list(all_strings("abc", 6))
    for a in strings:
        for b in strings:
            assert levenshtein(a, b) == recursive_distance(a, b)


def test_levenshtein_counts_code_points():
    assert levenshtein("пѣя", "пѣѫ") == 1
    assert levenshtein("", "хлѣбъ") == 5


def test_normalized_levenshtein():
    assert normalized_levenshtein("", "") == 0.0
    assert normalized_levenshtein("abc", "abd") == pytest.approx(1 / 3)
    assert normalized_levenshtein("abc", "") == 1.0


def test_cer_is_percent_of_gold_length():
    assert cer("abd", "abc") == pytest.approx(100 / 3)
    assert cer("abc", "abc") == 0.0
    with pytest.raises(EmptyReference):
        cer("abc", "")


def test_improvement_sums_before_dividing():
    report = improvement_pct([("abxd", "abcd", "abcd"), ("xyzw", "xyzw", "xyzq")])
    assert report.lev_ocr_sum == 2
    assert report.lev_corrected_sum == 1
    assert report.gs_len_sum == 8
    assert report.improvement_pct == pytest.approx(1 / 8)


def test_improvement_is_negative_when_correction_hurts():
    report = improvement_pct([("abcd", "abxx", "abcd")])
    assert report.improvement_pct == pytest.approx(-0.5)


def test_improvement_on_error_free_text_is_zero():
    assert improvement_pct([("abc", "abc", "abc")]).improvement_pct == 0.0
    assert improvement_pct([]).improvement_pct == 0.0
    with pytest.raises(EmptyReference):
        improvement_pct([("a", "a", "")])


def test_detection_scores():
    report = detection_scores([1, 0, 1, 0], [1, 1, 0, 0])
    assert (report.tp, report.fp, report.fn, report.tn) == (1, 1, 1, 1)
    assert report.precision == pytest.approx(0.5)
    assert report.recall == pytest.approx(0.5)
    assert report.f1 == pytest.approx(0.5)
    assert not report.precision_undefined and not report.recall_undefined


def test_detection_scores_flag_zero_denominators():
    report = detection_scores([0, 0, 0], [0, 0, 0])
    assert report.precision == 0.0 and report.recall == 0.0 and report.f1 == 0.0
    assert report.precision_undefined and report.recall_undefined


def test_detection_scores_length_mismatch():
    with pytest.raises(LengthMismatch):
        detection_scores([1, 0], [1])


def test_classify_error_type():
    assert classify_error_type(["wrd"], ["word"]) == ErrorType.MISSING_CHARACTER
    assert classify_error_type(["woord"], ["word"]) == ErrorType.HALLUCINATION
    assert classify_error_type(["ward"], ["word"]) == ErrorType.MISRECOGNIZED_CHARACTER
    assert classify_error_type(["wrdx"], ["word"]) == ErrorType.MISRECOGNIZED_CHARACTER
    assert classify_error_type(["ab"], ["a", "b"]) == ErrorType.RUN_ON
    assert classify_error_type(["a", "b"], ["ab"]) == ErrorType.INCORRECT_SPLIT
    with pytest.raises(NotAnError):
        classify_error_type(["word"], ["word"])


def test_census_on_fixture(aligned_20):
    census = segmentation_error_census(aligned_20)
    assert census.total == 5
    assert census.misrecognized_character == 5
    assert census.word_segmentation == 0
    assert census.missing_character == census.hallucination == 0


def test_census_segmentation_errors(make_sentence):
    run_on = make_sentence("ab@cd", "ab cd")
    split = make_sentence("ab d", "abcd")
    census = segmentation_error_census([run_on, split])
    assert census.run_on == 1
    assert census.incorrect_split == 1
    assert census.word_segmentation == 2
    assert census.other == 0


def test_census_one_to_one_breakdown(make_sentence):
    sentence = make_sentence("wrd@ woord wxrd", "word wo@rd word")
    census = segmentation_error_census([sentence])
    assert census.total == 3
    assert census.missing_character == 1
    assert census.hallucination == 1
    assert census.misrecognized_character == 1


def test_word_error_kinds(make_sentence):
    lexicon = Lexicon.from_tokens(["дом", "вода", "сода"])
    sentence = make_sentence("дим сода", "дом вода")
    kinds = word_error_kind_census([sentence], lexicon)
    assert kinds.non_word == 1
    assert kinds.real_word == 1


def test_mean_and_std():
    assert mean_and_std([]) == (None, None)
    mean, std = mean_and_std([10, 0, 0, 0])
    assert mean == pytest.approx(2.5)
    assert std == pytest.approx(math.sqrt(18.75))
