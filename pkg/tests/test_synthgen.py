"""
Tests for orthography conversion and confusion-matrix corruption.
"""

# Third-party imports
import numpy as np
import pytest
from scipy.stats import chisquare

# Local imports
from core.confusion import EPSILON, ConfusionMatrix
from core.synthgen import (
    AnnotatedToken,
    OrthographyProfile,
    RewriteRule,
    convert_orthography,
    convert_token,
    corrupt,
    corrupt_aligned,
    generate_pairs,
    generate_records,
    load_profile,
    load_shipped_profile,
    parse_annotated_line,
    parse_rules,
    synthesize_record,
    validate_profile,
)
from utils.error_handling import EmptyMatrix, InvalidRule


@pytest.fixture(scope="module")
def drinov():
    return load_shipped_profile("drinov")


@pytest.fixture(scope="module")
def ivanchev():
    return load_shipped_profile("ivanchev")


def test_first_person_ending_differs_between_profiles(drinov, ivanchev):
    token = AnnotatedToken("пея", "Vpitf-r1s")
    assert convert_token(token, drinov) == "пѣѫ"
    assert convert_token(token, ivanchev) == "пѣя"


def test_shipped_rules(ivanchev):
    tokens = parse_annotated_line("хляб път пишат/Vpitf-r3p ден Хляб, пея")
    assert convert_orthography(tokens, ivanchev) == ["хлѣбъ", "пѫтъ", "пишѫтъ", "день", "Хлѣбъ,", "пея"]


def test_condition_restricts_rule_to_tag(ivanchev):
    assert convert_token(AnnotatedToken("пишат", "Ncmsi"), ivanchev) == "пишатъ"


def test_conversion_is_idempotent(drinov, ivanchev):
    words = parse_annotated_line("хляб път пишат/Vpitf-r3p ден нощ тези пея/Vpitf-r1s сняг")
    for profile in (drinov, ivanchev):
        once = convert_orthography(words, profile)
        again = convert_orthography(
            [AnnotatedToken(text, token.morph_tag) for text, token in zip(once, words)], profile
        )
        assert again == once


def test_longest_match_wins_then_priority():
    rules = parse_rules("5\tab\tX\n1\ta\tY\n1\tb\tZ\n")
    profile = OrthographyProfile("test", rules)
    assert convert_token(AnnotatedToken("abb"), profile) == "XZ"

    tied = OrthographyProfile("tied", parse_rules("2\ta\tP\n1\ta\tQ\n"))
    assert convert_token(AnnotatedToken("a"), tied) == "Q"


def test_ampersand_stands_for_match():
    profile = OrthographyProfile("hard", parse_rules("1\t[бв]$\t&ъ\n"))
    assert convert_token(AnnotatedToken("хляб"), profile) == "хлябъ"


@pytest.mark.parametrize(
    "text",
    [
        "1\t\tx\n",
        "1\t(\tx\n",
        "1\ta*\tx\n",
        "one\ta\tx\n",
        "1\ta\n",
    ],
)
def test_invalid_rules_are_rejected(text):
    with pytest.raises(InvalidRule):
        parse_rules(text, source="bad.rules")


def test_invalid_rule_reports_location():
    with pytest.raises(InvalidRule) as excinfo:
        parse_rules("# comment\n1\ta\tb\n1\t(\tx\n", source="bad.rules")
    assert excinfo.value.line_number == 3
    assert "bad.rules:3" in str(excinfo.value)


def test_unstable_exception_fails_validation():
    profile = OrthographyProfile("loop", [RewriteRule("е", "ѣ")], {"дн": "ден"})
    with pytest.raises(InvalidRule):
        validate_profile(profile)


@pytest.mark.parametrize("rule_line", ["10\tа\tаа\n", "10\tа\tаа\t^V\n", "1\tа\tб\n1\tб\tа\n"])
def test_growing_rule_fails_load(tmp_path, rule_line):
    rules = tmp_path / "grow.rules"
    rules.write_text(rule_line, encoding="utf-8")
    with pytest.raises(InvalidRule) as excinfo:
        load_profile(str(rules))
    assert "idempotent" in str(excinfo.value)


def test_shipped_profiles_pass_validation(drinov, ivanchev):
    for profile in (drinov, ivanchev):
        validate_profile(profile)


def test_load_profile_from_files(tmp_path):
    rules = tmp_path / "mine.rules"
    rules.write_text("1\tе\tѣ\n", encoding="utf-8")
    exceptions = tmp_path / "mine.exceptions"
    exceptions.write_text("хем\tхѣмъ\n", encoding="utf-8")
    profile = load_profile(str(rules), str(exceptions))
    assert profile.name == "mine"
    assert convert_token(AnnotatedToken("хем"), profile) == "хѣмъ"
    assert convert_token(AnnotatedToken("мед"), profile) == "мѣд"


def test_identity_matrix_leaves_text_unchanged():
    matrix = ConfusionMatrix.from_counts({("а", "а"): 10, (" ", " "): 3})
    sentence = "а а ааа б"
    assert corrupt(sentence, matrix, np.random.default_rng(1)) == sentence


def test_empty_matrix_is_rejected():
    with pytest.raises(EmptyMatrix):
        corrupt("abc", ConfusionMatrix(), np.random.default_rng(0))


def test_corruption_matches_matrix_error_rate():
    matrix = ConfusionMatrix.from_counts({("a", "a"): 95, ("a", "b"): 5})
    sentence = "a" * 100_000
    noisy = corrupt(sentence, matrix, np.random.default_rng(2024))
    assert len(noisy) == len(sentence)
    assert noisy.count("b") / len(sentence) == pytest.approx(0.05, abs=0.005)
    assert corrupt(sentence, matrix, np.random.default_rng(2024)) == noisy


def test_emission_distribution_follows_row():
    matrix = ConfusionMatrix.from_counts({("a", "a"): 90, ("a", "b"): 6, ("a", "c"): 4})
    noisy = corrupt("a" * 20_000, matrix, np.random.default_rng(5))
    observed = [noisy.count("a"), noisy.count("b"), noisy.count("c")]
    expected = [18_000, 1_200, 800]
    assert chisquare(observed, expected).pvalue > 1e-4


def test_insertions_only_between_characters():
    matrix = ConfusionMatrix.from_counts({("a", "a"): 90, (EPSILON, "x"): 10})
    raw, ocr_aligned, gs_aligned = corrupt_aligned("a" * 10_001, matrix, np.random.default_rng(3))
    assert len(ocr_aligned) == len(gs_aligned)
    assert not raw.startswith("x")
    assert gs_aligned.count("@") == raw.count("x")
    assert 0.08 < raw.count("x") / 10_000 < 0.12


def test_deletions_are_aligned_as_padding():
    matrix = ConfusionMatrix.from_counts({("a", EPSILON): 1})
    raw, ocr_aligned, gs_aligned = corrupt_aligned("aaa", matrix, np.random.default_rng(0))
    assert raw == ""
    assert ocr_aligned == "@@@"
    assert gs_aligned == "aaa"


def test_whitespace_is_copied_without_whitespace_noise():
    matrix = ConfusionMatrix.from_counts({(" ", EPSILON): 10, ("a", "a"): 10, (EPSILON, " "): 5})
    noisy = corrupt("aa aa aa", matrix, np.random.default_rng(0))
    assert noisy == "aa aa aa"


def test_synthesize_record_keeps_token_count():
    matrix = ConfusionMatrix.from_counts({(" ", EPSILON): 10, ("a", "b"): 1, ("a", "a"): 9})
    record = synthesize_record(0, "aaa aaa aaa", matrix, seed=11, whitespace_noise=True)
    assert len(record.ocr_raw.split()) == 3
    assert record.source_id == "synthetic:0"
    assert len(record.ocr_aligned) == len(record.gs_aligned)


def test_generate_records_is_deterministic_across_job_counts(ivanchev):
    matrix = ConfusionMatrix.from_counts({("а", "а"): 80, ("а", "о"): 20, ("е", "с"): 5, ("е", "е"): 15})
    sentences = [parse_annotated_line("хляб вода пея"), parse_annotated_line("път сняг трева")] * 3
    serial = generate_records(sentences, ivanchev, matrix, seed=4)
    parallel = generate_records(sentences, ivanchev, matrix, seed=4, n_jobs=2)
    assert serial == parallel
    assert [r.gs_aligned.replace("@", "") for r in serial[:2]] == ["хлѣбъ вода пея", "пѫтъ снѣгъ трева"]


def test_generate_pairs_labels_corrupted_tokens(ivanchev):
    matrix = ConfusionMatrix.from_counts({("в", "б"): 1})
    pairs = generate_pairs([parse_annotated_line("вода хляб")], ivanchev, matrix, seed=0)
    tokens = pairs[0].tokens
    assert [(t.ocr_token, t.gs_token, t.label) for t in tokens] == [("бода", "вода", 1), ("хлѣбъ", "хлѣбъ", 0)]
