"""
Tests for the detect-then-correct pipeline and its reports.
"""

# Third-party imports
import numpy as np
import pytest

# Local imports
from core.confusion import ConfusionMatrix
from core.corpus import align_tokens, split_train_dev
from core.correctors import KnnCorrector, Seq2SeqCorrector
from core.detect import DictionaryDetector, Lexicon
from core.pipeline import (
    CorrectionRecord,
    apply_corrections,
    build_corrector,
    build_detector,
    build_report,
    correct_sentences,
    detection_records,
    labels_from_records,
    pipeline_correct,
    run,
)
from core.seq2seq import corrector_pairs, train
from core.synthgen import AnnotatedToken, generate_records, load_shipped_profile
from utils.config import PipelineConfig, corrector_variant
from utils.error_handling import LengthMismatch, ValidationError


@pytest.fixture
def gold_lexicon(aligned_20) -> Lexicon:
    return Lexicon.from_tokens(token.gs_token for sentence in aligned_20 for token in sentence.tokens)


def test_pipeline_correct_leaves_unflagged_tokens(small_lexicon):
    corrector = KnnCorrector(small_lexicon)
    tokens = ["хлѣбь", "водаа", "домь"]
    assert pipeline_correct(tokens, None, corrector, labels=[1, 0, 1]) == ["хлѣбъ", "водаа", "домъ"]
    with pytest.raises(LengthMismatch):
        pipeline_correct(tokens, None, corrector, labels=[1])


def test_dictionary_and_knn_fix_the_fixture(aligned_20, gold_lexicon):
    report, records, labels = run(aligned_20, DictionaryDetector(gold_lexicon), KnnCorrector(gold_lexicon))
    assert sum(map(sum, labels)) == 5
    assert report.detection.precision == 1.0 and report.detection.recall == 1.0
    assert [(record.original, record.corrected) for record in records] == [
        ("пѣсенъ", "пѣсень"),
        ("зжбъ", "зѫбъ"),
        ("вткъ", "вѣкъ"),
        ("бѣдое", "бѣлое"),
        ("морт", "морѣ"),
    ]
    assert report.improvement.lev_ocr_sum == 5
    assert report.improvement.lev_corrected_sum == 0
    assert report.improvement.gs_len_sum == 200
    assert report.improvement.improvement_pct == pytest.approx(0.025)
    assert report.correction.n_changed == 5
    assert report.correction.mean_cer_after == pytest.approx(0.0)
    assert "detect_correct" in report.timings and "evaluate" in report.timings


def test_error_free_corpus(make_sentence):
    sentences = [make_sentence("хлѣбъ вода", "хлѣбъ вода", f"clean:{i}") for i in range(3)]
    lexicon = Lexicon.from_tokens(["хлѣбъ", "вода"])
    report, records, _ = run(sentences, DictionaryDetector(lexicon), KnnCorrector(lexicon))
    assert records == []
    assert report.improvement.improvement_pct == 0.0
    assert report.detection.recall_undefined
    assert report.detection.precision_undefined
    assert report.detection.f1 == 0.0


def test_negative_improvement_is_reported(make_sentence):
    sentence = make_sentence("градъ село", "градъ село")
    # Flagging a correct word and replacing it with a neighbour makes things worse
    corrector = KnnCorrector(Lexicon.from_counts({"селѣ": 1}))
    labels, corrected, _ = correct_sentences([sentence], None, corrector, labels=[[0, 1]])
    assert corrected == [["градъ", "селѣ"]]
    report = build_report([sentence], labels, corrected)
    assert report.improvement.improvement_pct == pytest.approx(-0.1)
    assert report.detection.fp == 1


def test_precomputed_labels_skip_the_detector(aligned_20, gold_lexicon):
    labels = [[0, 0] for _ in aligned_20]
    labels[0] = [1, 0]
    out_labels, corrected, records = correct_sentences(aligned_20, None, KnnCorrector(gold_lexicon), labels=labels)
    assert out_labels == labels
    assert corrected[0] == ["пѣсень", "дом"]
    assert len(records) == 1
    with pytest.raises(LengthMismatch):
        correct_sentences(aligned_20, None, KnnCorrector(gold_lexicon), labels=labels[:3])


def test_detection_records_round_trip(aligned_20, gold_lexicon):
    detector = DictionaryDetector(gold_lexicon)
    per_sentence = [detector.detect([token.ocr_token for token in sentence.tokens]) for sentence in aligned_20]
    records = detection_records(aligned_20, per_sentence)
    assert len(records) == 40
    assert records[0] == {"source_id": "aligned_20:0", "token_index": 0, "token": "пѣсенъ", "label": 1}
    assert labels_from_records(aligned_20, records) == per_sentence
    with pytest.raises(LengthMismatch):
        labels_from_records(aligned_20, records[:-1])


def test_apply_corrections_substitutes_recorded_tokens(aligned_20):
    records = [CorrectionRecord(source_id="aligned_20:4", token_index=0, original="зжбъ", corrected="зѫбъ", label=1)]
    corrected = apply_corrections(aligned_20, records)
    assert corrected[4] == ["зѫбъ", "стена"]
    assert corrected[0] == ["пѣсенъ", "дом"]
    assert len(corrected) == 20


def test_report_is_deterministic_apart_from_timings(aligned_20, gold_lexicon):
    first, _, _ = run(aligned_20, DictionaryDetector(gold_lexicon), KnnCorrector(gold_lexicon), PipelineConfig())
    second, _, _ = run(aligned_20, DictionaryDetector(gold_lexicon), KnnCorrector(gold_lexicon), PipelineConfig())
    assert first.deterministic_dict() == second.deterministic_dict()
    assert "timings" not in first.deterministic_dict()
    assert first.deterministic_dict()["config"]["corrector"]["beam_width"] == 5
    assert first.to_report_json().endswith("\n")


def test_builders_need_their_paths(tmp_path):
    config = PipelineConfig()
    with pytest.raises(ValidationError):
        build_detector(config)
    with pytest.raises(ValidationError):
        build_corrector(config)

    lexicon_path = tmp_path / "lexicon.tsv"
    Lexicon.from_counts({"вода": 2}).save(str(lexicon_path))
    config.detector.kind = "dict"
    config.corrector.kind = "knn"
    config.paths.lexicon = str(lexicon_path)
    assert isinstance(build_detector(config), DictionaryDetector)
    assert isinstance(build_corrector(config), KnnCorrector)


MODERN_WORDS = [
    "хляб", "вода", "сняг", "път", "село", "град", "дом", "река", "планина", "момчетата",
    "господарят", "хората", "вечерта", "и", "на", "в", "с", "мляко", "дете",
]
# Cyrillic letters read as their Latin look-alikes, the hard sign as the soft one
HOMOGLYPHS = {("о", "o"): 1, ("а", "a"): 1, ("е", "e"): 1, ("ъ", "ь"): 1, ("ѣ", "Ь"): 1}


@pytest.mark.slow
def test_seq2seq_pipeline_beats_knn_on_synthetic_corpus():
    rng = np.random.default_rng(5)
    modern = [[AnnotatedToken(str(word)) for word in rng.choice(MODERN_WORDS, size=5)] for _ in range(200)]
    records = generate_records(modern, load_shipped_profile("ivanchev"), ConfusionMatrix.from_counts(HOMOGLYPHS), seed=9)
    train_sentences, test_sentences = split_train_dev([align_tokens(record) for record in records], 0.1, seed=9)

    lexicon = Lexicon.from_tokens(token.gs_token for sentence in train_sentences for token in sentence.tokens)
    detector = DictionaryDetector(lexicon)
    pairs = sorted(set(corrector_pairs(train_sentences)))
    config = corrector_variant(
        "final", embedding_size=16, hidden_size=32, batch_size=4, epochs=150, patience=150, learning_rate=1e-2,
        beam_width=3, max_output_len=20, seed=3,
    )
    model, _ = train(pairs, config, dev_pairs=pairs)

    seq2seq_report = run(test_sentences, detector, Seq2SeqCorrector(model))[0]
    knn_report = run(test_sentences, detector, KnnCorrector(lexicon))[0]

    assert seq2seq_report.detection.f1 == 1.0
    assert seq2seq_report.improvement.improvement_pct > 0
    assert seq2seq_report.correction.mean_cer_after < seq2seq_report.correction.mean_cer_before
    # Long words carry three or more substitutions, out of the lexicon search radius
    assert seq2seq_report.improvement.improvement_pct > knn_report.improvement.improvement_pct

    again = run(test_sentences, detector, Seq2SeqCorrector(model))[0]
    assert again.deterministic_dict() == seq2seq_report.deterministic_dict()
