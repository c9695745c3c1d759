"""
Detect-then-correct pipeline, evaluation and run reports.
"""

# Standard library imports
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Third-party imports
from dataclasses_json import dataclass_json

# Local imports
from core.corpus import CorpusStats, SentencePair, corpus_stats
from core.correctors import KnnCorrector, Seq2SeqCorrector, TokenCorrector
from core.detect import DictionaryDetector, Lexicon, NgramDetector, TokenDetector, load_detector, sentence_contexts
from core.metrics import (
    DetectionReport,
    ErrorCensus,
    ImprovementReport,
    cer,
    detection_scores,
    improvement_pct,
    mean_and_std,
    segmentation_error_census,
)
from core.seq2seq import load_model
from utils.config import PipelineConfig, config_echo
from utils.error_handling import LengthMismatch, ValidationError


@dataclass_json
@dataclass
class CorrectionRecord:
    source_id: str
    token_index: int
    original: str
    corrected: str
    label: int
    candidates: List[str] = field(default_factory=list)
    log_prob: Optional[float] = None


@dataclass_json
@dataclass
class CorrectionSummary:
    n_tokens: int = 0
    n_flagged: int = 0
    n_changed: int = 0
    mean_cer_before: Optional[float] = None
    mean_cer_after: Optional[float] = None


@dataclass_json
@dataclass
class RunReport:
    """
    Everything a pipeline run measured. Timings are the only field outside the
    determinism contract.
    """

    corpus: CorpusStats
    detection: DetectionReport
    improvement: ImprovementReport
    census: ErrorCensus
    correction: CorrectionSummary
    config: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def deterministic_dict(self) -> Dict[str, Any]:
        document = self.to_dict()
        document.pop("timings", None)
        return document

    def to_report_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(document: Dict[str, Any], path: str) -> None:
    """Write a JSON document with sorted keys, UTF-8, two-space indent."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logging.info(f"Wrote {path}")


def pipeline_correct(
    tokens: Sequence[str],
    detector: TokenDetector,
    corrector: TokenCorrector,
    labels: Optional[Sequence[int]] = None,
) -> List[str]:
    """
    Correct the tokens a detector flags; tokens labeled correct pass through verbatim.

    Args:
        tokens: OCR tokens of one sentence
        detector: Token detector (ignored when labels are given)
        corrector: Token corrector
        labels: Precomputed detector labels

    Returns:
        Corrected tokens, one per input token
    """
    labels = list(labels) if labels is not None else detector.detect(tokens)
    if len(labels) != len(tokens):
        raise LengthMismatch(f"{len(labels)} labels for {len(tokens)} tokens")
    contexts = sentence_contexts(tokens)
    return [
        corrector.correct(token, context) if label else token
        for token, label, context in zip(tokens, labels, contexts)
    ]


def correct_sentences(
    sentences: Sequence[SentencePair],
    detector: Optional[TokenDetector],
    corrector: TokenCorrector,
    n_candidates: int = 1,
    labels: Optional[Sequence[Sequence[int]]] = None,
) -> Tuple[List[List[int]], List[List[str]], List[CorrectionRecord]]:
    """
    Run detection and correction over a corpus.

    Precomputed labels (one list per sentence) skip the detector.

    Returns:
        (labels per sentence, corrected tokens per sentence, records for flagged tokens)
    """
    all_labels: List[List[int]] = []
    all_corrected: List[List[str]] = []
    records: List[CorrectionRecord] = []
    if labels is not None and len(labels) != len(sentences):
        raise LengthMismatch(f"{len(labels)} label lists for {len(sentences)} sentences")
    for position, sentence in enumerate(sentences):
        tokens = [token.ocr_token for token in sentence.tokens]
        sentence_labels = list(labels[position]) if labels is not None else detector.detect(tokens)
        if len(sentence_labels) != len(tokens):
            raise LengthMismatch(f"{sentence.record.source_id}: {len(sentence_labels)} labels for {len(tokens)} tokens")
        corrected = list(tokens)
        for index, (token, label, context) in enumerate(zip(tokens, sentence_labels, sentence_contexts(tokens))):
            if not label:
                continue
            candidates = corrector.candidates(token, max(1, n_candidates), context)
            corrected[index] = candidates[0].text
            records.append(
                CorrectionRecord(
                    source_id=sentence.record.source_id,
                    token_index=index,
                    original=token,
                    corrected=candidates[0].text,
                    label=label,
                    candidates=[candidate.text for candidate in candidates],
                    log_prob=candidates[0].log_prob if isinstance(corrector, Seq2SeqCorrector) else None,
                )
            )
        all_labels.append(sentence_labels)
        all_corrected.append(corrected)
    logging.info(f"Corrected {len(records)} flagged tokens in {len(sentences)} sentences")
    return all_labels, all_corrected, records


def evaluate_corrections(
    sentences: Sequence[SentencePair],
    labels: Sequence[Sequence[int]],
    corrected: Sequence[Sequence[str]],
) -> Tuple[DetectionReport, ImprovementReport, CorrectionSummary]:
    """
    Score detections against gold labels and corrected text against the gold.

    Sentences are compared as their tokens joined by single spaces.
    """
    if not (len(sentences) == len(labels) == len(corrected)):
        raise LengthMismatch("sentences, labels and corrections must be parallel")

    flat_predictions = [label for sentence_labels in labels for label in sentence_labels]
    flat_gold = [token.label for sentence in sentences for token in sentence.tokens]
    detection = detection_scores(flat_predictions, flat_gold)

    triples = []
    summary = CorrectionSummary()
    cer_before: List[float] = []
    cer_after: List[float] = []
    for sentence, sentence_labels, sentence_corrected in zip(sentences, labels, corrected):
        ocr_tokens = [token.ocr_token for token in sentence.tokens]
        gs_text = " ".join(token.gs_token for token in sentence.tokens)
        if not gs_text:
            continue
        ocr_text = " ".join(ocr_tokens)
        corrected_text = " ".join(sentence_corrected)
        triples.append((ocr_text, corrected_text, gs_text))
        cer_before.append(cer(ocr_text, gs_text))
        cer_after.append(cer(corrected_text, gs_text))
        summary.n_tokens += len(ocr_tokens)
        summary.n_flagged += sum(sentence_labels)
        summary.n_changed += sum(1 for a, b in zip(ocr_tokens, sentence_corrected) if a != b)

    summary.mean_cer_before = mean_and_std(cer_before)[0]
    summary.mean_cer_after = mean_and_std(cer_after)[0]
    return detection, improvement_pct(triples), summary


def build_detector(config: PipelineConfig) -> TokenDetector:
    """
    Raises:
        ValidationError: If the path the chosen detector needs is not configured
    """
    if config.detector.kind == "dict":
        if not config.paths.lexicon:
            raise ValidationError("The dictionary detector needs paths.lexicon")
        return DictionaryDetector(Lexicon.load(config.paths.lexicon))
    if not config.paths.detector_model:
        raise ValidationError("The n-gram detector needs paths.detector_model")
    return NgramDetector(load_detector(config.paths.detector_model), threshold=config.detector.threshold)


def build_corrector(config: PipelineConfig) -> TokenCorrector:
    """
    Raises:
        ValidationError: If the path the chosen corrector needs is not configured
    """
    if config.corrector.kind == "knn":
        if not config.paths.lexicon:
            raise ValidationError("The kNN corrector needs paths.lexicon")
        return KnnCorrector(Lexicon.load(config.paths.lexicon))
    if not config.paths.corrector_model:
        raise ValidationError("The seq2seq corrector needs paths.corrector_model")
    return Seq2SeqCorrector(
        load_model(config.paths.corrector_model),
        beam_width=config.corrector.beam_width,
        max_output_len=config.corrector.max_output_len,
    )


def detection_records(sentences: Sequence[SentencePair], labels: Sequence[Sequence[int]]) -> List[Dict[str, Any]]:
    """One line-delimited record per OCR token with its detector label."""
    if len(labels) != len(sentences):
        raise LengthMismatch(f"{len(labels)} label lists for {len(sentences)} sentences")
    return [
        {
            "source_id": sentence.record.source_id,
            "token_index": index,
            "token": token.ocr_token,
            "label": int(label),
        }
        for sentence, sentence_labels in zip(sentences, labels)
        for index, (token, label) in enumerate(zip(sentence.tokens, sentence_labels))
    ]


def labels_from_records(sentences: Sequence[SentencePair], records: Sequence[Dict[str, Any]]) -> List[List[int]]:
    """
    Rebuild per-sentence labels from detection records.

    Raises:
        LengthMismatch: If a token of the corpus has no record
    """
    by_key = {(record["source_id"], int(record["token_index"])): int(record["label"]) for record in records}
    labels: List[List[int]] = []
    for sentence in sentences:
        sentence_labels = []
        for index in range(len(sentence.tokens)):
            key = (sentence.record.source_id, index)
            if key not in by_key:
                raise LengthMismatch(f"No detection for token {index} of {sentence.record.source_id}")
            sentence_labels.append(by_key[key])
        labels.append(sentence_labels)
    return labels


def apply_corrections(sentences: Sequence[SentencePair], records: Sequence[CorrectionRecord]) -> List[List[str]]:
    """OCR tokens of every sentence with the recorded corrections substituted."""
    by_key = {(record.source_id, record.token_index): record.corrected for record in records}
    return [
        [
            by_key.get((sentence.record.source_id, index), token.ocr_token)
            for index, token in enumerate(sentence.tokens)
        ]
        for sentence in sentences
    ]


def build_report(
    sentences: Sequence[SentencePair],
    labels: Sequence[Sequence[int]],
    corrected: Sequence[Sequence[str]],
    config: Optional[PipelineConfig] = None,
    timings: Optional[Dict[str, float]] = None,
) -> RunReport:
    """Corpus statistics, census and evaluation of one set of corrections."""
    timings = dict(timings or {})
    started = time.perf_counter()
    stats = corpus_stats(sentences)
    census = segmentation_error_census(sentences)
    detection, improvement, summary = evaluate_corrections(sentences, labels, corrected)
    timings["evaluate"] = time.perf_counter() - started
    return RunReport(
        corpus=stats,
        detection=detection,
        improvement=improvement,
        census=census,
        correction=summary,
        config=config_echo(config) if config is not None else {},
        timings=timings,
    )


def run(
    sentences: Sequence[SentencePair],
    detector: TokenDetector,
    corrector: TokenCorrector,
    config: Optional[PipelineConfig] = None,
    n_candidates: int = 1,
) -> Tuple[RunReport, List[CorrectionRecord], List[List[int]]]:
    """
    Detect, correct and evaluate a labeled corpus.

    Returns:
        (RunReport, correction records, detector labels per sentence)
    """
    started = time.perf_counter()
    labels, corrected, records = correct_sentences(sentences, detector, corrector, n_candidates)
    timings = {"detect_correct": time.perf_counter() - started}

    report = build_report(sentences, labels, corrected, config, timings)
    logging.info(
        f"Pipeline: F1 {report.detection.f1:.4f}, improvement {report.improvement.improvement_pct * 100:.2f}%"
    )
    return report, records, labels
