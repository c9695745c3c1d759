"""
Edit-distance metrics, detection scores, % improvement and OCR error-type analysis.
"""

# Standard library imports
import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

# Third-party imports
import Levenshtein
import numpy as np
from dataclasses_json import dataclass_json

# Local imports
from utils.error_handling import DataError, EmptyReference, LengthMismatch, NotAnError

if TYPE_CHECKING:
    from core.corpus import SentencePair
    from core.detect import Lexicon


class ErrorType(str, Enum):
    MISRECOGNIZED_CHARACTER = "misrecognized_character"
    MISSING_CHARACTER = "missing_character"
    HALLUCINATION = "hallucination"
    RUN_ON = "run_on"
    INCORRECT_SPLIT = "incorrect_split"


@dataclass_json
@dataclass
class DetectionReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False


@dataclass_json
@dataclass
class ImprovementReport:
    lev_ocr_sum: int
    lev_corrected_sum: int
    gs_len_sum: int
    improvement_pct: float


@dataclass_json
@dataclass
class ErrorCensus:
    total: int = 0
    word_segmentation: int = 0
    run_on: int = 0
    incorrect_split: int = 0
    misrecognized_character: int = 0
    missing_character: int = 0
    hallucination: int = 0

    @property
    def other(self) -> int:
        return self.misrecognized_character + self.missing_character + self.hallucination

    def by_type(self) -> Dict[ErrorType, int]:
        return {
            ErrorType.MISRECOGNIZED_CHARACTER: self.misrecognized_character,
            ErrorType.MISSING_CHARACTER: self.missing_character,
            ErrorType.HALLUCINATION: self.hallucination,
            ErrorType.RUN_ON: self.run_on,
            ErrorType.INCORRECT_SPLIT: self.incorrect_split,
        }


@dataclass_json
@dataclass
class WordErrorKinds:
    non_word: int = 0
    real_word: int = 0


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode code points."""
    return Levenshtein.distance(a, b)


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance divided by the longer length; 0.0 when both strings are empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def cer(ocr: str, gs: str) -> float:
    """
    Character error rate of an OCR string against its gold standard, in percent.

    Raises:
        EmptyReference: If the gold standard is empty
    """
    if not gs:
        raise EmptyReference("CER is undefined for an empty gold standard")
    return levenshtein(ocr, gs) / len(gs) * 100.0


def improvement_pct(triples: Sequence[Tuple[str, str, str]]) -> ImprovementReport:
    """
    Corpus-level % improvement of corrected text over raw OCR.

    Sums lev(ocr, gs), lev(corrected, gs) and len(gs) over all triples before
    dividing, so longer references weigh more. Positive means quality gained.

    Args:
        triples: (ocr, corrected, gs) strings

    Returns:
        ImprovementReport with the sums and the resulting fraction

    Raises:
        EmptyReference: If any gold standard is empty
    """
    lev_ocr_sum = 0
    lev_corrected_sum = 0
    gs_len_sum = 0
    for index, (ocr, corrected, gs) in enumerate(triples):
        if not gs:
            raise EmptyReference(f"Triple {index} has an empty gold standard")
        lev_ocr_sum += levenshtein(ocr, gs)
        lev_corrected_sum += levenshtein(corrected, gs)
        gs_len_sum += len(gs)

    improvement = (lev_ocr_sum - lev_corrected_sum) / gs_len_sum if gs_len_sum else 0.0
    return ImprovementReport(
        lev_ocr_sum=lev_ocr_sum,
        lev_corrected_sum=lev_corrected_sum,
        gs_len_sum=gs_len_sum,
        improvement_pct=improvement,
    )


def detection_scores(predictions: Sequence[int], labels: Sequence[int]) -> DetectionReport:
    """
    Precision, recall and F1 of erroneous-token detection (positive class = 1).

    Zero denominators yield a score of 0 with the matching undefined flag set.

    Raises:
        LengthMismatch: If predictions and labels differ in length
    """
    if len(predictions) != len(labels):
        raise LengthMismatch(
            f"{len(predictions)} predictions for {len(labels)} labels"
        )

    tp = fp = fn = tn = 0
    for predicted, actual in zip(predictions, labels):
        if predicted and actual:
            tp += 1
        elif predicted:
            fp += 1
        elif actual:
            fn += 1
        else:
            tn += 1

    precision_undefined = tp + fp == 0
    recall_undefined = tp + fn == 0
    precision = 0.0 if precision_undefined else tp / (tp + fp)
    recall = 0.0 if recall_undefined else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    if precision_undefined or recall_undefined:
        logging.debug(
            f"Degenerate detection denominators: precision_undefined={precision_undefined}, "
            f"recall_undefined={recall_undefined}"
        )

    return DetectionReport(
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        precision=precision,
        recall=recall,
        f1=f1,
        precision_undefined=precision_undefined,
        recall_undefined=recall_undefined,
    )


def classify_error_type(ocr_tokens: Sequence[str], gs_tokens: Sequence[str]) -> ErrorType:
    """
    Classify one mismatch site into an OCR error type.

    Args:
        ocr_tokens: One OCR token, or two for an incorrect split
        gs_tokens: One gold token, or two for a run-on

    Returns:
        The ErrorType of the site

    Raises:
        NotAnError: If a 1-to-1 pair is identical
        DataError: If the cardinalities describe no known site shape
    """
    n_ocr, n_gs = len(ocr_tokens), len(gs_tokens)
    if n_ocr == 1 and n_gs == 2:
        return ErrorType.RUN_ON
    if n_ocr == 2 and n_gs == 1:
        return ErrorType.INCORRECT_SPLIT
    if n_ocr != 1 or n_gs != 1:
        raise DataError(f"Unsupported mismatch site shape: {n_ocr} OCR vs {n_gs} gold tokens")

    ocr, gs = ocr_tokens[0], gs_tokens[0]
    if ocr == gs:
        raise NotAnError(f"Tokens are identical: {ocr!r}")

    # A pure-deletion (or pure-insertion) alignment exists iff the distance equals the length gap
    distance = levenshtein(ocr, gs)
    if len(ocr) < len(gs) and distance == len(gs) - len(ocr):
        return ErrorType.MISSING_CHARACTER
    if len(ocr) > len(gs) and distance == len(ocr) - len(gs):
        return ErrorType.HALLUCINATION
    return ErrorType.MISRECOGNIZED_CHARACTER


def _sentence_census(sentence: "SentencePair") -> ErrorCensus:
    # Local import keeps metrics importable without the corpus module
    from core.corpus import strip_alignment

    census = ErrorCensus()
    ocr_aligned = sentence.record.ocr_aligned
    tokens = sentence.tokens
    census.total = sum(token.label for token in tokens)

    segmented = set()
    # Gold whitespace between token k and k+1 that the OCR did not reproduce
    for k in range(len(tokens) - 1):
        gap = ocr_aligned[tokens[k].char_span[1] : tokens[k + 1].char_span[0]]
        if gap and not any(ch.isspace() for ch in gap):
            census.run_on += 1
            segmented.update((k, k + 1))

    for k, token in enumerate(tokens):
        start, end = token.char_span
        ocr_slice = strip_alignment(ocr_aligned[start:end]).strip()
        if any(ch.isspace() for ch in ocr_slice):
            census.incorrect_split += 1
            segmented.add(k)

    for k, token in enumerate(tokens):
        if not token.label or k in segmented:
            continue
        error_type = classify_error_type([token.ocr_token], [token.gs_token])
        if error_type == ErrorType.MISSING_CHARACTER:
            census.missing_character += 1
        elif error_type == ErrorType.HALLUCINATION:
            census.hallucination += 1
        else:
            census.misrecognized_character += 1

    census.word_segmentation = census.run_on + census.incorrect_split
    return census


def merge_census(parts: Sequence[ErrorCensus]) -> ErrorCensus:
    """Sum a sequence of census counts."""
    merged = ErrorCensus()
    for part in parts:
        for name in merged.to_dict():
            setattr(merged, name, getattr(merged, name) + getattr(part, name))
    return merged


def segmentation_error_census(corpus: Sequence["SentencePair"]) -> ErrorCensus:
    """
    Count errors by type over a labeled corpus.

    A run-on is a gold inter-token gap where the OCR stream holds no whitespace;
    an incorrect split is a gold token whose OCR slice contains whitespace. The
    remaining erroneous tokens are split by classify_error_type.

    Returns:
        ErrorCensus with total errors and per-type counts
    """
    census = merge_census([_sentence_census(sentence) for sentence in corpus])
    logging.info(
        f"Error census: total={census.total}, run-on={census.run_on}, "
        f"incorrect split={census.incorrect_split}, other={census.other}"
    )
    return census


def word_error_kind_census(corpus: Sequence["SentencePair"], lexicon: "Lexicon") -> WordErrorKinds:
    """
    Split erroneous OCR tokens into non-word errors (not in the lexicon) and
    real-word errors (valid words in the wrong place).
    """
    kinds = WordErrorKinds()
    for sentence in corpus:
        for token in sentence.tokens:
            if not token.label:
                continue
            if lexicon.contains(token.ocr_token):
                kinds.real_word += 1
            else:
                kinds.non_word += 1
    return kinds


def error_type_counts(census: ErrorCensus) -> Dict[str, int]:
    """Flatten a census into label→count pairs for tables and charts."""
    return {error_type.value: count for error_type, count in census.by_type().items()}


def mean_and_std(values: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """Population mean and standard deviation; (None, None) for an empty sequence."""
    if len(values) == 0:
        return None, None
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std(ddof=0))


__all__: List[str] = [
    "ErrorType",
    "DetectionReport",
    "ImprovementReport",
    "ErrorCensus",
    "WordErrorKinds",
    "levenshtein",
    "normalized_levenshtein",
    "cer",
    "improvement_pct",
    "detection_scores",
    "classify_error_type",
    "segmentation_error_census",
    "word_error_kind_census",
    "merge_census",
    "mean_and_std",
]
