"""
Error detection commands: detector training and token labeling.
"""

# Standard library imports
import logging
from pathlib import Path
from typing import Optional

# Third-party imports
import click

# Local imports
from core.corpus import load_sentences, write_records
from core.detect import Lexicon, detector_examples, read_labeled_lines, save_detector, train_ngram_detector
from core.pipeline import build_detector, detection_records
from utils.config import PipelineConfig
from utils.error_handling import DataError


def run_train_detect(
    config: PipelineConfig,
    input_path: str,
    output_path: str,
    labeled: bool = False,
    noise_threshold: Optional[float] = None,
    lexicon_output: Optional[str] = None,
) -> None:
    """
    Train the n-gram detector on an aligned corpus or on `__label__` lines.

    With lexicon_output, the gold tokens of the aligned corpus are also saved as
    a frequency lexicon for the dictionary detector and the kNN corrector.
    """
    if labeled:
        try:
            text = Path(input_path).read_text(encoding="utf-8")
        except OSError as e:
            raise DataError(f"Cannot read {input_path}: {e}") from e
        examples = read_labeled_lines(text)
        sentences = []
    else:
        sentences = load_sentences(input_path, noise_threshold, n_jobs=config.threads)
        examples = detector_examples(sentences)

    model = train_ngram_detector(examples, config.detector)
    save_detector(model, output_path)
    click.echo(f"Detector trained on {len(examples)} tokens, final loss {model.losses[-1]:.4f} -> {output_path}")

    if lexicon_output:
        if not sentences:
            raise DataError("A lexicon can only be built from an aligned corpus")
        lexicon = Lexicon.from_tokens(token.gs_token for sentence in sentences for token in sentence.tokens)
        lexicon.save(lexicon_output)
        click.echo(f"Lexicon of {len(lexicon)} words -> {lexicon_output}")


def run_detect(config: PipelineConfig, input_path: str, output_path: str) -> None:
    """Label every OCR token of an aligned corpus and write line-delimited detections."""
    detector = build_detector(config)
    sentences = load_sentences(input_path, n_jobs=config.threads)
    labels = [detector.detect([token.ocr_token for token in sentence.tokens]) for sentence in sentences]
    records = detection_records(sentences, labels)
    write_records(records, output_path)
    flagged = sum(record["label"] for record in records)
    logging.info(f"Detector '{config.detector.kind}' flagged {flagged} of {len(records)} tokens")
    click.echo(f"{flagged} of {len(records)} tokens flagged -> {output_path}")
