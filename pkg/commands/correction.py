"""
Error correction commands: corrector training and token correction.
"""

# Standard library imports
import logging
from pathlib import Path
from typing import List, Optional

# Third-party imports
import click

# Local imports
from components.report_display import display_train_report
from core.corpus import SentencePair, load_sentences, read_records, write_records
from core.pipeline import CorrectionRecord, build_corrector, build_detector, correct_sentences, labels_from_records, write_json
from core.seq2seq import corrector_pairs, save_model, train
from utils.config import PipelineConfig

TRAIN_REPORT_FILE = "train_report.json"


def run_train_correct(
    config: PipelineConfig,
    input_path: str,
    output_dir: str,
    synthetic_path: Optional[str] = None,
    dev_path: Optional[str] = None,
    noise_threshold: Optional[float] = None,
    plot_path: Optional[str] = None,
) -> None:
    """
    Train the seq2seq corrector on the erroneous tokens of an aligned corpus.

    A synthetic corpus, when given, is added to the training pairs. Without a
    development corpus a seeded 90/10 split of the training pairs is used.
    """
    use_context = config.corrector.use_context
    sentences = load_sentences(input_path, noise_threshold, n_jobs=config.threads)
    pairs = corrector_pairs(sentences, use_context)
    if synthetic_path:
        synthetic = corrector_pairs(load_sentences(synthetic_path, n_jobs=config.threads), use_context)
        logging.info(f"Adding {len(synthetic)} synthetic pairs to {len(pairs)} original pairs")
        pairs.extend(synthetic)
    dev_pairs = corrector_pairs(load_sentences(dev_path, n_jobs=config.threads), use_context) if dev_path else None

    model, report = train(pairs, config.corrector, dev_pairs)
    save_model(model, output_dir)
    write_json(report.to_dict(), str(Path(output_dir) / TRAIN_REPORT_FILE))
    display_train_report(report)

    if plot_path:
        from utils.visualization import create_loss_curve, write_figures_html

        write_figures_html([create_loss_curve(report.train_losses, report.dev_losses)], plot_path)
    click.echo(f"Corrector ({model.parameter_count()} parameters) -> {output_dir}")


def write_corrected_text(sentences: List[SentencePair], corrected: List[List[str]], path: str) -> None:
    """One corrected sentence per line, tokens joined by single spaces."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    lines = [" ".join(tokens) for tokens in corrected]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    logging.info(f"Wrote {len(sentences)} corrected sentences to {path}")


def run_correct(
    config: PipelineConfig,
    input_path: str,
    output_path: str,
    detections_path: Optional[str] = None,
    n_candidates: int = 1,
    text_output: Optional[str] = None,
) -> List[CorrectionRecord]:
    """
    Correct the flagged tokens of an aligned corpus.

    Flags come from a detections file when given, otherwise from the configured
    detector. Each record lists up to n_candidates ranked candidates.
    """
    sentences = load_sentences(input_path, n_jobs=config.threads)
    labels = labels_from_records(sentences, read_records(detections_path)) if detections_path else None
    detector = None if labels is not None else build_detector(config)
    corrector = build_corrector(config)

    _, corrected, records = correct_sentences(sentences, detector, corrector, n_candidates, labels=labels)
    write_records([record.to_dict() for record in records], output_path)
    if text_output:
        write_corrected_text(sentences, corrected, text_output)

    changed = sum(1 for record in records if record.corrected != record.original)
    click.echo(f"{len(records)} flagged tokens, {changed} changed -> {output_path}")
    return records
