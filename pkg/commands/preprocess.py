"""
Corpus preprocessing commands: token alignment and corpus statistics.
"""

# Standard library imports
import logging
from typing import Optional

# Third-party imports
import click

# Local imports
from components.report_display import display_corpus_stats
from core.corpus import corpus_stats, export_token_pairs, load_sentences, sentence_frame
from core.detect import Lexicon
from core.metrics import error_type_counts, segmentation_error_census, word_error_kind_census
from core.pipeline import write_json
from utils.config import PipelineConfig


def run_align(config: PipelineConfig, input_path: str, output_path: str, noise_threshold: Optional[float]) -> int:
    """
    Align an aligned-corpus file into labeled token pairs and export them.

    Returns:
        Number of token pairs written
    """
    sentences = load_sentences(input_path, noise_threshold, n_jobs=config.threads)
    count = export_token_pairs(sentences, output_path)
    errors = sum(sum(sentence.labels) for sentence in sentences)
    click.echo(f"{len(sentences)} sentences, {count} token pairs ({errors} erroneous) -> {output_path}")
    return count


def run_stats(
    config: PipelineConfig,
    input_path: str,
    noise_threshold: Optional[float],
    lexicon_path: Optional[str] = None,
    report_path: Optional[str] = None,
    plot_path: Optional[str] = None,
) -> None:
    """Print corpus statistics and the error-type census; optionally save JSON and plots."""
    sentences = load_sentences(input_path, noise_threshold, n_jobs=config.threads)
    stats = corpus_stats(sentences)
    census = segmentation_error_census(sentences)
    word_errors = word_error_kind_census(sentences, Lexicon.load(lexicon_path)) if lexicon_path else None

    display_corpus_stats(stats, census, name=input_path, word_errors=word_errors)

    if report_path:
        document = {"corpus": stats.to_dict(), "census": census.to_dict()}
        if word_errors is not None:
            document["word_errors"] = word_errors.to_dict()
        write_json(document, report_path)

    if plot_path:
        from utils.visualization import (
            create_cer_histogram,
            create_error_type_bar,
            create_noise_distribution_histogram,
            write_figures_html,
        )

        frame = sentence_frame(sentences)
        figures = [
            create_noise_distribution_histogram(frame, noise_threshold),
            create_cer_histogram(frame),
            create_error_type_bar(error_type_counts(census)),
        ]
        write_figures_html(figures, plot_path)
    logging.info(f"Statistics computed for {stats.n_sentences} sentences")
