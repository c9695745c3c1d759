"""
Report display components: human-readable tables printed to standard output.
"""

# Standard library imports
import logging
from typing import Any, Callable, Dict, List, Optional

# Third-party imports
import click
import pandas as pd

# Local imports
from core.corpus import CorpusStats
from core.metrics import DetectionReport, ErrorCensus, ImprovementReport, WordErrorKinds, error_type_counts
from core.pipeline import CorrectionSummary, RunReport
from core.seq2seq import TrainReport
from utils.formatting import (
    format_count,
    format_duration,
    format_error_type,
    format_pct,
    format_percent_value,
    format_score,
)


def display_dataframe(df: pd.DataFrame, title: Optional[str] = None, hide_index: bool = True) -> None:
    """
    Print a DataFrame as a plain-text table.

    Args:
        df: DataFrame to print
        title: Heading printed above the table
        hide_index: Whether to leave out the index column
    """
    if title:
        click.echo(f"\n{title}")
        click.echo("-" * len(title))
    if df.empty:
        click.echo("(no data)")
        return
    click.echo(df.to_string(index=not hide_index))


def display_metric_cards(
    metrics: Dict[str, Any],
    title: Optional[str] = None,
    format_func: Optional[Dict[str, Callable]] = None,
) -> None:
    """
    Print label/value pairs, one per line, values aligned.

    Args:
        metrics: Ordered mapping of label to value
        title: Heading printed above the block
        format_func: Formatting function per label
    """
    if not metrics:
        return
    if title:
        click.echo(f"\n{title}")
        click.echo("-" * len(title))
    width = max(len(label) for label in metrics)
    for label, value in metrics.items():
        if format_func and label in format_func:
            value = format_func[label](value)
        click.echo(f"{label.ljust(width)}  {value}")


def corpus_stats_frame(stats: CorpusStats, name: str = "corpus") -> pd.DataFrame:
    """One statistics row: sentences, words, erroneous words, CER mean and std."""
    return pd.DataFrame(
        [
            {
                "Corpus": name,
                "Sentences": format_count(stats.n_sentences),
                "Words": format_count(stats.n_words),
                "Errors": format_count(stats.n_errors),
                "CER (%)": format_percent_value(stats.mean_cer),
                "CER std": format_percent_value(stats.std_cer),
            }
        ]
    )


def census_frame(census: ErrorCensus) -> pd.DataFrame:
    counts = {"total": census.total, "word_segmentation": census.word_segmentation}
    counts.update(error_type_counts(census))
    return pd.DataFrame(
        {
            "Error type": [format_error_type(name) for name in counts],
            "Count": [format_count(value) for value in counts.values()],
            "Share": [format_pct(value / census.total) if census.total else "N/A" for value in counts.values()],
        }
    )


def display_corpus_stats(
    stats: CorpusStats,
    census: ErrorCensus,
    name: str = "corpus",
    word_errors: Optional[WordErrorKinds] = None,
) -> None:
    """Print the statistics row and the error-type census of a corpus."""
    display_dataframe(corpus_stats_frame(stats, name), title="Corpus statistics")
    display_dataframe(census_frame(census), title="Error types")
    if word_errors is not None:
        display_metric_cards(
            {"Non-word errors": word_errors.non_word, "Real-word errors": word_errors.real_word},
            title="Error kinds",
            format_func={"Non-word errors": format_count, "Real-word errors": format_count},
        )


def display_detection(report: DetectionReport) -> None:
    display_metric_cards(
        {
            "Precision": format_score(report.precision, report.precision_undefined),
            "Recall": format_score(report.recall, report.recall_undefined),
            "F1": format_score(report.f1),
            "TP / FP / FN / TN": f"{report.tp} / {report.fp} / {report.fn} / {report.tn}",
        },
        title="Detection",
    )


def display_improvement(report: ImprovementReport, summary: Optional[CorrectionSummary] = None) -> None:
    metrics: Dict[str, Any] = {
        "Improvement": format_pct(report.improvement_pct),
        "Edits OCR -> gold": format_count(report.lev_ocr_sum),
        "Edits corrected -> gold": format_count(report.lev_corrected_sum),
        "Gold characters": format_count(report.gs_len_sum),
    }
    if summary is not None:
        metrics.update(
            {
                "Tokens flagged": f"{format_count(summary.n_flagged)} of {format_count(summary.n_tokens)}",
                "Tokens changed": format_count(summary.n_changed),
                "Mean CER before (%)": format_percent_value(summary.mean_cer_before),
                "Mean CER after (%)": format_percent_value(summary.mean_cer_after),
            }
        )
    display_metric_cards(metrics, title="Correction")


def display_run_report(report: RunReport, name: str = "corpus") -> None:
    """Print every table of a run report."""
    display_corpus_stats(report.corpus, report.census, name)
    display_detection(report.detection)
    display_improvement(report.improvement, report.correction)
    if report.timings:
        display_metric_cards(
            {stage: seconds for stage, seconds in report.timings.items()},
            title="Timings",
            format_func={stage: format_duration for stage in report.timings},
        )


def display_train_report(report: TrainReport) -> None:
    rows: List[Dict[str, Any]] = [
        {"Epoch": epoch, "Train loss": f"{train:.4f}", "Dev loss": f"{dev:.4f}"}
        for epoch, (train, dev) in enumerate(zip(report.train_losses, report.dev_losses), start=1)
    ]
    display_dataframe(pd.DataFrame(rows), title="Training")
    display_metric_cards(
        {
            "Pairs (train / dev)": f"{report.n_train} / {report.n_dev}",
            "Best epoch": report.best_epoch,
            "Best dev loss": format_score(report.best_dev_loss),
            "Stopped early": "yes" if report.stopped_early else "no",
            "Time": format_duration(report.seconds),
        }
    )
    logging.debug(f"Displayed training report for {report.epochs_run} epochs")
