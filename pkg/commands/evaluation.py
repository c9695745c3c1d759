"""
Evaluation commands: scoring corrections and the end-to-end pipeline.
"""

# Standard library imports
import logging
from pathlib import Path
from typing import Optional, Sequence

# Third-party imports
import click

# Local imports
from components.report_display import display_run_report
from core.corpus import SentencePair, load_sentences, read_records, sentence_frame, write_records
from core.metrics import error_type_counts
from core.pipeline import (
    CorrectionRecord,
    RunReport,
    apply_corrections,
    build_corrector,
    build_detector,
    build_report,
    detection_records,
    labels_from_records,
    run,
)
from utils.config import PipelineConfig
from utils.error_handling import safe_execute

DETECTIONS_FILE = "detections.ndjson"
CORRECTIONS_FILE = "corrections.ndjson"
REPORT_FILE = "report.json"
PLOT_FILE = "report.html"


def write_report(report: RunReport, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(report.to_report_json(), encoding="utf-8")
    logging.info(f"Wrote run report to {path}")


def write_report_plots(report: RunReport, sentences: Sequence[SentencePair], path: str) -> None:
    from utils.visualization import create_cer_histogram, create_error_type_bar, write_figures_html

    frame = sentence_frame(sentences)
    write_figures_html([create_cer_histogram(frame), create_error_type_bar(error_type_counts(report.census))], path)


def run_evaluate(
    config: PipelineConfig,
    input_path: str,
    detections_path: str,
    corrections_path: Optional[str] = None,
    report_path: Optional[str] = None,
    plot_path: Optional[str] = None,
) -> RunReport:
    """
    Score detections and corrections of an aligned corpus against its gold standard.

    Without a corrections file the OCR text is evaluated as is.
    """
    sentences = load_sentences(input_path, n_jobs=config.threads)
    labels = labels_from_records(sentences, read_records(detections_path))
    records = (
        [CorrectionRecord.from_dict(record) for record in read_records(corrections_path)]
        if corrections_path
        else []
    )
    corrected = apply_corrections(sentences, records)

    report = build_report(sentences, labels, corrected, config)
    display_run_report(report, name=input_path)
    if report_path:
        write_report(report, report_path)
    if plot_path:
        safe_execute(write_report_plots, report, sentences, plot_path, error_message="Could not write charts")
    return report


def run_pipeline(
    config: PipelineConfig,
    input_path: str,
    output_dir: str,
    n_candidates: int = 1,
    plot: bool = False,
) -> RunReport:
    """
    Detect, correct and evaluate in one pass.

    Writes detections, corrections and the run report into output_dir; they are
    the same files the detect, correct and evaluate commands produce.
    """
    detector = build_detector(config)
    corrector = build_corrector(config)
    sentences = load_sentences(input_path, n_jobs=config.threads)

    report, records, labels = run(sentences, detector, corrector, config, n_candidates)

    target = Path(output_dir)
    write_records(detection_records(sentences, labels), str(target / DETECTIONS_FILE))
    write_records([record.to_dict() for record in records], str(target / CORRECTIONS_FILE))
    write_report(report, str(target / REPORT_FILE))
    if plot:
        safe_execute(
            write_report_plots, report, sentences, str(target / PLOT_FILE), error_message="Could not write charts"
        )

    display_run_report(report, name=input_path)
    click.echo(f"Run artifacts -> {output_dir}")
    return report
