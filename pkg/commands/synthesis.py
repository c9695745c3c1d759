"""
Synthetic data commands: confusion matrix estimation and corpus synthesis.
"""

# Standard library imports
import logging
from pathlib import Path
from typing import Optional

# Third-party imports
import click

# Local imports
from core.confusion import build_confusion, error_rate, load_matrix, save_matrix
from core.corpus import format_aligned, read_aligned
from core.synthgen import OrthographyProfile, generate_records, load_profile, load_shipped_profile, read_modern_text
from utils.config import PipelineConfig
from utils.error_handling import ValidationError


def run_confusion(config: PipelineConfig, input_path: str, output_path: str) -> None:
    """Estimate a character confusion matrix from an aligned corpus and save it as TSV."""
    records = read_aligned(input_path)
    matrix = build_confusion(records, substitution_only=config.synth.substitution_only, n_jobs=config.threads)
    save_matrix(matrix, output_path)
    rate = error_rate(matrix) if not matrix.is_empty() else 0.0
    click.echo(f"{matrix.total} aligned positions, error rate {rate:.4f} -> {output_path}")


def resolve_profile(config: PipelineConfig, exceptions_path: Optional[str] = None) -> OrthographyProfile:
    """A profile from configured rule files, or the shipped profile named in the config."""
    if config.paths.rules:
        return load_profile(config.paths.rules, exceptions_path)
    return load_shipped_profile(config.synth.profile)


def run_synth(
    config: PipelineConfig,
    input_path: str,
    output_path: str,
    exceptions_path: Optional[str] = None,
) -> int:
    """
    Convert modern text to historical orthography, corrupt it with confusion-matrix
    noise and write the result as an aligned corpus.

    Returns:
        Number of records written

    Raises:
        ValidationError: If no confusion matrix is configured
    """
    if not config.paths.matrix:
        raise ValidationError("synth needs a confusion matrix (--matrix or paths.matrix)")
    matrix = load_matrix(config.paths.matrix)
    profile = resolve_profile(config, exceptions_path)
    sentences = read_modern_text(input_path)

    records = generate_records(
        sentences,
        profile,
        matrix,
        seed=config.seed,
        whitespace_noise=config.synth.whitespace_noise,
        n_jobs=config.threads,
    )
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    Path(output_path).write_text(format_aligned(records), encoding="utf-8")
    logging.info(f"Synthetic corpus written to {output_path}")
    click.echo(f"{len(records)} synthetic records ({profile.name}) -> {output_path}")
    return len(records)
