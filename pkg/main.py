"""
histocr - post-OCR correction for historical Bulgarian orthography.

Command-line entry point: corpus preparation, synthetic data, detection,
correction and evaluation.
"""

# Standard library imports
import logging
import sys
from typing import Any, Dict, Optional, Sequence

# Third-party imports
import click

# Command imports
from commands.correction import run_correct, run_train_correct
from commands.detection import run_detect, run_train_detect
from commands.evaluation import run_evaluate, run_pipeline
from commands.preprocess import run_align, run_stats
from commands.synthesis import run_confusion, run_synth

# Local imports
from utils.config import CORRECTOR_VARIANTS, SHIPPED_PROFILES, PipelineConfig, corrector_variant, load_config
from utils.error_handling import EXIT_OK, EXIT_USAGE, AppError, handle_cli_error
from utils.validation import validate_paths_exist

# Configure logging
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

# Config paths that hold data files; checkpoints are checked when loaded
DATA_PATH_ROLES = ("corpus", "synthetic", "lexicon", "rules", "matrix")

# Corrector fields that define an ablation variant
VARIANT_FIELDS = ("copy", "coverage", "lambda_diag", "lambda_cov")

INPUT_FILE = click.Path(exists=True, dir_okay=False)


class HistocrGroup(click.Group):
    """Click group that maps every failure onto the process exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            code = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = code if isinstance(code, int) else EXIT_OK
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        except AppError as e:
            code = handle_cli_error(e, "Command failed")
        except Exception as e:
            code = handle_cli_error(e, "Unexpected error", show_traceback=True)
        if standalone_mode:
            sys.exit(code)
        return code


def _config(ctx: click.Context, **sections: Dict[str, Any]) -> PipelineConfig:
    """
    Load the configuration: defaults < config file < global flags < subcommand flags.

    Unset flags (None) leave the lower layers untouched.
    """
    options = ctx.obj
    overrides: Dict[str, Any] = {
        "seed": options["seed"],
        "threads": options["threads"],
        "detector": {"threshold": options["threshold"]},
    }
    for section, values in sections.items():
        overrides.setdefault(section, {}).update(values)
    config = load_config(options["config_path"], overrides)
    validate_paths_exist({role: getattr(config.paths, role) for role in DATA_PATH_ROLES})
    return config


@click.group(cls=HistocrGroup)
@click.option("--config", "config_path", type=INPUT_FILE, help="TOML config file (default: $HISTOCR_CONFIG).")
@click.option("--seed", type=int, help="Global random seed.")
@click.option("--threads", type=int, help="Parallel jobs (-1 uses every core).")
@click.option("--threshold", type=float, help="Detector decision threshold.")
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level.")
@click.option("-q", "--quiet", is_flag=True, help="Log warnings and errors only.")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Optional[str],
    seed: Optional[int],
    threads: Optional[int],
    threshold: Optional[float],
    verbose: bool,
    quiet: bool,
) -> None:
    """Post-OCR correction toolkit for historical Bulgarian orthography."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif quiet:
        logging.getLogger().setLevel(logging.WARNING)
    ctx.obj = {"config_path": config_path, "seed": seed, "threads": threads, "threshold": threshold}


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Token-pair export (.ndjson).")
@click.option("--noise-threshold", type=float, help="Drop sentences at or above this normalized distance.")
@click.pass_context
def align(ctx: click.Context, input_path: str, output_path: str, noise_threshold: Optional[float]) -> None:
    """Split an aligned corpus into labeled token pairs."""
    config = _config(ctx, corpus={"noise_threshold": noise_threshold})
    run_align(config, input_path, output_path, config.corpus.noise_threshold)


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("--noise-threshold", type=float, help="Drop sentences at or above this normalized distance.")
@click.option("--lexicon", type=INPUT_FILE, help="Lexicon for the non-word / real-word split.")
@click.option("--report", "report_path", help="Write the statistics as JSON.")
@click.option("--plot", "plot_path", help="Write distribution charts to an HTML file.")
@click.pass_context
def stats(
    ctx: click.Context,
    input_path: str,
    noise_threshold: Optional[float],
    lexicon: Optional[str],
    report_path: Optional[str],
    plot_path: Optional[str],
) -> None:
    """Print corpus statistics and the error-type census."""
    config = _config(ctx, corpus={"noise_threshold": noise_threshold})
    run_stats(config, input_path, config.corpus.noise_threshold, lexicon, report_path, plot_path)


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Confusion matrix (.tsv).")
@click.option("--substitution-only", is_flag=True, default=None, help="Ignore insertions and deletions.")
@click.pass_context
def confusion(ctx: click.Context, input_path: str, output_path: str, substitution_only: Optional[bool]) -> None:
    """Estimate a character confusion matrix from an aligned corpus."""
    config = _config(ctx, synth={"substitution_only": substitution_only})
    run_confusion(config, input_path, output_path)


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Synthetic aligned corpus.")
@click.option("--matrix", help="Confusion matrix (.tsv).")
@click.option("--profile", type=click.Choice(SHIPPED_PROFILES), help="Shipped orthography profile.")
@click.option("--rules", help="Custom rule file (overrides --profile).")
@click.option("--exceptions", type=INPUT_FILE, help="Exception lexicon for custom rules.")
@click.option("--whitespace-noise/--no-whitespace-noise", default=None, help="Allow space insertions and deletions.")
@click.pass_context
def synth(
    ctx: click.Context,
    input_path: str,
    output_path: str,
    matrix: Optional[str],
    profile: Optional[str],
    rules: Optional[str],
    exceptions: Optional[str],
    whitespace_noise: Optional[bool],
) -> None:
    """Convert modern text to historical spelling and add OCR-like noise."""
    config = _config(
        ctx,
        paths={"matrix": matrix, "rules": rules},
        synth={"profile": profile, "whitespace_noise": whitespace_noise},
    )
    run_synth(config, input_path, output_path, exceptions)


@cli.command("train-detect")
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Detector checkpoint.")
@click.option("--labeled", is_flag=True, help="Input holds `__label__<0|1> <word>` lines.")
@click.option("--noise-threshold", type=float, help="Drop sentences at or above this normalized distance.")
@click.option("--lexicon-output", help="Also save the gold tokens as a frequency lexicon.")
@click.option("--epochs", type=int)
@click.option("--learning-rate", type=float)
@click.option("--hash-bits", type=int)
@click.option("--context/--no-context", "use_context", default=None, help="Add neighbour-token features.")
@click.pass_context
def train_detect(
    ctx: click.Context,
    input_path: str,
    output_path: str,
    labeled: bool,
    noise_threshold: Optional[float],
    lexicon_output: Optional[str],
    epochs: Optional[int],
    learning_rate: Optional[float],
    hash_bits: Optional[int],
    use_context: Optional[bool],
) -> None:
    """Train the hashed n-gram error detector."""
    config = _config(
        ctx,
        corpus={"noise_threshold": noise_threshold},
        detector={"epochs": epochs, "learning_rate": learning_rate, "hash_bits": hash_bits, "use_context": use_context},
    )
    run_train_detect(config, input_path, output_path, labeled, config.corpus.noise_threshold, lexicon_output)


def _model_options(command):
    """Detector and corrector selection shared by detect, correct and pipeline."""
    options = [
        click.option("--detector", type=click.Choice(["dict", "ngram"]), help="Detector kind."),
        click.option("--detector-model", help="n-gram detector checkpoint."),
        click.option("--lexicon", help="Lexicon for the dictionary detector and the kNN corrector."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Detections (.ndjson).")
@_model_options
@click.pass_context
def detect(
    ctx: click.Context,
    input_path: str,
    output_path: str,
    detector: Optional[str],
    detector_model: Optional[str],
    lexicon: Optional[str],
) -> None:
    """Label every OCR token as correct (0) or erroneous (1)."""
    config = _config(
        ctx,
        paths={"detector_model": detector_model, "lexicon": lexicon},
        detector={"kind": detector},
    )
    run_detect(config, input_path, output_path)


@cli.command("train-correct")
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_dir", required=True, help="Model directory.")
@click.option("--synthetic", type=INPUT_FILE, help="Synthetic aligned corpus added to the training pairs.")
@click.option("--dev", "dev_path", type=INPUT_FILE, help="Development corpus (default: 10% of the training pairs).")
@click.option("--variant", type=click.Choice(CORRECTOR_VARIANTS), help="Architecture variant.")
@click.option("--noise-threshold", type=float, help="Drop sentences at or above this normalized distance.")
@click.option("--epochs", type=int)
@click.option("--patience", type=int)
@click.option("--batch-size", type=int)
@click.option("--learning-rate", type=float)
@click.option("--hidden-size", type=int)
@click.option("--embedding-size", type=int)
@click.option("--diag-window", type=int)
@click.option("--copy/--no-copy", default=None)
@click.option("--coverage/--no-coverage", default=None)
@click.option("--context/--no-context", "use_context", default=None, help="Feed neighbour tokens to the encoder.")
@click.option("--plot", "plot_path", help="Write the loss curve to an HTML file.")
@click.pass_context
def train_correct(
    ctx: click.Context,
    input_path: str,
    output_dir: str,
    synthetic: Optional[str],
    dev_path: Optional[str],
    variant: Optional[str],
    noise_threshold: Optional[float],
    plot_path: Optional[str],
    **corrector_flags: Any,
) -> None:
    """Train the character-level seq2seq corrector."""
    corrector: Dict[str, Any] = {}
    if variant:
        chosen = corrector_variant(variant)
        corrector.update({field: getattr(chosen, field) for field in VARIANT_FIELDS})
    corrector.update({key: value for key, value in corrector_flags.items() if value is not None})
    config = _config(ctx, corpus={"noise_threshold": noise_threshold}, corrector=corrector)
    run_train_correct(config, input_path, output_dir, synthetic, dev_path, config.corpus.noise_threshold, plot_path)


def _corrector_options(command):
    options = [
        click.option("--corrector", type=click.Choice(["knn", "seq2seq"]), help="Corrector kind."),
        click.option("--corrector-model", help="seq2seq model directory."),
        click.option("--beam-width", type=int, help="Beam width for seq2seq decoding."),
        click.option("--candidates", "n_candidates", type=int, default=1, show_default=True, help="Ranked candidates kept per token."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _model_sections(
    detector: Optional[str],
    detector_model: Optional[str],
    lexicon: Optional[str],
    corrector: Optional[str],
    corrector_model: Optional[str],
    beam_width: Optional[int],
) -> Dict[str, Dict[str, Any]]:
    return {
        "paths": {"detector_model": detector_model, "lexicon": lexicon, "corrector_model": corrector_model},
        "detector": {"kind": detector},
        "corrector": {"kind": corrector, "beam_width": beam_width},
    }


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_path", required=True, help="Correction records (.ndjson).")
@click.option("--detections", type=INPUT_FILE, help="Detections from `detect` (default: run the detector).")
@click.option("--text-output", help="Also write the corrected sentences, one per line.")
@_model_options
@_corrector_options
@click.pass_context
def correct(
    ctx: click.Context,
    input_path: str,
    output_path: str,
    detections: Optional[str],
    text_output: Optional[str],
    detector: Optional[str],
    detector_model: Optional[str],
    lexicon: Optional[str],
    corrector: Optional[str],
    corrector_model: Optional[str],
    beam_width: Optional[int],
    n_candidates: int,
) -> None:
    """Correct flagged tokens; --candidates k keeps the k best candidates."""
    config = _config(ctx, **_model_sections(detector, detector_model, lexicon, corrector, corrector_model, beam_width))
    run_correct(config, input_path, output_path, detections, n_candidates, text_output)


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("--detections", type=INPUT_FILE, required=True, help="Detections from `detect`.")
@click.option("--corrections", type=INPUT_FILE, help="Corrections from `correct` (default: none).")
@click.option("--report", "report_path", help="Write the run report as JSON.")
@click.option("--plot", "plot_path", help="Write charts to an HTML file.")
@click.pass_context
def evaluate(
    ctx: click.Context,
    input_path: str,
    detections: str,
    corrections: Optional[str],
    report_path: Optional[str],
    plot_path: Optional[str],
) -> None:
    """Score detections and corrections against the gold standard."""
    config = _config(ctx)
    run_evaluate(config, input_path, detections, corrections, report_path, plot_path)


@cli.command()
@click.argument("input_path", type=INPUT_FILE)
@click.option("-o", "--output", "output_dir", help="Run directory (default: paths.output).")
@click.option("--plot", is_flag=True, help="Also write report.html.")
@_model_options
@_corrector_options
@click.pass_context
def pipeline(
    ctx: click.Context,
    input_path: str,
    output_dir: Optional[str],
    plot: bool,
    detector: Optional[str],
    detector_model: Optional[str],
    lexicon: Optional[str],
    corrector: Optional[str],
    corrector_model: Optional[str],
    beam_width: Optional[int],
    n_candidates: int,
) -> None:
    """Detect, correct and evaluate an aligned corpus in one run."""
    sections = _model_sections(detector, detector_model, lexicon, corrector, corrector_model, beam_width)
    sections["paths"]["output"] = output_dir
    config = _config(ctx, **sections)
    run_pipeline(config, input_path, config.paths.output, n_candidates, plot)


def run(argv: Optional[Sequence[str]] = None) -> None:
    """Console-script entry point."""
    cli.main(args=list(argv) if argv is not None else None, prog_name="histocr")


if __name__ == "__main__":
    run()
