"""
Configuration and constants for the post-OCR correction toolkit.
"""

# Standard library imports
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

# Third-party imports
import toml
from dataclasses_json import dataclass_json
from dotenv import load_dotenv

# Local imports
from utils.error_handling import ConfigError

# Alignment symbols
PADDING_SYMBOL = "@"
UNCERTAINTY_SYMBOL = "#"
ALIGNMENT_SYMBOLS = PADDING_SYMBOL + UNCERTAINTY_SYMBOL

# Corpus container tags
TAG_OCR_INPUT = "[OCR_toInput]"
TAG_OCR_ALIGNED = "[OCR_aligned]"
TAG_GS_ALIGNED = "[GS_aligned]"

# Corpus settings
DEFAULT_NOISE_THRESHOLD = 0.5
DEFAULT_DEV_FRACTION = 0.1

# Synthetic data settings
MAX_SYNTH_ATTEMPTS = 5
# Letters combined with rule outputs when checking a profile for idempotence
STABILITY_ALPHABET = "абвгдежзийклмнопрстуфхцчшщъьюяѣѫ"
PROFILE_DIR = Path(__file__).resolve().parent.parent / "data" / "profiles"
SHIPPED_PROFILES = ("drinov", "ivanchev")

# Detector defaults
DEFAULT_NGRAM_RANGE = (1, 5)
DEFAULT_HASH_BITS = 20
DEFAULT_DETECTOR_EPOCHS = 10
DEFAULT_DETECTOR_LR = 0.1
DEFAULT_THRESHOLD = 0.5

# Corrector defaults
DEFAULT_DIAG_WINDOW = 3
DEFAULT_BEAM_WIDTH = 5
DEFAULT_MAX_OUTPUT_LEN = 50
DEFAULT_CORRECTOR_EPOCHS = 60
DEFAULT_PATIENCE = 5
DEFAULT_CORRECTOR_LR = 1e-3
DEFAULT_CLIP_NORM = 5.0
CORRECTOR_VARIANTS = ("base", "copy", "final")

# Global
DEFAULT_SEED = 13
DEFAULT_THREADS = 1
CONFIG_ENV_VAR = "HISTOCR_CONFIG"


@dataclass_json
@dataclass
class CorpusConfig:
    noise_threshold: float = DEFAULT_NOISE_THRESHOLD
    dev_fraction: float = DEFAULT_DEV_FRACTION


@dataclass_json
@dataclass
class SynthConfig:
    profile: str = "ivanchev"
    substitution_only: bool = False
    whitespace_noise: bool = False


@dataclass_json
@dataclass
class DetectorConfig:
    kind: str = "ngram"
    n_min: int = DEFAULT_NGRAM_RANGE[0]
    n_max: int = DEFAULT_NGRAM_RANGE[1]
    hash_bits: int = DEFAULT_HASH_BITS
    epochs: int = DEFAULT_DETECTOR_EPOCHS
    learning_rate: float = DEFAULT_DETECTOR_LR
    use_context: bool = True
    threshold: float = DEFAULT_THRESHOLD
    seed: int = DEFAULT_SEED

    @property
    def n_range(self) -> Tuple[int, int]:
        return (self.n_min, self.n_max)


@dataclass_json
@dataclass
class CorrectorConfig:
    """
    Hyperparameters of the seq2seq corrector.

    `copy` and `coverage` switch the two architectural enhancements;
    `lambda_diag` and `lambda_cov` weight the auxiliary losses.
    """

    kind: str = "seq2seq"
    embedding_size: int = 32
    hidden_size: int = 64
    diag_window: int = DEFAULT_DIAG_WINDOW
    beam_width: int = DEFAULT_BEAM_WIDTH
    max_output_len: int = DEFAULT_MAX_OUTPUT_LEN
    lambda_diag: float = 1.0
    lambda_cov: float = 1.0
    copy: bool = True
    coverage: bool = True
    epochs: int = DEFAULT_CORRECTOR_EPOCHS
    patience: int = DEFAULT_PATIENCE
    learning_rate: float = DEFAULT_CORRECTOR_LR
    batch_size: int = 32
    clip_norm: float = DEFAULT_CLIP_NORM
    init_scale: float = 0.1
    use_context: bool = False
    teacher_forcing: bool = True
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        """Check the invariants every trainer and decoder relies on."""
        if self.diag_window < 1:
            raise ConfigError(f"diag_window must be >= 1, got {self.diag_window}")
        if self.beam_width < 1:
            raise ConfigError(f"beam_width must be >= 1, got {self.beam_width}")
        if self.lambda_diag < 0 or self.lambda_cov < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.embedding_size < 1 or self.hidden_size < 1 or self.batch_size < 1:
            raise ConfigError("embedding_size, hidden_size and batch_size must be positive")
        if not self.teacher_forcing:
            raise ConfigError("training without teacher forcing is not supported")


def corrector_variant(name: str, **overrides: Any) -> CorrectorConfig:
    """
    Build a corrector config for one of the ablation variants.

    Args:
        name: One of "base", "copy", "final"
        **overrides: Field values applied on top of the variant

    Returns:
        CorrectorConfig for the variant
    """
    if name == "base":
        base = CorrectorConfig(copy=False, coverage=False, lambda_diag=0.0, lambda_cov=0.0)
    elif name == "copy":
        base = CorrectorConfig(copy=True, coverage=False, lambda_diag=0.0, lambda_cov=0.0)
    elif name == "final":
        base = CorrectorConfig()
    else:
        raise ConfigError(f"Unknown corrector variant '{name}', expected one of {CORRECTOR_VARIANTS}")
    for key, value in overrides.items():
        if value is not None:
            setattr(base, key, value)
    return base


@dataclass_json
@dataclass
class PathsConfig:
    corpus: Optional[str] = None
    synthetic: Optional[str] = None
    lexicon: Optional[str] = None
    rules: Optional[str] = None
    matrix: Optional[str] = None
    detector_model: Optional[str] = None
    corrector_model: Optional[str] = None
    output: str = "runs/latest"


@dataclass_json
@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    corrector: CorrectorConfig = field(default_factory=CorrectorConfig)
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS

    def propagate_seed(self) -> None:
        """Push the global seed into every stochastic component."""
        self.detector.seed = self.seed
        self.corrector.seed = self.seed


def default_config_path() -> Optional[str]:
    """
    Return the config path named by the environment, reading `.env` if present.

    Returns:
        Path string or None when the variable is unset
    """
    load_dotenv()
    path = os.getenv(CONFIG_ENV_VAR)
    if path:
        logging.debug(f"Using config path from {CONFIG_ENV_VAR}: {path}")
    return path or None


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        elif value is not None:
            merged[key] = value
    return merged


def load_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> PipelineConfig:
    """
    Load a pipeline configuration.

    Precedence: built-in defaults < config file < overrides (command-line flags).

    Args:
        path: TOML config file; falls back to the HISTOCR_CONFIG environment variable
        overrides: Nested dict of values taken from the command line

    Returns:
        Validated PipelineConfig with the global seed propagated

    Raises:
        ConfigError: If the file cannot be read or parsed
        ValidationError: If the document does not match the schema
    """
    # Import here to avoid circular imports
    from utils.validation import validate_config_document

    document: Dict[str, Any] = PipelineConfig().to_dict()
    path = path or default_config_path()

    if path:
        try:
            file_document = toml.load(path)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except toml.TomlDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid TOML: {e}") from e
        validate_config_document(file_document)
        document = _deep_merge(document, file_document)
        logging.info(f"Loaded configuration from {path}")

    if overrides:
        document = _deep_merge(document, overrides)

    validate_config_document(document)
    config = PipelineConfig.from_dict(document)
    config.propagate_seed()
    config.corrector.validate()
    return config


def config_echo(config: PipelineConfig) -> Dict[str, Any]:
    """Return the config as a plain dict suitable for embedding in reports."""
    return config.to_dict()


def shipped_profile_paths(name: str) -> Tuple[Path, Path]:
    """Return (rules, exceptions) file paths of a shipped orthography profile."""
    name = name.lower()
    if name not in SHIPPED_PROFILES:
        raise ConfigError(f"Unknown orthography profile '{name}', expected one of {SHIPPED_PROFILES}")
    return PROFILE_DIR / f"{name}.rules", PROFILE_DIR / f"{name}.exceptions"

