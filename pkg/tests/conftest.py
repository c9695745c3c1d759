"""
Shared fixtures for the histocr test suite.
"""

# Standard library imports
from pathlib import Path
from typing import List

# Third-party imports
import pytest

# Local imports
from core.corpus import AlignedRecord, SentencePair, align_tokens, load_sentences
from core.detect import Lexicon
from utils.config import CorrectorConfig

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def aligned_20_path() -> str:
    """20 two-word sentences of 10 gold characters; records 0, 4, 8, 12, 16 hold one substitution."""
    return str(FIXTURES / "aligned_20.txt")


@pytest.fixture
def aligned_20(aligned_20_path) -> List[SentencePair]:
    return load_sentences(aligned_20_path)


@pytest.fixture
def make_sentence():
    """Build a SentencePair from an aligned OCR/gold pair; the raw line is derived."""

    def factory(ocr_aligned: str, gs_aligned: str, source_id: str = "test:0") -> SentencePair:
        raw = ocr_aligned.replace("@", "")
        return align_tokens(AlignedRecord(raw, ocr_aligned, gs_aligned, source_id))

    return factory


@pytest.fixture
def small_lexicon() -> Lexicon:
    return Lexicon.from_counts({"хлѣбъ": 5, "вода": 7, "градъ": 3, "село": 2, "пѣсень": 4, "домъ": 6})


@pytest.fixture
def tiny_corrector_config() -> CorrectorConfig:
    """A model small enough for gradient checks and quick training runs."""
    return CorrectorConfig(
        embedding_size=8,
        hidden_size=8,
        batch_size=4,
        epochs=2,
        patience=1,
        beam_width=3,
        max_output_len=12,
        learning_rate=1e-2,
        seed=7,
    )
