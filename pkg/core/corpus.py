"""
Aligned-corpus parsing, token labeling, noise filtering and corpus statistics.

A corpus file holds records of three tagged lines:

    [OCR_toInput] <raw OCR>
    [OCR_aligned] <OCR with @ padding>
    [GS_aligned] <gold with @ padding>

separated by a blank line. `@` pads the alignment, `#` marks uncertain
characters; both are removed from tokens after slicing.
"""

# Standard library imports
import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, TypeVar

# Third-party imports
import ndjson
import pandas as pd
from dataclasses_json import dataclass_json

# Local imports
from core.metrics import cer, mean_and_std, normalized_levenshtein
from utils.config import (
    ALIGNMENT_SYMBOLS,
    DEFAULT_DEV_FRACTION,
    DEFAULT_NOISE_THRESHOLD,
    PADDING_SYMBOL,
    TAG_GS_ALIGNED,
    TAG_OCR_ALIGNED,
    TAG_OCR_INPUT,
    UNCERTAINTY_SYMBOL,
)
from utils.error_handling import DataError, MalformedRecord
from utils.parallel import parallel_map

T = TypeVar("T")

_TOKEN_PATTERN = re.compile(r"\S+")
_STRIP_TABLE = str.maketrans("", "", ALIGNMENT_SYMBOLS)
_TAGS = (TAG_OCR_INPUT, TAG_OCR_ALIGNED, TAG_GS_ALIGNED)


@dataclass(frozen=True)
class AlignedRecord:
    ocr_raw: str
    ocr_aligned: str
    gs_aligned: str
    source_id: str = ""


@dataclass(frozen=True)
class TokenPair:
    ocr_token: str
    gs_token: str
    label: int
    char_span: Tuple[int, int]


@dataclass
class SentencePair:
    record: AlignedRecord
    tokens: List[TokenPair]
    norm_lev: float

    @property
    def ocr_text(self) -> str:
        return strip_alignment(self.record.ocr_aligned)

    @property
    def gs_text(self) -> str:
        return strip_alignment(self.record.gs_aligned)

    @property
    def labels(self) -> List[int]:
        return [token.label for token in self.tokens]


@dataclass_json
@dataclass
class CorpusStats:
    n_sentences: int
    n_words: int
    n_errors: int
    mean_cer: Optional[float] = None
    std_cer: Optional[float] = None


def strip_alignment(text: str) -> str:
    """Remove the `@` and `#` alignment symbols."""
    return text.translate(_STRIP_TABLE)


def _tagged_value(line: str, tag: str, line_number: int) -> str:
    if not line.startswith(tag):
        found = line.split(" ", 1)[0] if line else "<empty line>"
        raise MalformedRecord(f"expected {tag}, found {found}", line_number)
    value = line[len(tag) :]
    # One separator space follows the tag; the rest belongs to the stream
    return value[1:] if value.startswith(" ") else value


def parse_aligned(text: str, source: str = "") -> List[AlignedRecord]:
    """
    Parse a tagged-triplet aligned corpus.

    Args:
        text: Full file contents
        source: Name used as the prefix of each record's source_id

    Returns:
        One AlignedRecord per triplet, in file order

    Raises:
        MalformedRecord: On a missing or misplaced tag, an aligned-length mismatch,
            or a raw OCR line inconsistent with its aligned stream
    """
    records: List[AlignedRecord] = []
    pending: List[Tuple[int, str]] = []
    lines = text.splitlines()

    def flush() -> None:
        (n1, raw_line), (n2, ocr_line), (n3, gs_line) = pending
        ocr_raw = _tagged_value(raw_line, TAG_OCR_INPUT, n1)
        ocr_aligned = _tagged_value(ocr_line, TAG_OCR_ALIGNED, n2)
        gs_aligned = _tagged_value(gs_line, TAG_GS_ALIGNED, n3)

        if len(ocr_aligned) != len(gs_aligned):
            raise MalformedRecord(
                f"aligned lengths differ ({len(ocr_aligned)} vs {len(gs_aligned)})", n2
            )
        if ocr_raw != ocr_aligned.replace(PADDING_SYMBOL, ""):
            if ocr_raw.replace(UNCERTAINTY_SYMBOL, "") != strip_alignment(ocr_aligned):
                raise MalformedRecord("raw OCR does not match the aligned OCR stream", n1)
            logging.warning(f"{source or 'corpus'} line {n1}: raw OCR differs only by '#' marks")

        records.append(
            AlignedRecord(
                ocr_raw=ocr_raw,
                ocr_aligned=ocr_aligned,
                gs_aligned=gs_aligned,
                source_id=f"{source}:{len(records)}" if source else str(len(records)),
            )
        )
        pending.clear()

    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            if pending:
                raise MalformedRecord(
                    f"incomplete record, missing {_TAGS[len(pending)]}", line_number
                )
            continue
        pending.append((line_number, line))
        if len(pending) == 3:
            flush()

    if pending:
        raise MalformedRecord(f"incomplete record, missing {_TAGS[len(pending)]}", len(lines) + 1)

    logging.debug(f"Parsed {len(records)} aligned records from {source or 'text'}")
    return records


def read_aligned(path: str) -> List[AlignedRecord]:
    """Read and parse an aligned corpus file."""
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path} is not valid UTF-8: {e}") from e
    except OSError as e:
        raise DataError(f"Cannot read corpus {path}: {e}") from e
    records = parse_aligned(text, source=file_path.stem)
    logging.info(f"Read {len(records)} records from {path}")
    return records


def format_aligned(records: Sequence[AlignedRecord]) -> str:
    """Serialize records in the tagged-triplet format (inverse of parse_aligned)."""
    blocks = [
        f"{TAG_OCR_INPUT} {r.ocr_raw}\n{TAG_OCR_ALIGNED} {r.ocr_aligned}\n{TAG_GS_ALIGNED} {r.gs_aligned}"
        for r in records
    ]
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def align_tokens(record: AlignedRecord) -> SentencePair:
    """
    Derive labeled token pairs from an aligned record.

    The gold stream is split on whitespace; each gold token's character span is
    sliced from the OCR stream at the same positions, then `@`/`#` are removed
    from both slices and the label is set by exact comparison.
    """
    tokens: List[TokenPair] = []
    for match in _TOKEN_PATTERN.finditer(record.gs_aligned):
        start, end = match.span()
        gs_token = strip_alignment(match.group())
        ocr_token = strip_alignment(record.ocr_aligned[start:end])
        tokens.append(
            TokenPair(
                ocr_token=ocr_token,
                gs_token=gs_token,
                label=int(ocr_token != gs_token),
                char_span=(start, end),
            )
        )

    norm_lev = normalized_levenshtein(
        strip_alignment(record.ocr_aligned), strip_alignment(record.gs_aligned)
    )
    return SentencePair(record=record, tokens=tokens, norm_lev=norm_lev)


def align_corpus(records: Sequence[AlignedRecord], n_jobs: int = 1) -> List[SentencePair]:
    """Align every record, in parallel when n_jobs > 1; order is preserved."""
    return parallel_map(align_tokens, records, n_jobs=n_jobs)


def filter_by_noise(
    sentences: Sequence[SentencePair], threshold: float = DEFAULT_NOISE_THRESHOLD
) -> List[SentencePair]:
    """
    Keep sentences whose normalized Levenshtein distance is strictly below threshold.

    Raises:
        DataError: If threshold is outside (0, 1]
    """
    if not 0 < threshold <= 1:
        raise DataError(f"Noise threshold must be in (0, 1], got {threshold}")
    kept = [sentence for sentence in sentences if sentence.norm_lev < threshold]
    dropped = len(sentences) - len(kept)
    if dropped:
        logging.info(f"Dropped {dropped} of {len(sentences)} sentences with norm. Levenshtein >= {threshold}")
    return kept


def sentence_frame(sentences: Sequence[SentencePair]) -> pd.DataFrame:
    """
    Per-sentence statistics as a DataFrame.

    Columns: source_id, n_words, n_errors, norm_lev, cer (NaN when the gold is empty).
    """
    rows = []
    for sentence in sentences:
        gs_text = sentence.gs_text
        rows.append(
            {
                "source_id": sentence.record.source_id,
                "n_words": len(sentence.tokens),
                "n_errors": sum(sentence.labels),
                "norm_lev": sentence.norm_lev,
                "cer": cer(sentence.ocr_text, gs_text) if gs_text else float("nan"),
            }
        )
    return pd.DataFrame(rows, columns=["source_id", "n_words", "n_errors", "norm_lev", "cer"])


def corpus_stats(sentences: Sequence[SentencePair]) -> CorpusStats:
    """
    Sentence, word and error counts with mean and population std of per-sentence CER.

    Sentences with an empty gold standard count towards the totals but are
    excluded from the CER statistics.
    """
    frame = sentence_frame(sentences)
    cer_values = frame["cer"].dropna().tolist()
    excluded = len(frame) - len(cer_values)
    if excluded:
        logging.warning(f"{excluded} sentences with empty gold excluded from CER statistics")

    mean_cer, std_cer = mean_and_std(cer_values)
    return CorpusStats(
        n_sentences=len(frame),
        n_words=int(frame["n_words"].sum()) if len(frame) else 0,
        n_errors=int(frame["n_errors"].sum()) if len(frame) else 0,
        mean_cer=mean_cer,
        std_cer=std_cer,
    )


def token_pair_records(sentences: Sequence[SentencePair]) -> List[Dict[str, Any]]:
    """Flatten sentences into token-pair export records."""
    return [
        {
            "source_id": sentence.record.source_id,
            "index": index,
            "ocr_token": token.ocr_token,
            "gs_token": token.gs_token,
            "label": token.label,
        }
        for sentence in sentences
        for index, token in enumerate(sentence.tokens)
    ]


def export_token_pairs(sentences: Sequence[SentencePair], path: str) -> int:
    """
    Write the line-delimited token-pair export.

    Returns:
        Number of records written
    """
    records = token_pair_records(sentences)
    write_records(records, path)
    logging.info(f"Wrote {len(records)} token pairs to {path}")
    return len(records)


def write_records(records: Sequence[Dict[str, Any]], path: str) -> None:
    """Write line-delimited records with sorted keys."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    text = ndjson.dumps(list(records), ensure_ascii=False, sort_keys=True)
    Path(path).write_text(text + ("\n" if records else ""), encoding="utf-8")


def read_records(path: str) -> List[Dict[str, Any]]:
    """Read line-delimited records."""
    try:
        with open(path, encoding="utf-8") as handle:
            return ndjson.load(handle)
    except (OSError, ValueError) as e:
        raise DataError(f"Cannot read records from {path}: {e}") from e


def split_train_dev(
    items: Sequence[T], dev_fraction: float = DEFAULT_DEV_FRACTION, seed: int = 0
) -> Tuple[List[T], List[T]]:
    """
    Deterministic shuffled train/dev split (90/10 by default).

    The dev part holds at least one item whenever there are two or more items.
    """
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    n_dev = int(round(len(items) * dev_fraction))
    if len(items) >= 2:
        n_dev = min(max(n_dev, 1), len(items) - 1)
    else:
        n_dev = 0
    dev = [items[i] for i in order[:n_dev]]
    train = [items[i] for i in order[n_dev:]]
    return train, dev


def load_sentences(
    path: str, threshold: Optional[float] = None, n_jobs: int = 1
) -> List[SentencePair]:
    """Read, align and optionally noise-filter an aligned corpus file."""
    sentences = align_corpus(read_aligned(path), n_jobs=n_jobs)
    if threshold is not None:
        sentences = filter_by_noise(sentences, threshold)
    return sentences
