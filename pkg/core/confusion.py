"""
Character confusion matrices built from aligned corpora, and sampling from them.

Rows are gold characters, columns are the characters the OCR emitted. Alignment
symbols on either side are recorded as EPSILON: a gold character emitted as
EPSILON was deleted, an EPSILON row holds characters the OCR inserted.
"""

# Standard library imports
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
import pandas as pd

# Local imports
from core.corpus import AlignedRecord
from utils.config import ALIGNMENT_SYMBOLS
from utils.error_handling import DataError, EmptyMatrix, MalformedRecord
from utils.parallel import parallel_map

EPSILON = "<eps>"

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


@dataclass
class ConfusionMatrix:
    counts: Dict[Tuple[str, str], int] = field(default_factory=dict)
    row_totals: Dict[str, int] = field(default_factory=dict)
    _rows: Dict[str, Tuple[List[str], np.ndarray]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    @classmethod
    def from_counts(cls, counts: Dict[Tuple[str, str], int]) -> "ConfusionMatrix":
        """Build a matrix from pair counts, dropping zero entries."""
        kept = {pair: int(count) for pair, count in counts.items() if count > 0}
        row_totals: Dict[str, int] = {}
        for (source, _), count in kept.items():
            row_totals[source] = row_totals.get(source, 0) + count
        return cls(counts=kept, row_totals=row_totals)

    @property
    def total(self) -> int:
        return sum(self.row_totals.values())

    @property
    def identity_mass(self) -> int:
        return sum(count for (source, emitted), count in self.counts.items() if source == emitted)

    def is_empty(self) -> bool:
        return self.total == 0

    def probability(self, source: str, emitted: str) -> float:
        row_total = self.row_totals.get(source, 0)
        if row_total == 0:
            return 0.0
        return self.counts.get((source, emitted), 0) / row_total

    def row(self, source: str) -> Tuple[List[str], np.ndarray]:
        """
        Emitted symbols of one row and their cumulative probabilities.

        Emitted symbols are sorted so that sampling depends only on the counts.
        """
        if source not in self._rows:
            emitted = sorted(e for (s, e) in self.counts if s == source)
            weights = np.array([self.counts[(source, e)] for e in emitted], dtype=np.float64)
            cumulative = np.cumsum(weights) / weights.sum()
            cumulative[-1] = 1.0
            self._rows[source] = (emitted, cumulative)
        return self._rows[source]

    def insertion_probabilities(self) -> Dict[str, float]:
        """Per-gap probability of each inserted character (its share of the total mass)."""
        total = self.total
        if total == 0:
            return {}
        return {
            emitted: count / total
            for (source, emitted), count in sorted(self.counts.items())
            if source == EPSILON and emitted != EPSILON
        }

    def to_frame(self) -> pd.DataFrame:
        """Long-format table: source, emitted, count, probability (sorted by source, emitted)."""
        rows = [
            {
                "source": source,
                "emitted": emitted,
                "count": count,
                "probability": count / self.row_totals[source],
            }
            for (source, emitted), count in sorted(self.counts.items())
        ]
        return pd.DataFrame(rows, columns=["source", "emitted", "count", "probability"])


def _symbol(char: str) -> str:
    return EPSILON if char in ALIGNMENT_SYMBOLS else char


def _record_counts(record: AlignedRecord, substitution_only: bool = False) -> Counter:
    if len(record.ocr_aligned) != len(record.gs_aligned):
        raise DataError(f"Record {record.source_id} violates the aligned-length invariant")
    counts: Counter = Counter()
    for gs_char, ocr_char in zip(record.gs_aligned, record.ocr_aligned):
        source, emitted = _symbol(gs_char), _symbol(ocr_char)
        if substitution_only and (source == EPSILON or emitted == EPSILON):
            continue
        counts[(source, emitted)] += 1
    return counts


def _substitution_counts(record: AlignedRecord) -> Counter:
    return _record_counts(record, substitution_only=True)


def build_confusion(
    records: Sequence[AlignedRecord], substitution_only: bool = False, n_jobs: int = 1
) -> ConfusionMatrix:
    """
    Count (gold, emitted) character pairs over aligned records.

    Every aligned position contributes one count, identity pairs included, so the
    total mass equals the number of aligned positions. With substitution_only,
    positions involving EPSILON are skipped.

    Args:
        records: Aligned records
        substitution_only: Ignore insertion and deletion positions
        n_jobs: Parallel jobs; per-record counts are merged in input order

    Returns:
        ConfusionMatrix
    """
    count_fn = _substitution_counts if substitution_only else _record_counts
    merged: Counter = Counter()
    for part in parallel_map(count_fn, records, n_jobs=n_jobs):
        merged.update(part)

    matrix = ConfusionMatrix.from_counts(dict(merged))
    if not matrix.is_empty():
        logging.info(
            f"Confusion matrix from {len(records)} records: {matrix.total} positions, "
            f"{len(matrix.row_totals)} source symbols, error rate {error_rate(matrix):.4f}"
        )
    return matrix


def error_rate(matrix: ConfusionMatrix) -> float:
    """
    Fraction of non-identity mass: 1 - identity / total.

    Raises:
        EmptyMatrix: If the matrix holds no counts
    """
    total = matrix.total
    if total == 0:
        raise EmptyMatrix("Error rate is undefined for an empty confusion matrix")
    return 1.0 - matrix.identity_mass / total


def sample_emission(matrix: ConfusionMatrix, source_char: str, rng: np.random.Generator) -> str:
    """
    Draw the emitted symbol for one gold character.

    Characters without a row pass through unchanged. EPSILON means delete.
    """
    if matrix.row_totals.get(source_char, 0) == 0:
        return source_char
    emitted, cumulative = matrix.row(source_char)
    index = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return emitted[min(index, len(emitted) - 1)]


def _escape(symbol: str) -> str:
    if symbol == EPSILON:
        return symbol
    return "".join(_ESCAPES.get(ch, ch) for ch in symbol)


def _unescape(text: str) -> str:
    if text == EPSILON:
        return text
    result: List[str] = []
    i = 0
    while i < len(text):
        pair = text[i : i + 2]
        if pair in _UNESCAPES:
            result.append(_UNESCAPES[pair])
            i += 2
        else:
            result.append(text[i])
            i += 1
    return "".join(result)


def format_matrix(matrix: ConfusionMatrix) -> str:
    """Serialize as `source<TAB>emitted<TAB>count` lines in lexicographic order."""
    lines = [
        f"{_escape(source)}\t{_escape(emitted)}\t{count}"
        for (source, emitted), count in sorted(matrix.counts.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def save_matrix(matrix: ConfusionMatrix, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(format_matrix(matrix), encoding="utf-8")
    logging.info(f"Saved confusion matrix ({len(matrix.counts)} cells) to {path}")


def parse_matrix(text: str, source: Optional[str] = None) -> ConfusionMatrix:
    """
    Parse the tab-separated matrix format.

    Raises:
        MalformedRecord: On a line without three fields or with a bad count
    """
    counts: Dict[Tuple[str, str], int] = {}
    for line_number, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedRecord(f"expected 3 tab-separated fields in {source or 'matrix'}", line_number)
        try:
            count = int(fields[2])
        except ValueError as e:
            raise MalformedRecord(f"bad count {fields[2]!r}", line_number) from e
        if count < 0:
            raise MalformedRecord(f"negative count {count}", line_number)
        pair = (_unescape(fields[0]), _unescape(fields[1]))
        counts[pair] = counts.get(pair, 0) + count
    return ConfusionMatrix.from_counts(counts)


def load_matrix(path: str) -> ConfusionMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read confusion matrix {path}: {e}") from e
    return parse_matrix(text, source=path)
