"""
Token-level error detection: a lexicon baseline, a hashed character n-gram
logistic classifier, and the sub-token label merge.
"""

# Standard library imports
import logging
import re
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
from scipy.special import expit
from sklearn.utils import murmurhash3_32

# Local imports
from core.corpus import SentencePair
from core.numkit import load_checkpoint, save_checkpoint
from utils.config import DEFAULT_THRESHOLD, DetectorConfig
from utils.error_handling import CheckpointError, DataError, DegenerateData, GapInGroups, MalformedRecord

Context = Tuple[str, str]

_LABEL_LINE = re.compile(r"^__label__([01])\s+(.*)$")
_NO_CONTEXT: Context = ("", "")


@dataclass
class Lexicon:
    """Word frequencies; lookup is exact after case folding."""

    entries: Dict[str, int] = field(default_factory=dict)

    @staticmethod
    def normalize(word: str) -> str:
        return word.casefold()

    @classmethod
    def from_counts(cls, counts: Dict[str, int]) -> "Lexicon":
        entries: Dict[str, int] = {}
        for word, count in counts.items():
            if not word or count < 1:
                continue
            key = cls.normalize(word)
            entries[key] = entries.get(key, 0) + int(count)
        return cls(entries=entries)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Lexicon":
        return cls.from_counts(Counter(tokens))

    @classmethod
    def load(cls, path: str) -> "Lexicon":
        """
        Read `word<TAB>frequency` or bare `word` lines (frequency 1).

        Raises:
            DataError: If the file cannot be read
            MalformedRecord: On a bad frequency
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise DataError(f"Cannot read lexicon {path}: {e}") from e

        counts: Dict[str, int] = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            word, _, frequency = line.strip().partition("\t")
            try:
                count = int(frequency) if frequency else 1
            except ValueError as e:
                raise MalformedRecord(f"bad frequency {frequency!r} in {path}", line_number) from e
            if count < 1:
                raise MalformedRecord(f"frequency must be >= 1 in {path}", line_number)
            counts[word] = counts.get(word, 0) + count

        lexicon = cls.from_counts(counts)
        logging.info(f"Loaded lexicon with {len(lexicon)} entries from {path}")
        return lexicon

    def save(self, path: str) -> None:
        lines = [f"{word}\t{count}" for word, count in sorted(self.entries.items())]
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def contains(self, token: str) -> bool:
        return bool(token) and self.normalize(token) in self.entries

    def frequency(self, word: str) -> int:
        return self.entries.get(self.normalize(word), 0)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DetectorExample:
    token: str
    label: int
    context: Context = _NO_CONTEXT


@dataclass
class SubtokenGroup:
    token_index: int
    subtoken_predictions: List[int]


@dataclass
class NgramDetectorModel:
    weights: np.ndarray
    bias: float
    n_range: Tuple[int, int]
    hash_bits: int
    use_context: bool = True
    losses: List[float] = field(default_factory=list, repr=False)

    def probability(self, token: str, context: Context = _NO_CONTEXT) -> float:
        indices = featurize(token, context, self.n_range, self.hash_bits, self.use_context)
        return float(expit(self.weights[indices].sum() + self.bias))


def dict_detect(token: str, lexicon: Lexicon) -> int:
    """0 if the case-folded token is in the lexicon, else 1."""
    return 0 if lexicon.contains(token) else 1


def char_ngrams(token: str, n_range: Tuple[int, int]) -> List[str]:
    """Distinct character n-grams of `<token>` for every n in n_range, in first-seen order."""
    marked = f"<{token}>"
    n_min, n_max = n_range
    grams: Dict[str, None] = {}
    for n in range(n_min, n_max + 1):
        for start in range(len(marked) - n + 1):
            grams[marked[start : start + n]] = None
    return list(grams)


def featurize(
    token: str,
    context: Context,
    n_range: Tuple[int, int],
    hash_bits: int,
    use_context: bool = True,
) -> np.ndarray:
    """
    Hashed binary feature indices of a token and, optionally, its neighbours.

    Token grams and the previous/next token grams live in separate namespaces
    before hashing into 2**hash_bits buckets.

    Returns:
        Sorted unique bucket indices
    """
    n_min, n_max = n_range
    if n_min < 1 or n_max < n_min:
        raise DataError(f"Invalid n-gram range {n_range}")

    keys = [f"w:{gram}" for gram in char_ngrams(token, n_range)]
    if use_context:
        prev_token, next_token = context
        keys += [f"p:{gram}" for gram in char_ngrams(prev_token, n_range)]
        keys += [f"n:{gram}" for gram in char_ngrams(next_token, n_range)]

    size = 1 << hash_bits
    buckets = {murmurhash3_32(key, seed=0, positive=True) % size for key in keys}
    return np.array(sorted(buckets), dtype=np.int64)


def _logistic_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    eps = 1e-12
    return float(-np.mean(labels * np.log(probabilities + eps) + (1 - labels) * np.log(1 - probabilities + eps)))


def train_ngram_detector(
    examples: Sequence[DetectorExample],
    config: Optional[DetectorConfig] = None,
    batch_size: Optional[int] = 1,
) -> NgramDetectorModel:
    """
    Fit a hashed n-gram logistic classifier.

    Args:
        examples: Labeled tokens (label 1 = erroneous)
        config: Detector hyperparameters (n-gram range, hash bits, epochs, rate, seed)
        batch_size: Examples per update; 1 is plain SGD, None uses the full batch

    Returns:
        NgramDetectorModel; `losses` holds the mean logistic loss after each epoch

    Raises:
        DegenerateData: If the examples contain a single class
    """
    config = config or DetectorConfig()
    labels = np.array([example.label for example in examples], dtype=np.float64)
    if len(examples) == 0 or labels.min() == labels.max():
        raise DegenerateData("Detector training needs at least one example of each class")

    features = [
        featurize(e.token, e.context, config.n_range, config.hash_bits, config.use_context)
        for e in examples
    ]
    weights = np.zeros(1 << config.hash_bits, dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(config.seed)
    step = len(examples) if batch_size is None else max(1, batch_size)

    def scores() -> np.ndarray:
        return np.array([weights[idx].sum() for idx in features]) + bias

    losses: List[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(examples)) if batch_size is not None else np.arange(len(examples))
        for start in range(0, len(order), step):
            batch = order[start : start + step]
            grad_w = np.zeros_like(weights)
            grad_b = 0.0
            for i in batch:
                error = expit(weights[features[i]].sum() + bias) - labels[i]
                grad_w[features[i]] += error
                grad_b += error
            weights -= config.learning_rate * grad_w / len(batch)
            bias -= config.learning_rate * grad_b / len(batch)

        losses.append(_logistic_loss(expit(scores()), labels))
        logging.debug(f"Detector epoch {epoch + 1}/{config.epochs}: loss {losses[-1]:.5f}")

    logging.info(
        f"Trained n-gram detector on {len(examples)} tokens "
        f"({int(labels.sum())} erroneous), final loss {losses[-1]:.5f}"
    )
    return NgramDetectorModel(
        weights=weights,
        bias=bias,
        n_range=config.n_range,
        hash_bits=config.hash_bits,
        use_context=config.use_context,
        losses=losses,
    )


def ngram_detect(
    token: str,
    context: Context,
    model: NgramDetectorModel,
    threshold: float = DEFAULT_THRESHOLD,
) -> int:
    """1 iff the model's error probability is at least threshold."""
    return int(model.probability(token, context) >= threshold)


def merge_subtoken_labels(groups: Sequence[SubtokenGroup]) -> List[int]:
    """
    Token labels from sub-token predictions: a token is erroneous if any of its
    sub-tokens is.

    Raises:
        GapInGroups: If the groups do not cover token indices 0..n-1 exactly once
    """
    by_index: Dict[int, SubtokenGroup] = {}
    for group in groups:
        if group.token_index in by_index:
            raise GapInGroups(f"Token {group.token_index} appears in more than one group")
        if not group.subtoken_predictions:
            raise GapInGroups(f"Token {group.token_index} has no sub-token predictions")
        by_index[group.token_index] = group

    missing = sorted(set(range(len(by_index))) - set(by_index))
    if missing or (by_index and max(by_index) != len(by_index) - 1):
        raise GapInGroups(f"Groups do not cover tokens 0..{len(by_index) - 1}; missing {missing}")

    return [int(any(by_index[i].subtoken_predictions)) for i in range(len(by_index))]


def read_labeled_lines(text: str) -> List[DetectorExample]:
    """
    Parse `__label__<0|1> <word>` training lines (no context).

    Raises:
        MalformedRecord: On a line that does not follow the format
    """
    examples: List[DetectorExample] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        match = _LABEL_LINE.match(line.strip())
        if not match:
            raise MalformedRecord("expected `__label__<0|1> <word>`", line_number)
        examples.append(DetectorExample(token=match.group(2), label=int(match.group(1))))
    return examples


def format_labeled_lines(examples: Sequence[DetectorExample]) -> str:
    return "".join(f"__label__{example.label} {example.token}\n" for example in examples)


def sentence_contexts(tokens: Sequence[str]) -> List[Context]:
    """(previous, next) neighbours of every token; sentence edges are empty strings."""
    return [
        (tokens[i - 1] if i > 0 else "", tokens[i + 1] if i + 1 < len(tokens) else "")
        for i in range(len(tokens))
    ]


def detector_examples(sentences: Sequence[SentencePair]) -> List[DetectorExample]:
    """Labeled OCR tokens with their OCR neighbours as context."""
    examples: List[DetectorExample] = []
    for sentence in sentences:
        tokens = [token.ocr_token for token in sentence.tokens]
        for token, context in zip(sentence.tokens, sentence_contexts(tokens)):
            examples.append(DetectorExample(token=token.ocr_token, label=token.label, context=context))
    return examples


class TokenDetector(ABC):
    """Labels every token of a sentence: 1 = erroneous, 0 = correct."""

    @abstractmethod
    def detect(self, tokens: Sequence[str]) -> List[int]:
        ...


class DictionaryDetector(TokenDetector):
    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def detect(self, tokens: Sequence[str]) -> List[int]:
        return [dict_detect(token, self.lexicon) for token in tokens]


class NgramDetector(TokenDetector):
    def __init__(self, model: NgramDetectorModel, threshold: float = DEFAULT_THRESHOLD):
        self.model = model
        self.threshold = threshold

    def detect(self, tokens: Sequence[str]) -> List[int]:
        return [
            ngram_detect(token, context, self.model, self.threshold)
            for token, context in zip(tokens, sentence_contexts(tokens))
        ]


def save_detector(model: NgramDetectorModel, path: str) -> None:
    metadata = {
        "kind": "ngram_detector",
        "n_range": list(model.n_range),
        "hash_bits": model.hash_bits,
        "use_context": model.use_context,
    }
    save_checkpoint(path, {"weights": model.weights, "bias": np.array([model.bias])}, metadata)
    logging.info(f"Saved n-gram detector to {path}")


def load_detector(path: str) -> NgramDetectorModel:
    """
    Raises:
        CheckpointError: If the file is not an n-gram detector checkpoint
    """
    arrays, metadata = load_checkpoint(path)
    if metadata.get("kind") != "ngram_detector" or "weights" not in arrays or "bias" not in arrays:
        raise CheckpointError(f"{path} is not an n-gram detector checkpoint")
    hash_bits = int(metadata["hash_bits"])
    if arrays["weights"].shape != (1 << hash_bits,):
        raise CheckpointError(f"{path}: weight vector does not match {hash_bits} hash bits")
    return NgramDetectorModel(
        weights=arrays["weights"],
        bias=float(arrays["bias"][0]),
        n_range=(int(metadata["n_range"][0]), int(metadata["n_range"][1])),
        hash_bits=hash_bits,
        use_context=bool(metadata["use_context"]),
    )
