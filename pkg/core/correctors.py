"""
Token correctors behind a common interface: the lexicon kNN baseline and the
seq2seq model with beam search.
"""

# Standard library imports
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

# Local imports
from core.beam import Candidate, beam_search
from core.detect import Lexicon
from core.knn import build_length_index, knn_correct, knn_ranked
from core.seq2seq import Seq2SeqModel, make_source

Context = Tuple[str, str]


class TokenCorrector(ABC):
    """Maps an erroneous token (with its neighbours) to a correction."""

    @abstractmethod
    def candidates(self, token: str, k: int = 1, context: Context = ("", "")) -> List[Candidate]:
        ...

    def correct(self, token: str, context: Context = ("", "")) -> str:
        return self.candidates(token, 1, context)[0].text


class KnnCorrector(TokenCorrector):
    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon
        self.index = build_length_index(lexicon)

    def correct(self, token: str, context: Context = ("", "")) -> str:
        return knn_correct(token, self.lexicon, self.index)

    def candidates(self, token: str, k: int = 1, context: Context = ("", "")) -> List[Candidate]:
        # Lexicon neighbours carry no probability
        return [Candidate(text=text, log_prob=0.0, score=0.0) for text in knn_ranked(token, self.lexicon, k, self.index)]


class Seq2SeqCorrector(TokenCorrector):
    def __init__(self, model: Seq2SeqModel, beam_width: Optional[int] = None, max_output_len: Optional[int] = None):
        self.model = model
        self.beam_width = beam_width or model.config.beam_width
        self.max_output_len = model.config.max_output_len if max_output_len is None else max_output_len

    def candidates(self, token: str, k: int = 1, context: Context = ("", "")) -> List[Candidate]:
        if not token:
            return [Candidate(text=token, log_prob=0.0, score=0.0)]
        source = make_source(token, context, self.model.config.use_context)
        width = max(self.beam_width, k)
        return beam_search(self.model, source, width, self.max_output_len)[:k]
