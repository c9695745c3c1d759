"""
Beam-search and greedy decoding for the seq2seq corrector.
"""

# Standard library imports
from dataclasses import dataclass
from typing import List, Optional, Tuple

# Third-party imports
import numpy as np

# Local imports
from core.numkit import Tensor
from core.seq2seq import (
    EOS,
    LOG_EPS,
    PAD,
    SOS,
    UNK,
    EncoderOutput,
    Seq2SeqModel,
    attention_step,
    decode_step,
    encode_batch,
    make_batch,
)
from utils.error_handling import EmptyInput


@dataclass
class Hypothesis:
    prefix: List[int]
    log_prob: float
    state: Tuple[np.ndarray, np.ndarray]
    coverage: np.ndarray
    ended_with_eos: bool = False

    @property
    def emitted_length(self) -> int:
        return len(self.prefix) + (1 if self.ended_with_eos else 0)

    @property
    def score(self) -> float:
        """Log-probability divided by the emitted length (EOS included)."""
        return self.log_prob / max(1, self.emitted_length)


@dataclass
class Candidate:
    text: str
    log_prob: float
    score: float


class _Decoder:
    """Encodes one source once and scores next characters for a set of hypotheses."""

    def __init__(self, model: Seq2SeqModel, source: str):
        if not source:
            raise EmptyInput("Cannot decode from an empty source")
        self.model = model
        batch = make_batch([(source, "")], model.vocab, model.config.copy)
        self.oovs = batch.oovs[0]
        self.src_ext = batch.src_ext
        self.encoder = encode_batch(model.params, batch.src_ids, batch.src_mask)
        self.vocab_size = len(model.vocab)

    def initial(self) -> Hypothesis:
        h, c = self.encoder.final
        return Hypothesis(prefix=[], log_prob=0.0, state=(h.data[0], c.data[0]), coverage=np.zeros(self.src_ext.shape[1]))

    def _tiled(self, count: int) -> EncoderOutput:
        return EncoderOutput(
            states=Tensor(np.repeat(self.encoder.states.data, count, axis=0)),
            proj=Tensor(np.repeat(self.encoder.proj.data, count, axis=0)),
            mask=np.repeat(self.encoder.mask, count, axis=0),
            final=self.encoder.final,
        )

    def expand(self, live: List[Hypothesis]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Score the next symbol for every live hypothesis.

        Returns:
            (log-probabilities (L, V_ext), hidden (L, D), cell (L, D), coverage (L, N))
        """
        count = len(live)
        config = self.model.config
        h = Tensor(np.stack([hyp.state[0] for hyp in live]))
        c = Tensor(np.stack([hyp.state[1] for hyp in live]))
        coverage = np.stack([hyp.coverage for hyp in live])
        prev = np.array([hyp.prefix[-1] if hyp.prefix else SOS for hyp in live], dtype=np.int64)
        prev[prev >= self.vocab_size] = UNK

        alpha, context = attention_step(h, self._tiled(count), Tensor(coverage), self.model.params, config.coverage)
        distribution, (s, cell), _ = decode_step(
            prev, (h, c), context, alpha, self.model.params, np.repeat(self.src_ext, count, axis=0), config.copy
        )
        log_probs = np.log(distribution.data + LOG_EPS)
        log_probs[:, PAD] = -np.inf
        log_probs[:, SOS] = -np.inf
        return log_probs, s.data, cell.data, coverage + alpha.data

    def text(self, hyp: Hypothesis) -> str:
        return self.model.vocab.decode(hyp.prefix, self.oovs)


def beam_search(model: Seq2SeqModel, source: str, beam_width: Optional[int] = None, max_output_len: Optional[int] = None) -> List[Candidate]:
    """
    Width-B beam search over decode_step.

    Hypotheses end at EOS or after max_output_len symbols; the finished ones
    are ranked by length-normalized log-probability.

    Returns:
        Candidates, best first

    Raises:
        EmptyInput: If the source is empty
    """
    beam_width = beam_width or model.config.beam_width
    max_output_len = model.config.max_output_len if max_output_len is None else max_output_len
    decoder = _Decoder(model, source)
    if max_output_len == 0:
        return [Candidate(text="", log_prob=0.0, score=0.0)]

    live = [decoder.initial()]
    completed: List[Hypothesis] = []
    for _ in range(max_output_len):
        log_probs, hidden, cells, coverages = decoder.expand(live)
        scored: List[Tuple[float, int, int]] = []
        for k, hyp in enumerate(live):
            totals = hyp.log_prob + log_probs[k]
            for symbol in np.argsort(-totals, kind="stable")[:beam_width]:
                if np.isfinite(totals[symbol]):
                    scored.append((float(totals[symbol]), k, int(symbol)))
        scored.sort(key=lambda item: (-item[0], item[1], item[2]))

        next_live: List[Hypothesis] = []
        for total, k, symbol in scored[:beam_width]:
            if symbol == EOS:
                completed.append(Hypothesis(live[k].prefix, total, live[k].state, live[k].coverage, ended_with_eos=True))
            else:
                next_live.append(Hypothesis(live[k].prefix + [symbol], total, (hidden[k], cells[k]), coverages[k]))
        live = next_live
        if len(completed) >= beam_width or not live:
            break
    else:
        completed.extend(live)

    ranked = sorted(completed, key=lambda hyp: -hyp.score)
    return [Candidate(text=decoder.text(hyp), log_prob=hyp.log_prob, score=hyp.score) for hyp in ranked]


def greedy_decode(model: Seq2SeqModel, source: str, max_output_len: Optional[int] = None) -> str:
    """Pick the most probable symbol at every step until EOS or max_output_len."""
    max_output_len = model.config.max_output_len if max_output_len is None else max_output_len
    decoder = _Decoder(model, source)
    hyp = decoder.initial()
    for _ in range(max_output_len):
        log_probs, hidden, cells, coverages = decoder.expand([hyp])
        symbol = int(np.argmax(log_probs[0]))
        if symbol == EOS:
            break
        hyp = Hypothesis(hyp.prefix + [symbol], hyp.log_prob + float(log_probs[0, symbol]), (hidden[0], cells[0]), coverages[0])
    return decoder.text(hyp)


def beam_search_correct(model: Seq2SeqModel, token: str, beam_width: Optional[int] = None, max_output_len: Optional[int] = None) -> str:
    """Top-1 beam-search correction of a single token."""
    return beam_search(model, token, beam_width, max_output_len)[0].text
