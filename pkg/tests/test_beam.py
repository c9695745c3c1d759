"""
Tests for beam-search and greedy decoding.
"""

# Third-party imports
import pytest

# Local imports
from core.beam import beam_search, beam_search_correct, greedy_decode
from core.seq2seq import Seq2SeqModel, Vocab, init_params
from utils.error_handling import EmptyInput


@pytest.fixture
def model(tiny_corrector_config) -> Seq2SeqModel:
    vocab = Vocab("абвгдежиклмнъѣ")
    return Seq2SeqModel(params=init_params(len(vocab), tiny_corrector_config), vocab=vocab, config=tiny_corrector_config)


def test_width_one_matches_greedy(model):
    for source in ("абв", "ѣлен", "жизнь"):
        assert beam_search(model, source, beam_width=1)[0].text == greedy_decode(model, source)


def test_zero_length_budget_gives_empty_output(model):
    candidates = beam_search(model, "абв", max_output_len=0)
    assert [candidate.text for candidate in candidates] == [""]


def test_candidates_ranked_by_normalized_score(model):
    candidates = beam_search(model, "абвг", beam_width=3)
    assert candidates
    scores = [candidate.score for candidate in candidates]
    assert scores == sorted(scores, reverse=True)
    assert beam_search_correct(model, "абвг", beam_width=3) == candidates[0].text


def test_outputs_respect_length_budget(model):
    for candidate in beam_search(model, "абвгде", beam_width=3, max_output_len=4):
        assert len(candidate.text) <= 4
        assert candidate.log_prob <= 0.0


def test_decoding_is_deterministic(model):
    first = beam_search(model, "кламн", beam_width=3)
    second = beam_search(model, "кламн", beam_width=3)
    assert first == second


def test_empty_source_is_rejected(model):
    with pytest.raises(EmptyInput):
        beam_search(model, "")
    with pytest.raises(EmptyInput):
        greedy_decode(model, "")
