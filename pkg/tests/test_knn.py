"""
Tests for the nearest-neighbour lexicon corrector.
"""

# Third-party imports
import Levenshtein
import numpy as np
import pytest

# Local imports
from core.detect import Lexicon
from core.knn import build_length_index, knn_candidates, knn_correct, knn_ranked

ALPHABET = list("абвгдеклмнорѣъ")


@pytest.fixture
def random_lexicon() -> Lexicon:
    rng = np.random.default_rng(11)
    counts = {}
    while len(counts) < 50:
        word = "".join(rng.choice(ALPHABET, size=int(rng.integers(3, 7))))
        counts[word] = int(rng.integers(1, 20))
    return Lexicon.from_counts(counts)


def exhaustive_correction(token: str, lexicon: Lexicon) -> str:
    if token in lexicon.entries:
        return token
    for distance in (1, 2):
        matches = [
            (-frequency, word)
            for word, frequency in lexicon.entries.items()
            if Levenshtein.distance(token, word) == distance
        ]
        if matches:
            return min(matches)[1]
    return token


def mutate(word: str, rng: np.random.Generator) -> str:
    chars = list(word)
    for _ in range(int(rng.integers(1, 4))):
        position = int(rng.integers(0, len(chars)))
        action = rng.integers(0, 3)
        if action == 0:
            chars[position] = str(rng.choice(ALPHABET))
        elif action == 1 and len(chars) > 1:
            del chars[position]
        else:
            chars.insert(position, str(rng.choice(ALPHABET)))
    return "".join(chars)


def test_matches_exhaustive_search(random_lexicon):
    rng = np.random.default_rng(5)
    words = sorted(random_lexicon.entries)
    index = build_length_index(random_lexicon)
    for _ in range(300):
        query = mutate(str(rng.choice(words)), rng)
        assert knn_correct(query, random_lexicon, index) == exhaustive_correction(query, random_lexicon)


def test_length_index_groups_sorted_by_frequency(small_lexicon):
    index = build_length_index(small_lexicon)
    assert [word for word, _ in index[4]] == ["вода", "домъ", "село"]
    assert [word for word, _ in index[5]] == ["хлѣбъ", "градъ"]


def test_prefers_distance_one_over_frequency():
    lexicon = Lexicon.from_counts({"вода": 1, "вада": 100, "водѣ": 2})
    # "водаа" is one edit from "вода" and two from "вада"
    assert knn_correct("водаа", lexicon) == "вода"
    assert knn_candidates("водаа", lexicon) == {1: [("вода", 1)], 2: [("вада", 100), ("водѣ", 2)]}


def test_frequency_then_lexicographic_ties():
    lexicon = Lexicon.from_counts({"домъ": 3, "доме": 3, "дома": 1})
    assert knn_correct("домо", lexicon) == "доме"
    assert knn_ranked("домо", lexicon, k=3) == ["доме", "домъ", "дома"]
    assert knn_ranked("домо", lexicon, k=1) == ["доме"]


def test_known_and_distant_tokens_pass_through(small_lexicon):
    assert knn_correct("вода", small_lexicon) == "вода"
    assert knn_correct("Вода", small_lexicon) == "Вода"
    assert knn_correct("кукуруза", small_lexicon) == "кукуруза"
    assert knn_ranked("кукуруза", small_lexicon, k=3) == ["кукуруза"]
    assert knn_correct("", small_lexicon) == ""


def test_capitalization_is_restored(small_lexicon):
    assert knn_correct("Хлѣбь", small_lexicon) == "Хлѣбъ"
    assert knn_correct("градь", small_lexicon) == "градъ"
