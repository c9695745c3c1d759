"""
Nearest-neighbour correction against a frequency lexicon.
"""

# Standard library imports
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

# Third-party imports
import Levenshtein

# Local imports
from core.detect import Lexicon

MAX_DISTANCE = 2

LengthIndex = Dict[int, List[Tuple[str, int]]]


def build_length_index(lexicon: Lexicon) -> LengthIndex:
    """Lexicon entries grouped by length, each group sorted by (-frequency, word)."""
    index: LengthIndex = defaultdict(list)
    for word, frequency in lexicon.entries.items():
        index[len(word)].append((word, frequency))
    for group in index.values():
        group.sort(key=lambda entry: (-entry[1], entry[0]))
    return dict(index)


def knn_candidates(token: str, lexicon: Lexicon, index: Optional[LengthIndex] = None) -> Dict[int, List[Tuple[str, int]]]:
    """
    Lexicon entries at edit distance 1 and 2 from the case-folded token.

    Returns:
        {distance: [(word, frequency), ...]} with each list ranked by frequency, then word
    """
    index = index if index is not None else build_length_index(lexicon)
    key = Lexicon.normalize(token)
    found: Dict[int, List[Tuple[str, int]]] = {1: [], 2: []}
    for length in range(len(key) - MAX_DISTANCE, len(key) + MAX_DISTANCE + 1):
        for word, frequency in index.get(length, []):
            distance = Levenshtein.distance(key, word, score_cutoff=MAX_DISTANCE)
            if 1 <= distance <= MAX_DISTANCE:
                found[distance].append((word, frequency))
    for entries in found.values():
        entries.sort(key=lambda entry: (-entry[1], entry[0]))
    return found


def _match_case(candidate: str, token: str) -> str:
    if token[:1].isupper():
        return candidate[:1].upper() + candidate[1:]
    return candidate


def knn_correct(token: str, lexicon: Lexicon, index: Optional[LengthIndex] = None) -> str:
    """
    Replace a token by its most frequent lexicon neighbour.

    A token already in the lexicon is returned unchanged. Otherwise neighbours
    at distance 1 are preferred over distance 2; ties go to the higher
    frequency, then to lexicographic order. Without candidates the token stays.
    """
    if not token or lexicon.contains(token):
        return token
    found = knn_candidates(token, lexicon, index)
    for distance in (1, 2):
        if found[distance]:
            return _match_case(found[distance][0][0], token)
    return token


def knn_ranked(token: str, lexicon: Lexicon, k: int, index: Optional[LengthIndex] = None) -> List[str]:
    """Up to k corrections, best first (distance, then frequency, then word)."""
    if not token or lexicon.contains(token):
        return [token]
    found = knn_candidates(token, lexicon, index)
    ranked = [_match_case(word, token) for distance in (1, 2) for word, _ in found[distance]]
    return ranked[:k] or [token]
