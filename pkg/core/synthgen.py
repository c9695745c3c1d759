"""
Synthetic training data: modern-to-historical orthography conversion followed by
confusion-matrix calibrated OCR noise.
"""

# Standard library imports
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Pattern, Sequence, Tuple

# Third-party imports
import numpy as np

# Local imports
from core.confusion import EPSILON, ConfusionMatrix, error_rate, sample_emission
from core.corpus import AlignedRecord, SentencePair, align_tokens
from utils.config import MAX_SYNTH_ATTEMPTS, PADDING_SYMBOL, STABILITY_ALPHABET, shipped_profile_paths
from utils.error_handling import DataError, InvalidRule
from utils.parallel import parallel_starmap

_AFFIX_PATTERN = re.compile(r"^(\W*)(.*?)(\W*)$", re.S)


@dataclass(frozen=True)
class RewriteRule:
    """
    One orthographic rewrite.

    `pattern` is a regular expression applied inside a single token; `^` and `$`
    anchor it to the token start and end. `&` in `replacement` stands for the
    matched text. `condition`, when set, is a regular expression searched in the
    token's morphological tag.
    """

    pattern: str
    replacement: str
    condition: str = ""
    priority: int = 0
    order: int = 0
    compiled: Pattern = field(init=False, repr=False, compare=False)
    compiled_condition: Optional[Pattern] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.pattern:
            raise InvalidRule("empty pattern")
        try:
            compiled = re.compile(self.pattern)
            compiled_condition = re.compile(self.condition) if self.condition else None
        except re.error as e:
            raise InvalidRule(f"bad regular expression: {e}") from e
        if compiled.fullmatch(""):
            raise InvalidRule(f"pattern {self.pattern!r} matches the empty string")
        object.__setattr__(self, "compiled", compiled)
        object.__setattr__(self, "compiled_condition", compiled_condition)

    def applies_to(self, morph_tag: str) -> bool:
        return self.compiled_condition is None or bool(self.compiled_condition.search(morph_tag))

    def expand(self, matched: str) -> str:
        return self.replacement.replace("&", matched)


@dataclass
class OrthographyProfile:
    name: str
    rules: List[RewriteRule] = field(default_factory=list)
    exceptions: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # Lower priority value wins; equal priorities keep file order
        self.rules = sorted(self.rules, key=lambda rule: (rule.priority, rule.order))


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    morph_tag: str = ""


def parse_rules(text: str, source: str = "") -> List[RewriteRule]:
    """
    Parse a rule file: `priority<TAB>pattern<TAB>replacement[<TAB>condition]` per line.

    Blank lines and lines starting with `#` are skipped.

    Raises:
        InvalidRule: With file and line number on any malformed rule
    """
    rules: List[RewriteRule] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise InvalidRule(f"expected 3 or 4 tab-separated fields, got {len(fields)}", source, line_number)
        try:
            priority = int(fields[0])
        except ValueError as e:
            raise InvalidRule(f"priority {fields[0]!r} is not an integer", source, line_number) from e
        condition = fields[3] if len(fields) == 4 else ""
        try:
            rules.append(
                RewriteRule(
                    pattern=fields[1],
                    replacement=fields[2],
                    condition=condition,
                    priority=priority,
                    order=len(rules),
                )
            )
        except InvalidRule as e:
            raise InvalidRule(str(e), source, line_number) from e
    return rules


def parse_exceptions(text: str, source: str = "") -> Dict[str, str]:
    """Parse `modern<TAB>historical` lines into an exception lexicon."""
    exceptions: Dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise InvalidRule("expected `modern<TAB>historical`", source, line_number)
        exceptions[fields[0]] = fields[1]
    return exceptions


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e


def _sample_tags(profile: OrthographyProfile) -> List[str]:
    tags = [""]
    for rule in profile.rules:
        if rule.compiled_condition is None:
            continue
        tag = re.sub(r"\.\*|[\^$]", "", rule.condition)
        if tag not in tags and rule.compiled_condition.search(tag):
            tags.append(tag)
    return tags


def _stability_samples(profile: OrthographyProfile) -> List[str]:
    """Rule outputs and exception forms, alone and next to every letter."""
    seeds = {rule.replacement.replace("&", "") for rule in profile.rules}
    seeds.update(profile.exceptions)
    seeds.update(profile.exceptions.values())
    seeds.discard("")
    samples = set(STABILITY_ALPHABET)
    for seed in seeds:
        samples.add(seed)
        for letter in STABILITY_ALPHABET:
            samples.add(seed + letter)
            samples.add(letter + seed)
    return sorted(samples)


def validate_profile(profile: OrthographyProfile) -> None:
    """
    Check that conversion is idempotent on its own output.

    Every historical exception form must be a fixed point, and converting the
    conversion of each sample (rule outputs and exception forms, bare and with
    a letter on either side, under every tag a rule condition names) must not
    change it again.

    Raises:
        InvalidRule: If a second conversion changes a converted form
    """
    for modern, historical in profile.exceptions.items():
        converted = convert_token(AnnotatedToken(historical), profile)
        if converted != historical:
            raise InvalidRule(
                f"exception {modern!r} -> {historical!r} is not stable (converts to {converted!r})",
                profile.name,
            )

    for tag in _sample_tags(profile):
        for sample in _stability_samples(profile):
            once = convert_token(AnnotatedToken(sample, tag), profile)
            twice = convert_token(AnnotatedToken(once, tag), profile)
            if twice != once:
                raise InvalidRule(
                    f"conversion is not idempotent: {sample!r} -> {once!r} -> {twice!r} (tag {tag!r})",
                    profile.name,
                )


def load_profile(rules_path: str, exceptions_path: Optional[str] = None, name: Optional[str] = None) -> OrthographyProfile:
    """
    Load and validate an orthography profile from a rule file and an exception lexicon.

    Args:
        rules_path: Rule file
        exceptions_path: Optional `modern<TAB>historical` lexicon
        name: Profile name (defaults to the rule file stem)

    Returns:
        OrthographyProfile
    """
    rules_file = Path(rules_path)
    rules = parse_rules(_read_text(rules_file), source=str(rules_file))
    exceptions: Dict[str, str] = {}
    if exceptions_path:
        exceptions = parse_exceptions(_read_text(Path(exceptions_path)), source=str(exceptions_path))

    profile = OrthographyProfile(name=name or rules_file.stem, rules=rules, exceptions=exceptions)
    validate_profile(profile)
    logging.info(f"Loaded profile '{profile.name}': {len(rules)} rules, {len(exceptions)} exceptions")
    return profile


def load_shipped_profile(name: str) -> OrthographyProfile:
    """Load one of the bundled demonstration profiles (drinov, ivanchev)."""
    rules_path, exceptions_path = shipped_profile_paths(name)
    return load_profile(str(rules_path), str(exceptions_path), name=name.lower())


def _rewrite(core: str, morph_tag: str, profile: OrthographyProfile) -> str:
    if core in profile.exceptions:
        return profile.exceptions[core]

    rules = [rule for rule in profile.rules if rule.applies_to(morph_tag)]
    output: List[str] = []
    position = 0
    while position < len(core):
        best: Optional[Tuple[int, RewriteRule, str]] = None
        for rule in rules:
            match = rule.compiled.match(core, position)
            # Rules are sorted by (priority, order), so only a strictly longer match displaces
            if match and match.end() > position and (best is None or match.end() > best[0]):
                best = (match.end(), rule, match.group())
        if best is None:
            output.append(core[position])
            position += 1
        else:
            end, rule, matched = best
            output.append(rule.expand(matched))
            position = end
    return "".join(output)


def convert_token(token: AnnotatedToken, profile: OrthographyProfile) -> str:
    """
    Convert one token to the profile's orthography.

    Leading and trailing punctuation are kept aside; a capitalized word is
    converted in lower case and recapitalized.
    """
    prefix, core, suffix = _AFFIX_PATTERN.match(token.surface).groups()
    if not core:
        return token.surface

    capitalized = core[:1].isupper() and (len(core) == 1 or core[1:].islower())
    if capitalized:
        converted = _rewrite(core.lower(), token.morph_tag, profile)
        converted = converted[:1].upper() + converted[1:]
    else:
        converted = _rewrite(core, token.morph_tag, profile)
    return f"{prefix}{converted}{suffix}"


def convert_orthography(tokens: Sequence[AnnotatedToken], profile: OrthographyProfile) -> List[str]:
    """
    Convert modern-orthography tokens to historical spelling.

    An exception-lexicon hit wins; otherwise a single left-to-right pass applies,
    at each position, the longest matching rule (ties go to priority, then file
    order). Unmatched characters pass through.
    """
    return [convert_token(token, profile) for token in tokens]


def parse_annotated_line(line: str) -> List[AnnotatedToken]:
    """Split a line into tokens; `word/TAG` attaches a morphological tag."""
    tokens: List[AnnotatedToken] = []
    for item in line.split():
        surface, sep, tag = item.rpartition("/")
        if sep and surface and tag:
            tokens.append(AnnotatedToken(surface=surface, morph_tag=tag))
        else:
            tokens.append(AnnotatedToken(surface=item))
    return tokens


def read_modern_text(path: str) -> List[List[AnnotatedToken]]:
    """Read one sentence per non-empty line."""
    text = _read_text(Path(path))
    sentences = [parse_annotated_line(line) for line in text.splitlines() if line.strip()]
    logging.info(f"Read {len(sentences)} modern sentences from {path}")
    return sentences


def corrupt_aligned(
    sentence: str,
    matrix: ConfusionMatrix,
    rng: np.random.Generator,
    whitespace_noise: bool = False,
) -> Tuple[str, str, str]:
    """
    Corrupt a clean sentence and return it aligned to its source.

    Each character is replaced by a draw from its confusion row (EPSILON
    deletes); inserted characters are drawn at every gap between two
    characters with their share of the total mass. Without whitespace_noise,
    whitespace is copied through and never inserted.

    Returns:
        (raw OCR, OCR aligned, gold aligned)

    Raises:
        EmptyMatrix: If the matrix holds no counts
    """
    error_rate(matrix)

    insertions = matrix.insertion_probabilities()
    if not whitespace_noise:
        insertions = {char: p for char, p in insertions.items() if not char.isspace()}
    insert_chars = sorted(insertions)
    insert_cumulative = np.cumsum([insertions[char] for char in insert_chars]) if insert_chars else None

    ocr_aligned: List[str] = []
    gs_aligned: List[str] = []
    for index, gold_char in enumerate(sentence):
        if index > 0 and insert_cumulative is not None:
            draw = rng.random()
            if draw < insert_cumulative[-1]:
                chosen = int(np.searchsorted(insert_cumulative, draw, side="right"))
                ocr_aligned.append(insert_chars[min(chosen, len(insert_chars) - 1)])
                gs_aligned.append(PADDING_SYMBOL)

        emitted = sample_emission(matrix, gold_char, rng)
        if not whitespace_noise and (gold_char.isspace() or emitted.isspace()):
            emitted = gold_char
        ocr_aligned.append(PADDING_SYMBOL if emitted == EPSILON else emitted)
        gs_aligned.append(gold_char)

    aligned = "".join(ocr_aligned)
    return aligned.replace(PADDING_SYMBOL, ""), aligned, "".join(gs_aligned)


def corrupt(sentence: str, matrix: ConfusionMatrix, rng: np.random.Generator, whitespace_noise: bool = False) -> str:
    """Corrupt a clean sentence with confusion-matrix noise; see corrupt_aligned."""
    return corrupt_aligned(sentence, matrix, rng, whitespace_noise)[0]


def synthesize_record(
    index: int,
    gold: str,
    matrix: ConfusionMatrix,
    seed: int,
    whitespace_noise: bool = False,
    source: str = "synthetic",
) -> AlignedRecord:
    """
    Corrupt one converted sentence with its own generator (seed + index).

    A draw that changes the token count is retried; after MAX_SYNTH_ATTEMPTS
    whitespace noise is suppressed, and if the count still changes a noise-free
    copy is emitted.
    """
    rng = np.random.default_rng(seed + index)
    n_tokens = len(gold.split())
    noisy_whitespace = whitespace_noise
    for attempt in range(MAX_SYNTH_ATTEMPTS + 1):
        if attempt == MAX_SYNTH_ATTEMPTS:
            noisy_whitespace = False
        ocr_raw, ocr_aligned, gs_aligned = corrupt_aligned(gold, matrix, rng, noisy_whitespace)
        if len(ocr_raw.split()) == n_tokens:
            return AlignedRecord(ocr_raw, ocr_aligned, gs_aligned, source_id=f"{source}:{index}")

    logging.warning(f"Sentence {index}: token count kept changing, emitting a noise-free copy")
    return AlignedRecord(gold, gold, gold, source_id=f"{source}:{index}")


def generate_records(
    modern_sentences: Sequence[Sequence[AnnotatedToken]],
    profile: OrthographyProfile,
    matrix: ConfusionMatrix,
    seed: int,
    whitespace_noise: bool = False,
    n_jobs: int = 1,
) -> List[AlignedRecord]:
    """Convert and corrupt every sentence; deterministic for any n_jobs."""
    golds = [" ".join(convert_orthography(tokens, profile)) for tokens in modern_sentences]
    jobs = [(index, gold, matrix, seed, whitespace_noise) for index, gold in enumerate(golds)]
    records = parallel_starmap(synthesize_record, jobs, n_jobs=n_jobs)
    logging.info(f"Generated {len(records)} synthetic records with profile '{profile.name}'")
    return records


def generate_pairs(
    modern_sentences: Sequence[Sequence[AnnotatedToken]],
    profile: OrthographyProfile,
    matrix: ConfusionMatrix,
    seed: int,
    whitespace_noise: bool = False,
    n_jobs: int = 1,
) -> List[SentencePair]:
    """
    Build misspelled/correct sentence pairs.

    The gold side is the converted sentence, the OCR side its corruption; token
    labels come from aligning the two.
    """
    records = generate_records(modern_sentences, profile, matrix, seed, whitespace_noise, n_jobs)
    return [align_tokens(record) for record in records]
