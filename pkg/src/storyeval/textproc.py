"""Tokenization, stopword lookup, and sentence truncation shared by every module.

Two tokenizations coexist deliberately:

* METRIC mode feeds the edit metrics: lowercased maximal alphanumeric runs,
  punctuation discarded.
* STATS mode feeds corpus statistics: alternating alphanumeric /
  non-alphanumeric runs with whitespace collapsed, case preserved.

"Alphanumeric" means Unicode categories L* and Nd, so non-ASCII story text
tokenizes sensibly.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterator


class TokenizerMode(Enum):
    METRIC = "metric"
    STATS = "stats"


@dataclass(frozen=True)
class TokenSequence:
    """An ordered list of tokens plus the mode that produced them."""

    tokens: tuple[str, ...]
    mode: TokenizerMode

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, index):
        return self.tokens[index]

    def __bool__(self) -> bool:
        return bool(self.tokens)


@dataclass(frozen=True)
class StopwordList:
    """A versioned, lowercase stopword set. Versioning keeps scores reproducible."""

    words: frozenset[str]
    version: str


def is_word_char(ch: str) -> bool:
    """True for Unicode letters (L*) and decimal digits (Nd)."""
    cat = unicodedata.category(ch)
    return cat[0] == "L" or cat == "Nd"


def character_runs(text: str) -> list[tuple[int, int, bool]]:
    """Partition ``text`` into maximal same-class runs.

    Returns (start, end, is_word) triples covering the whole string; the
    class alternates between alphanumeric and everything else.
    """
    runs: list[tuple[int, int, bool]] = []
    start = 0
    current: bool | None = None
    for i, ch in enumerate(text):
        kind = is_word_char(ch)
        if current is None:
            current = kind
        elif kind != current:
            runs.append((start, i, current))
            start = i
            current = kind
    if current is not None:
        runs.append((start, len(text), current))
    return runs


def raw_partition(text: str) -> list[str]:
    """Partition ``text`` into word / whitespace / other runs, losslessly.

    Concatenating the result reproduces the input exactly; used for
    display-level diffing where reconstruction must be exact.
    """
    parts: list[str] = []
    start = 0
    current: str | None = None
    for i, ch in enumerate(text):
        kind = "w" if is_word_char(ch) else ("s" if ch.isspace() else "o")
        if current is None:
            current = kind
        elif kind != current:
            parts.append(text[start:i])
            start = i
            current = kind
    if current is not None:
        parts.append(text[start:])
    return parts


def tokenize(text: str, mode: TokenizerMode, stem: bool = False) -> TokenSequence:
    """Tokenize ``text`` under the given mode. Empty input yields an empty sequence.

    ``stem`` (METRIC mode only) additionally Porter-stems every token; it is
    off by default since no stemmer is mandated for the metrics.
    """
    if mode is TokenizerMode.METRIC:
        lowered = text.lower()
        tokens = [lowered[a:b] for a, b, word in character_runs(lowered) if word]
        if stem:
            tokens = [porter_stem(tok) for tok in tokens]
        return TokenSequence(tuple(tokens), mode)
    if mode is TokenizerMode.STATS:
        tokens = []
        for a, b, word in character_runs(text):
            run = text[a:b]
            if not word:
                # collapse whitespace inside mixed runs; drop whitespace-only runs
                run = "".join(ch for ch in run if not ch.isspace())
                if not run:
                    continue
            tokens.append(run)
        return TokenSequence(tuple(tokens), mode)
    raise ValueError(f"unknown tokenizer mode: {mode!r}")


def is_stopword(token: str, stopwords: StopwordList) -> bool:
    return token.lower() in stopwords.words


def _parse_stopword_lines(lines: list[str], fallback_version: str) -> StopwordList:
    version = fallback_version
    words = set()
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("version:"):
                version = body.split(":", 1)[1].strip()
            continue
        words.add(line.lower())
    return StopwordList(frozenset(words), version)


def load_stopwords(path) -> StopwordList:
    """Load a stopword list from a plain-text file (one word per line).

    A ``# version: <id>`` header line sets the list version.
    """
    with open(path, encoding="utf-8") as handle:
        return _parse_stopword_lines(handle.read().splitlines(), fallback_version=str(path))


@lru_cache(maxsize=1)
def default_stopwords() -> StopwordList:
    """The shipped English list (classic 179 words)."""
    text = resources.files("storyeval.resources").joinpath("stopwords_en.txt").read_text("utf-8")
    return _parse_stopword_lines(text.splitlines(), fallback_version="en-classic-179")


_SENTENCE_ENDERS = frozenset(".!?")


def truncate_sentences(text: str, max_sentences: int) -> str:
    """Return the prefix of ``text`` containing at most ``max_sentences`` sentences.

    A sentence boundary is a maximal run of ``.``, ``!``, or ``?`` followed by
    whitespace or end of text. Abbreviations are not special-cased; that is a
    documented limitation of the rule.
    """
    if max_sentences < 1:
        raise ValueError("max_sentences must be >= 1")
    count = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _SENTENCE_ENDERS:
            j = i
            while j < n and text[j] in _SENTENCE_ENDERS:
                j += 1
            if j >= n or text[j].isspace():
                count += 1
                if count >= max_sentences:
                    return text[:j]
            i = j
        else:
            i += 1
    return text


# ---------------------------------------------------------------------------
# Porter stemmer (the 1980 algorithm), for the optional stemming flag.
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-to-consonant transitions: the m of [C](VC)^m[V]."""
    m = 0
    previous_vowel = False
    for i in range(len(stem)):
        consonant = _is_consonant(stem, i)
        if consonant and previous_vowel:
            m += 1
        previous_vowel = not consonant
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_consonant(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def _replace_suffix(word: str, rules, condition) -> str:
    """Apply the longest matching rule whose stem satisfies ``condition``.

    A matching suffix consumes the step even when the condition fails, per
    the original algorithm.
    """
    for suffix, replacement in sorted(rules, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if condition(stem):
                return stem + replacement
            return word
    return word


def porter_stem(word: str) -> str:
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif not word.endswith("ss") and word.endswith("s"):
        word = word[:-1]

    # step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        trimmed = None
        if word.endswith("ed") and _has_vowel(word[:-2]):
            trimmed = word[:-2]
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            trimmed = word[:-3]
        if trimmed is not None:
            word = trimmed
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_consonant(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    # step 2
    word = _replace_suffix(
        word,
        [
            ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
            ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
            ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
            ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
            ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
        ],
        lambda stem: _measure(stem) > 0,
    )

    # step 3
    word = _replace_suffix(
        word,
        [
            ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
            ("ical", "ic"), ("ful", ""), ("ness", ""),
        ],
        lambda stem: _measure(stem) > 0,
    )

    # step 4
    before = word
    word = _replace_suffix(
        word,
        [
            ("al", ""), ("ance", ""), ("ence", ""), ("er", ""), ("ic", ""),
            ("able", ""), ("ible", ""), ("ant", ""), ("ement", ""), ("ment", ""),
            ("ent", ""), ("ou", ""), ("ism", ""), ("ate", ""), ("iti", ""),
            ("ous", ""), ("ive", ""), ("ize", ""),
        ],
        lambda stem: _measure(stem) > 1,
    )
    if word == before and word.endswith("ion") and _measure(word[:-3]) > 1 and word[-4] in "st":
        word = word[:-3]

    # step 5a
    if word.endswith("e"):
        m = _measure(word[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(word[:-1])):
            word = word[:-1]

    # step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        word = word[:-1]

    return word


def count_sentences(text: str) -> int:
    """Number of sentences under the truncation rule (trailing fragment counts as one)."""
    count = 0
    i = 0
    n = len(text)
    last_boundary = 0
    while i < n:
        if text[i] in _SENTENCE_ENDERS:
            j = i
            while j < n and text[j] in _SENTENCE_ENDERS:
                j += 1
            if j >= n or text[j].isspace():
                count += 1
                last_boundary = j
            i = j
        else:
            i += 1
    if text[last_boundary:].strip():
        count += 1
    return count
