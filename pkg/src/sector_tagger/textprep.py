"""Turn raw article bodies into clean, stemmed token lists."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable

from nltk.stem.porter import PorterStemmer

TRAILING_SECTIONS = ("footnote", "disclaimer")
MIN_TOKEN_LENGTH = 2

_TAG = re.compile(r"<[^>]*(?:>|$)")
_ENTITY = re.compile(r"&(?:[A-Za-z][A-Za-z0-9]*|#[0-9]+|#[xX][0-9A-Fa-f]+);")
_TOKEN = re.compile(r"[^\W_]+")
_PORTER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stop-word file (one word per line, ``#`` comments allowed).

    With no path the list shipped in ``resources/stopwords.txt`` is used.
    """
    if path is None:
        text = resources.files("sector_tagger").joinpath("resources/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    if not words:
        raise ValueError(f"stop-word list is empty: {path}")
    return frozenset(words)


def _trailing_heading_pattern(headings: Iterable[str]) -> re.Pattern:
    alternatives = "|".join(re.escape(h) for h in headings)
    return re.compile(rf"\b(?:{alternatives})", re.IGNORECASE)


_HEADINGS = _trailing_heading_pattern(TRAILING_SECTIONS)


def strip_boilerplate(body: str, headings: Iterable[str] | None = None) -> str:
    """Drop everything from the first footnote/disclaimer heading onwards."""
    pattern = _HEADINGS if headings is None else _trailing_heading_pattern(headings)
    match = pattern.search(body)
    return body if match is None else body[: match.start()]


def clean_markup(body: str) -> str:
    # Removing one span can expose another (e.g. "&am&amp;p;"), so iterate.
    while True:
        cleaned = _ENTITY.sub("", _TAG.sub("", body))
        if cleaned == body:
            return cleaned
        body = cleaned


def _keep(token: str, stops: frozenset[str]) -> bool:
    return len(token) >= MIN_TOKEN_LENGTH and not token.isdigit() and token not in stops


def tokenize(text: str, stops: frozenset[str]) -> list[str]:
    """Split on non-alphanumerics, lowercase, and drop numbers, short tokens and stop words."""
    return [t for t in _TOKEN.findall(text.lower()) if _keep(t, stops)]


@lru_cache(maxsize=None)
def stem_word(word: str) -> str:
    """Porter stem, iterated until it stops changing.

    The original algorithm is not idempotent ("agreed" -> "agre" -> "agr"),
    and re-processing preprocessed text must be a no-op.
    """
    while True:
        stemmed = _PORTER.stem(word)
        if stemmed == word:
            return word
        word = stemmed


def stem(tokens: Iterable[str]) -> list[str]:
    return [stem_word(t) for t in tokens]


def preprocess_text(text: str, stops: frozenset[str]) -> list[str]:
    tokens = stem(tokenize(clean_markup(strip_boilerplate(text)), stops))
    # stemming can shorten a token below the length floor or onto a stop word
    return [t for t in tokens if _keep(t, stops)]


def preprocess(article, stops: frozenset[str]) -> list[str]:
    """Token list for one article: title and body, cleaned and stemmed."""
    return preprocess_text(article.title + " " + article.body, stops)
