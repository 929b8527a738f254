"""Lexicon sentiment scoring and term count/salience statistics.

Sentiment is plain dictionary matching against positive/negative word
lists in the published opinion-lexicon file format (one word per line,
``;`` comment lines). The score is the symmetric ratio
``(pos - neg) / (pos + neg)``, zero (and flagged neutral) when nothing
matched.

Term salience is the normalized entropy contribution of a term's document
frequency: with ``p = doc_frequency / D``, the raw weight is
``p * ln(1/p)``, rescaled so the vocabulary sums to one. Tokens that
appear in every record get zero weight, which is what pushes ubiquitous
boilerplate (retweet markers and the sampled hashtag itself) below
mid-frequency content words even when their raw counts dominate.

Tokenization is deliberately shallow: lowercase, split on runs of
non-alphanumeric characters, no stemming, so surface forms like "vote"
and "voting" stay distinct.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

from .errors import EmptyCorpusError, LexiconError
from .ingest import InteractionRecord

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens in order; '#'/'@' prefixes drop away."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Lexicon:
    positive: frozenset[str]
    negative: frozenset[str]
    dropped_conflicts: tuple[str, ...] = ()


@dataclass(frozen=True)
class SentimentSummary:
    positive_hits: int
    negative_hits: int
    score: float
    neutral: bool


@dataclass(frozen=True)
class TermStats:
    term: str
    mention_count: int
    doc_frequency: int
    salience: float


WordSource = Union[str, Path, IO[str], Iterable[str]]


def _read_words(source: WordSource) -> set[str]:
    if isinstance(source, (str, Path)):
        # The published lexicon files are latin-1 encoded; be permissive.
        with open(source, "r", encoding="utf-8", errors="replace") as fh:
            return _read_words(fh)
    words = set()
    for line in source:
        word = line.strip()
        if not word or word.startswith(";"):
            continue
        words.add(word.lower())
    return words


def load_lexicon(pos_source: WordSource, neg_source: WordSource) -> Lexicon:
    """Load positive/negative word lists.

    Words present in both lists are dropped from both and reported via
    ``dropped_conflicts``. An empty resulting lexicon raises
    :class:`LexiconError`.
    """
    positive = _read_words(pos_source)
    negative = _read_words(neg_source)
    conflicts = positive & negative
    positive -= conflicts
    negative -= conflicts
    if not positive and not negative:
        raise LexiconError("lexicon is empty after loading")
    return Lexicon(
        positive=frozenset(positive),
        negative=frozenset(negative),
        dropped_conflicts=tuple(sorted(conflicts)),
    )


def sentiment(text: str, lexicon: Lexicon) -> SentimentSummary:
    """Count lexicon matches in the text and score their balance."""
    pos = 0
    neg = 0
    for token in tokenize(text):
        if token in lexicon.positive:
            pos += 1
        elif token in lexicon.negative:
            neg += 1
    if pos + neg == 0:
        return SentimentSummary(0, 0, 0.0, neutral=True)
    return SentimentSummary(pos, neg, (pos - neg) / (pos + neg), neutral=False)


def term_stats(
    corpus: Sequence[InteractionRecord], stopwords: Iterable[str] | None = None
) -> list[TermStats]:
    """Per-term mention counts and normalized salience over the corpus.

    Sorted by mention count descending, ties by term. Stopwords (empty by
    default) are excluded from the vocabulary before normalization.
    """
    if not corpus:
        raise EmptyCorpusError("term statistics need a non-empty corpus")
    stop = {w.lower() for w in stopwords} if stopwords else set()

    counts: dict[str, int] = {}
    doc_freq: dict[str, int] = {}
    for record in corpus:
        tokens = [t for t in tokenize(record.text) if t not in stop]
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        # dict.fromkeys, not set: float normalization later sums in this
        # insertion order, which must not depend on hash randomization
        for token in dict.fromkeys(tokens):
            doc_freq[token] = doc_freq.get(token, 0) + 1

    total_docs = len(corpus)
    raw: dict[str, float] = {}
    for term, df in doc_freq.items():
        p = df / total_docs
        raw[term] = 0.0 if p >= 1.0 else p * math.log(1.0 / p)
    norm = sum(raw.values())

    stats = [
        TermStats(
            term=term,
            mention_count=counts[term],
            doc_frequency=doc_freq[term],
            salience=(raw[term] / norm) if norm > 0 else 0.0,
        )
        for term in counts
    ]
    stats.sort(key=lambda s: (-s.mention_count, s.term))
    return stats


def top_terms(stats: Sequence[TermStats], k: int, order: str = "count") -> list[TermStats]:
    """Top-k terms by 'count' or 'salience', ties broken by term."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if order == "count":
        key = lambda s: (-s.mention_count, s.term)
    elif order == "salience":
        key = lambda s: (-s.salience, s.term)
    else:
        raise ValueError(f"unknown order: {order!r}")
    return sorted(stats, key=key)[:k]
