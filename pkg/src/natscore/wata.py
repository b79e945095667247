"""Word association analysis: terms enriched in one half of a corpus.

Documents are compared by term presence (each term counts at most once per
document), the corpus is split at the median of a score vector, and each
sufficiently frequent term gets a 2x2 chi-squared test with
Benjamini-Hochberg control across the whole term family. Stop words are
not removed by default: style terms are reportable findings here.
"""

from __future__ import annotations

import random
import re
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping

from .stats import bh_select, chi_squared_2x2

# Lowercase word tokens split on non-alphanumeric boundaries, keeping
# internal hyphens. A trailing period is kept only on short tokens, so
# abbreviations like "nov." survive but sentence-final words do not.
_TOKEN = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*\.?")
_ABBREVIATION_MAX = 3


def tokenize(text: str) -> set[str]:
    """Document-level term presence set."""
    terms = set()
    for token in _TOKEN.findall(text.lower()):
        if token.endswith(".") and len(token) - 1 > _ABBREVIATION_MAX:
            token = token[:-1]
        terms.add(token)
    return terms


@dataclass(frozen=True)
class MedianSplit:
    high: frozenset[str]
    low: frozenset[str]
    median: float


def split_by_median(scores: Mapping[str, float]) -> MedianSplit:
    """Strictly-above-median ids go high; the rest, ties included, go low."""
    if not scores:
        raise ValueError("no scores to split")
    values = list(scores.values())
    if all(v == values[0] for v in values):
        raise ValueError("all scores equal: no median split exists")
    median = statistics.median(values)
    high = frozenset(k for k, v in scores.items() if v > median)
    low = frozenset(k for k, v in scores.items() if v <= median)
    return MedianSplit(high=high, low=low, median=median)


@dataclass(frozen=True)
class TermStats:
    term: str
    docs_high: int
    docs_low: int
    n_high: int
    n_low: int
    chi2: float
    p: float
    selected: bool


def enriched_terms(
    high_docs: Mapping[str, str],
    low_docs: Mapping[str, str],
    alpha: float = 0.05,
    min_docs: int = 5,
    stop_words: Iterable[str] | None = None,
) -> list[TermStats]:
    """Terms over-represented in the high group relative to the low group.

    Tests every term present in at least min_docs documents overall; a term
    is selected when it survives Benjamini-Hochberg at alpha AND its
    document rate is higher in the high group. Output lists selected terms
    first, by chi-squared descending. A term present in every document of
    both groups is untestable (zero absence margin) and reported with
    chi2=0, p=1.
    """
    if not high_docs or not low_docs:
        raise ValueError("both document groups must be non-empty")
    if min_docs < 1:
        raise ValueError(f"min_docs must be >= 1, got {min_docs}")
    stops = {s.lower() for s in stop_words} if stop_words else set()

    n_high = len(high_docs)
    n_low = len(low_docs)
    counts: dict[str, list[int]] = {}
    for group_index, docs in enumerate((high_docs, low_docs)):
        for text in docs.values():
            for term in tokenize(text):
                counts.setdefault(term, [0, 0])[group_index] += 1

    tested: list[tuple[str, int, int, float, float]] = []
    for term in sorted(counts):
        docs_high, docs_low = counts[term]
        if docs_high + docs_low < min_docs or term in stops:
            continue
        absent_high = n_high - docs_high
        absent_low = n_low - docs_low
        if absent_high == 0 and absent_low == 0:
            tested.append((term, docs_high, docs_low, 0.0, 1.0))
            continue
        result = chi_squared_2x2(docs_high, absent_high, docs_low, absent_low)
        tested.append((term, docs_high, docs_low, result.statistic, result.p_value))

    flags = bh_select([row[4] for row in tested], alpha) if tested else []
    stats = [
        TermStats(
            term=term,
            docs_high=docs_high,
            docs_low=docs_low,
            n_high=n_high,
            n_low=n_low,
            chi2=chi2,
            p=p,
            selected=bool(flag) and docs_high / n_high > docs_low / n_low,
        )
        for (term, docs_high, docs_low, chi2, p), flag in zip(tested, flags)
    ]
    stats.sort(key=lambda t: (not t.selected, -t.chi2, t.term))
    return stats


def sample_contexts(
    term: str, docs: Mapping[str, str], n: int = 10, seed: int = 0
) -> list[tuple[str, str]]:
    """Up to n (article id, sentence) snippets containing the term.

    Sampling is uniform without replacement and seed-deterministic; all
    occurrences are returned when fewer than n documents contain the term.
    """
    holders = sorted(doc_id for doc_id, text in docs.items() if term in tokenize(text))
    if not holders:
        raise ValueError(f"term {term!r} occurs in no document")
    if len(holders) > n:
        holders = sorted(random.Random(seed).sample(holders, n))
    return [(doc_id, _sentence_with(docs[doc_id], term)) for doc_id in holders]


def _sentence_with(text: str, term: str) -> str:
    for sentence in re.split(r"(?<=[.!?])\s+", text):
        if term in tokenize(sentence):
            return re.sub(r"\s+", " ", sentence).strip()
    return re.sub(r"\s+", " ", text).strip()[:240]
