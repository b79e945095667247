"""Composite analyses: correlation tables across score families and the
citation indicator, per-article indicator differences, top/bottom
extraction, and country-mention audits."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Article
from .prompts import CountryProfile
from .stats import CorrelationResult, bootstrap_ci, spearman

MIN_PAIRS = 3

# Every unordered pair among the three combined score families and the
# citation indicator, plus the standard-vs-probability pair per regime.
DEFAULT_PAIRS: tuple[tuple[str, str], ...] = (
    ("quality", "quality_country"),
    ("quality", "value_country"),
    ("quality_country", "value_country"),
    ("quality", "nlcs"),
    ("quality_country", "nlcs"),
    ("value_country", "nlcs"),
    ("quality_std", "quality_prob"),
    ("quality_country_std", "quality_country_prob"),
    ("value_country_std", "value_country_prob"),
)


@dataclass(frozen=True)
class CorrelationRow:
    pair: tuple[str, str]
    panel: str
    n: int
    rho: float | None
    ci_low: float | None
    ci_high: float | None
    resamples: int
    seed: int
    note: str = ""


def correlate(
    x: Sequence[float],
    y: Sequence[float],
    resamples: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> CorrelationResult:
    """Spearman rho with a bootstrapped percentile confidence interval."""
    rho = spearman(x, y)
    ci_low, ci_high = bootstrap_ci(list(zip(x, y)), resamples, alpha, seed)
    return CorrelationResult(
        rho=rho, ci_low=ci_low, ci_high=ci_high, n=len(x),
        resamples=resamples, seed=seed,
    )


def derive_seed(base_seed: int, *labels: str) -> int:
    """Stable substream seed for (base_seed, labels); independent of the
    order in which analyses run."""
    digest = hashlib.sha256(
        ":".join([str(base_seed), *labels]).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:4], "big")


def correlation_matrix(
    series_by_panel: Mapping[str, Mapping[str, Mapping[str, float]]],
    pairs: Sequence[tuple[str, str]] = DEFAULT_PAIRS,
    resamples: int = 1000,
    alpha: float = 0.05,
    base_seed: int = 0,
) -> list[CorrelationRow]:
    """One correlation per (pair, panel), aligned pairwise by article id.

    series_by_panel maps panel -> family name -> article id -> score.
    Pairs with fewer than three complete articles, a missing family, or a
    constant vector are emitted with a skip note instead of being dropped.
    Bootstrap seeds derive from (base_seed, panel, pair) so any subset of
    the table reproduces identically.
    """
    rows: list[CorrelationRow] = []
    for panel in sorted(series_by_panel):
        families = series_by_panel[panel]
        for a, b in pairs:
            seed = derive_seed(base_seed, panel, f"{a}|{b}")
            if a not in families or b not in families:
                rows.append(
                    CorrelationRow(
                        pair=(a, b), panel=panel, n=0, rho=None, ci_low=None,
                        ci_high=None, resamples=resamples, seed=seed,
                        note="skipped: missing score family",
                    )
                )
                continue
            shared = sorted(set(families[a]) & set(families[b]))
            x = [families[a][i] for i in shared]
            y = [families[b][i] for i in shared]
            if len(shared) < MIN_PAIRS:
                rows.append(
                    CorrelationRow(
                        pair=(a, b), panel=panel, n=len(shared), rho=None,
                        ci_low=None, ci_high=None, resamples=resamples, seed=seed,
                        note=f"skipped: only {len(shared)} complete articles (< {MIN_PAIRS})",
                    )
                )
                continue
            try:
                result = correlate(x, y, resamples, alpha, seed)
            except ValueError as exc:
                rows.append(
                    CorrelationRow(
                        pair=(a, b), panel=panel, n=len(shared), rho=None,
                        ci_low=None, ci_high=None, resamples=resamples, seed=seed,
                        note=f"skipped: {exc}",
                    )
                )
                continue
            rows.append(
                CorrelationRow(
                    pair=(a, b), panel=panel, n=result.n, rho=result.rho,
                    ci_low=result.ci_low, ci_high=result.ci_high,
                    resamples=resamples, seed=seed,
                )
            )
    return rows


@dataclass(frozen=True)
class IndicatorDiff:
    """Per-article quality-minus-value gap; high values mark research that
    is relatively global-facing, low values relatively nation-facing."""

    article_id: str
    quality: float
    value: float

    @property
    def diff(self) -> float:
        return self.quality - self.value


def indicator_difference(
    quality: Mapping[str, float], value: Mapping[str, float]
) -> tuple[list[IndicatorDiff], int]:
    """Differences for articles complete in both regimes, plus the count of
    articles excluded for missing either side."""
    shared = sorted(set(quality) & set(value))
    excluded = len(set(quality) | set(value)) - len(shared)
    diffs = [IndicatorDiff(i, quality[i], value[i]) for i in shared]
    return diffs, excluded


@dataclass(frozen=True)
class TopBottom:
    top: tuple[str, ...]
    bottom: tuple[str, ...]
    k: int
    shrunk: bool


def top_bottom(diffs: Sequence[IndicatorDiff], k: int) -> TopBottom:
    """Ids of the k highest and k lowest differences.

    Ordering ties break by article id, so results are deterministic. When
    2k exceeds the article count, k shrinks to floor(n/2).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(diffs)
    shrunk = k > n // 2
    k = min(k, n // 2)
    ordered = sorted(diffs, key=lambda d: (d.diff, d.article_id))
    bottom = tuple(d.article_id for d in ordered[:k])
    top = tuple(d.article_id for d in ordered[n - k:])
    return TopBottom(top=top, bottom=bottom, k=k, shrunk=shrunk)


def _alias_pattern(alias: str) -> re.Pattern[str]:
    return re.compile(rf"(?<!\w){re.escape(alias)}(?!\w)", re.IGNORECASE)


def mentions_country(article: Article, profile: CountryProfile) -> bool:
    """Whole-word, case-insensitive alias match in the title or abstract."""
    if not profile.mention_aliases:
        raise ValueError("country profile has no mention aliases")
    text = f"{article.title}\n{article.abstract}"
    return any(_alias_pattern(alias).search(text) for alias in profile.mention_aliases)


def mention_rate(articles: Sequence[Article], profile: CountryProfile) -> float:
    if not articles:
        raise ValueError("mention_rate requires a non-empty article list")
    hits = sum(1 for article in articles if mentions_country(article, profile))
    return hits / len(articles)


@dataclass(frozen=True)
class MentionAudit:
    group: str
    k: int
    mention_count: int
    flags: tuple[tuple[str, bool], ...]


def audit_mentions(
    group: str,
    article_ids: Iterable[str],
    articles_by_id: Mapping[str, Article],
    profile: CountryProfile,
) -> MentionAudit:
    flags = tuple(
        (article_id, mentions_country(articles_by_id[article_id], profile))
        for article_id in article_ids
    )
    return MentionAudit(
        group=group,
        k=len(flags),
        mention_count=sum(1 for _, flag in flags if flag),
        flags=flags,
    )
