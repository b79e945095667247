"""Correlation-table, indicator-difference, and mention-audit tests."""

from __future__ import annotations

import random

import pytest

from natscore.analysis import (
    DEFAULT_PAIRS,
    IndicatorDiff,
    audit_mentions,
    correlate,
    correlation_matrix,
    indicator_difference,
    mention_rate,
    mentions_country,
    top_bottom,
)
from natscore.corpus import Article
from natscore.prompts import CountryProfile

PROFILE = CountryProfile(
    name="Mauritius", mention_aliases=("Mauritius", "Mauritian"), sectors=("tourism",)
)


def article_with_text(i: int, title: str, abstract: str) -> Article:
    return Article(
        id=f"m{i:03d}", title=title, abstract=abstract, year=2018, citations=0,
        asjc_codes=frozenset({2713}),
    )


class TestCorrelate:
    def test_identical_vectors(self):
        values = [float(v) for v in range(10)]
        result = correlate(values, values, resamples=100, seed=1)
        assert result.rho == 1.0
        assert (result.ci_low, result.ci_high) == (1.0, 1.0)

    def test_anti_monotone(self):
        x = [float(v) for v in range(10)]
        y = [-v for v in x]
        result = correlate(x, y, resamples=100, seed=1)
        assert result.rho == -1.0
        assert (result.ci_low, result.ci_high) == (-1.0, -1.0)

    def test_null_interval_covers_zero_in_most_trials(self):
        rng = random.Random(99)
        covered = 0
        trials = 40
        for _ in range(trials):
            x = [rng.random() for _ in range(60)]
            y = [rng.random() for _ in range(60)]
            result = correlate(x, y, resamples=200, seed=rng.randint(0, 10**6))
            if result.ci_low <= 0.0 <= result.ci_high:
                covered += 1
        assert covered >= int(0.9 * trials)


class TestCorrelationMatrix:
    def series(self, n=20, seed=3):
        rng = random.Random(seed)
        ids = [f"a{i}" for i in range(n)]
        base = {i: rng.random() for i in ids}
        return {
            "A": {
                "quality": dict(base),
                "quality_country": {i: v + rng.gauss(0, 0.01) for i, v in base.items()},
                "value_country": {i: rng.random() for i in ids},
                "nlcs": {i: rng.random() for i in ids},
                "quality_std": dict(base),
                "quality_prob": dict(base),
                "quality_country_std": {i: rng.random() for i in ids},
                "quality_country_prob": {i: rng.random() for i in ids},
                "value_country_std": {i: rng.random() for i in ids},
                "value_country_prob": {i: rng.random() for i in ids},
            }
        }

    def test_emits_every_pair_per_panel(self):
        rows = correlation_matrix(self.series(), resamples=50, base_seed=5)
        assert len(rows) == len(DEFAULT_PAIRS)
        assert {r.pair for r in rows} == set(DEFAULT_PAIRS)

    def test_small_panel_skipped_with_reason(self):
        series = self.series(n=2)
        rows = correlation_matrix(series, resamples=50, base_seed=5)
        assert all(r.rho is None for r in rows)
        assert all("complete articles" in r.note for r in rows)

    def test_three_article_panel_is_computed(self):
        rows = correlation_matrix(self.series(n=3), resamples=50, base_seed=5)
        computed = [r for r in rows if r.rho is not None]
        assert computed  # n = 3 meets the cutoff

    def test_missing_family_noted(self):
        series = self.series()
        del series["A"]["nlcs"]
        rows = correlation_matrix(series, resamples=50, base_seed=5)
        missing = [r for r in rows if "nlcs" in r.pair]
        assert missing
        assert all("missing score family" in r.note for r in missing)

    def test_deterministic_and_order_independent_seeds(self):
        series = self.series()
        first = correlation_matrix(series, resamples=100, base_seed=7)
        second = correlation_matrix(series, resamples=100, base_seed=7)
        assert first == second
        # Restricting to one pair reproduces that pair's row exactly.
        only = correlation_matrix(series, pairs=DEFAULT_PAIRS[3:4], resamples=100, base_seed=7)
        matching = [r for r in first if r.pair == DEFAULT_PAIRS[3]]
        assert only == matching

    def test_pair_order_symmetry(self):
        series = self.series()
        forward = correlation_matrix(series, pairs=[("quality", "nlcs")], resamples=100, base_seed=7)
        backward = correlation_matrix(series, pairs=[("nlcs", "quality")], resamples=100, base_seed=7)
        assert forward[0].rho == pytest.approx(backward[0].rho, abs=0)

    def test_misaligned_ids_use_intersection(self):
        series = self.series()
        series["A"]["nlcs"].pop("a0")
        rows = correlation_matrix(series, pairs=[("quality", "nlcs")], resamples=50, base_seed=5)
        assert rows[0].n == len(series["A"]["quality"]) - 1


class TestIndicatorDifference:
    def test_subtraction(self):
        diffs, excluded = indicator_difference({"a": 3.0}, {"a": 2.0})
        assert excluded == 0
        assert diffs[0].diff == pytest.approx(1.0)

    def test_equal_scores(self):
        diffs, _ = indicator_difference({"a": 2.5}, {"a": 2.5})
        assert diffs[0].diff == 0.0

    def test_extreme_bound(self):
        diffs, _ = indicator_difference({"a": 1.0}, {"a": 4.0})
        assert diffs[0].diff == pytest.approx(-3.0)

    def test_incomplete_articles_excluded_and_counted(self):
        diffs, excluded = indicator_difference({"a": 3.0, "b": 2.0}, {"a": 2.0, "c": 1.0})
        assert [d.article_id for d in diffs] == ["a"]
        assert excluded == 2

    def test_antisymmetry(self):
        rng = random.Random(6)
        quality = {f"a{i}": rng.uniform(1, 4) for i in range(30)}
        value = {f"a{i}": rng.uniform(1, 4) for i in range(30)}
        forward, _ = indicator_difference(quality, value)
        backward, _ = indicator_difference(value, quality)
        for f, b in zip(forward, backward):
            assert f.diff == pytest.approx(-b.diff, abs=1e-12)

    def test_bounds(self):
        rng = random.Random(7)
        quality = {f"a{i}": rng.uniform(1, 4) for i in range(50)}
        value = {f"a{i}": rng.uniform(1, 4) for i in range(50)}
        diffs, _ = indicator_difference(quality, value)
        assert all(-3.0 <= d.diff <= 3.0 for d in diffs)


class TestTopBottom:
    def diffs(self, values):
        return [
            IndicatorDiff(article_id=f"a{i}", quality=v, value=0.0)
            for i, v in enumerate(values)
        ]

    def test_single_extremes(self):
        result = top_bottom(self.diffs([1, 2, 3, 4]), k=1)
        assert result.top == ("a3",)
        assert result.bottom == ("a0",)

    def test_tie_break_by_id(self):
        result = top_bottom(self.diffs([2, 2, 2, 2]), k=2)
        assert result.bottom == ("a0", "a1")
        assert result.top == ("a2", "a3")

    def test_small_panel_shrinks_k(self):
        result = top_bottom(self.diffs(range(21)), k=50)
        assert result.k == 10
        assert result.shrunk

    def test_disjoint_when_2k_fits(self):
        rng = random.Random(8)
        for _ in range(20):
            n = rng.randint(4, 60)
            k = rng.randint(1, n // 2)
            values = [rng.uniform(-3, 3) for _ in range(n)]
            result = top_bottom(self.diffs(values), k=k)
            assert len(result.top) == len(result.bottom) == k
            assert not set(result.top) & set(result.bottom)

    def test_k_validation(self):
        with pytest.raises(ValueError):
            top_bottom(self.diffs([1, 2]), k=0)


class TestMentions:
    def test_title_match(self):
        article = article_with_text(0, "Tourism in Mauritius", "An abstract.")
        assert mentions_country(article, PROFILE)

    def test_demonym_in_abstract(self):
        article = article_with_text(1, "A study", "Impacts on the Mauritian economy.")
        assert mentions_country(article, PROFILE)

    def test_whole_word_boundary(self):
        article = article_with_text(2, "mauritshuis museum", "Paintings of mauritshuis.")
        assert not mentions_country(article, PROFILE)

    def test_case_insensitive(self):
        article = article_with_text(3, "MAURITIUS notes", "text")
        assert mentions_country(article, PROFILE)

    def test_rate_simple(self):
        articles = [
            article_with_text(0, "Mauritius", "x"),
            article_with_text(1, "Mauritian", "x"),
            article_with_text(2, "Elsewhere", "x"),
            article_with_text(3, "Nowhere", "x"),
        ]
        assert mention_rate(articles, PROFILE) == pytest.approx(0.5)

    def test_rate_zero(self):
        articles = [article_with_text(0, "Elsewhere", "x")]
        assert mention_rate(articles, PROFILE) == 0.0

    def test_rate_constructed_27_percent(self):
        articles = [
            article_with_text(i, "About Mauritius" if i < 27 else "About elsewhere", "x")
            for i in range(100)
        ]
        assert mention_rate(articles, PROFILE) == 0.27

    def test_audit_counts_flags(self):
        articles = {
            a.id: a
            for a in [
                article_with_text(0, "Mauritius study", "x"),
                article_with_text(1, "Other", "x"),
            ]
        }
        audit = audit_mentions("top", ["m000", "m001"], articles, PROFILE)
        assert audit.k == 2
        assert audit.mention_count == 1
        assert dict(audit.flags) == {"m000": True, "m001": False}
