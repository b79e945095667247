"""Score parsing, probability weighting, and aggregation tests."""

from __future__ import annotations

import random

import pytest

from conftest import synthetic_article
from natscore.corpus import Panel
from natscore.gateway import RawResponse, ScoreRequest, build_requests, execute_batch
from natscore.mock import TraitLink, mock_provider
from natscore.prompts import CountryProfile, Regime, Variant, all_prompt_specs
from natscore.scoring import (
    ScoreParseError,
    ScoreSample,
    aggregate,
    extract_score,
    samples_from_results,
    token_distribution,
    weighted_score,
)
from natscore.stats import spearman


class TestExtractScore:
    def test_score_of_phrase(self):
        assert extract_score("…warranting a high score of 3*.") == 3
        assert extract_score("the niche nature justifies a score of 2*.") == 2

    def test_star_mark(self):
        assert extract_score("Overall assessment. Score: 4*") == 4

    def test_last_occurrence_wins(self):
        text = "A first pass suggested 2*, but the final verdict is 3*."
        assert extract_score(text) == 3
        assert extract_score("Might merit 4*. On balance, score of 1.") == 1

    def test_no_pattern_is_parse_failure(self):
        with pytest.raises(ScoreParseError) as excinfo:
            extract_score("no stars here")
        assert excinfo.value.report == "no stars here"

    def test_out_of_range_is_parse_failure(self):
        with pytest.raises(ScoreParseError, match="outside"):
            extract_score("we assign a score of 7")

    def test_empty_report(self):
        with pytest.raises(ScoreParseError):
            extract_score("   ")


class TestWeightedScore:
    def test_worked_example(self):
        assert weighted_score({3: 0.6, 2: 0.4}) == pytest.approx(2.6, abs=1e-12)

    def test_point_mass(self):
        assert weighted_score({4: 1.0}) == 4.0

    def test_uniform(self):
        assert weighted_score({1: 0.25, 2: 0.25, 3: 0.25, 4: 0.25}) == pytest.approx(2.5, abs=1e-12)

    def test_scale_invariance(self):
        rng = random.Random(13)
        for _ in range(100):
            dist = {k: rng.random() for k in (1, 2, 3, 4)}
            base = weighted_score(dist)
            for factor in (0.1, 2.0, 17.5):
                scaled = {k: factor * v for k, v in dist.items()}
                assert weighted_score(scaled) == pytest.approx(base, abs=1e-12)

    def test_bounded_by_support(self):
        rng = random.Random(14)
        for _ in range(100):
            keys = rng.sample([1, 2, 3, 4], rng.randint(1, 4))
            dist = {k: rng.random() + 0.01 for k in keys}
            value = weighted_score(dist)
            assert min(keys) <= value <= max(keys)

    def test_non_score_mass_discarded(self):
        assert weighted_score({3: 0.3, 2: 0.2, 9: 0.5}) == pytest.approx(2.6, abs=1e-12)

    def test_empty_or_zero_mass_rejected(self):
        with pytest.raises(ValueError):
            weighted_score({})
        with pytest.raises(ValueError):
            weighted_score({3: 0.0})
        with pytest.raises(ValueError):
            weighted_score({3: -0.5, 2: 0.5})

    def test_token_distribution_mapping(self):
        dist = token_distribution([("3", 0.5), (" 3", 0.1), ("2*", 0.2), ("ok", 0.2)])
        assert dist == {3: pytest.approx(0.6), 2: pytest.approx(0.2)}


def sample(article_id, regime, variant, run, value):
    return ScoreSample(
        article_id=article_id,
        regime=regime,
        variant=variant,
        run_index=run,
        parsed_score=int(value) if variant is Variant.REPORT else None,
        weighted_score=float(value) if variant is Variant.PROBABILITY else None,
        fingerprint=f"f{article_id}{regime.value}{variant.value}{run}",
    )


class TestAggregate:
    def test_hand_arithmetic_over_ten_runs(self):
        samples = [
            sample("a", Regime.QUALITY, Variant.REPORT, run, 3) for run in range(1, 6)
        ] + [
            sample("a", Regime.QUALITY, Variant.PROBABILITY, run, 2.6) for run in range(1, 6)
        ]
        (summary,) = aggregate(samples, repetitions=5)
        assert summary.std_mean == pytest.approx(3.0, abs=1e-12)
        assert summary.prob_mean == pytest.approx(2.6, abs=1e-12)
        # (5*3 + 5*2.6) / 10, equal to the mean of the two variant means
        assert summary.combined == pytest.approx(2.8, abs=1e-12)
        assert not summary.incomplete

    def test_single_run_each_variant(self):
        samples = [
            sample("a", Regime.QUALITY, Variant.REPORT, 1, 2),
            sample("a", Regime.QUALITY, Variant.PROBABILITY, 1, 2.0),
        ]
        (summary,) = aggregate(samples, repetitions=1)
        assert summary.combined == pytest.approx(2.0, abs=1e-12)

    def test_two_point_mean(self):
        samples = [
            sample("a", Regime.QUALITY, Variant.REPORT, 1, 1),
            sample("a", Regime.QUALITY, Variant.REPORT, 2, 4),
        ]
        (summary,) = aggregate(samples, repetitions=2)
        assert summary.std_mean == pytest.approx(2.5, abs=1e-12)
        assert summary.incomplete  # no probability runs

    def test_permutation_invariance(self):
        rng = random.Random(3)
        samples = [
            sample("a", Regime.QUALITY, Variant.REPORT, run, rng.randint(1, 4))
            for run in range(1, 6)
        ] + [
            sample("a", Regime.QUALITY, Variant.PROBABILITY, run, rng.uniform(1, 4))
            for run in range(1, 6)
        ]
        baseline = aggregate(samples, repetitions=5)
        for _ in range(5):
            rng.shuffle(samples)
            assert aggregate(samples, repetitions=5) == baseline

    def test_incomplete_articles_flagged_not_failed(self):
        samples = [sample("a", Regime.VALUE_COUNTRY, Variant.PROBABILITY, 1, 3.3)]
        (summary,) = aggregate(samples, repetitions=5)
        assert summary.incomplete
        assert summary.std_mean is None
        assert summary.prob_mean == pytest.approx(3.3)
        assert summary.combined == pytest.approx(3.3)

    def test_too_many_runs_rejected(self):
        samples = [
            sample("a", Regime.QUALITY, Variant.REPORT, run, 2) for run in range(1, 4)
        ]
        with pytest.raises(ValueError, match="more than 2 runs"):
            aggregate(samples, repetitions=2)

    def test_combined_equals_mean_of_means_for_equal_runs(self):
        rng = random.Random(8)
        for _ in range(20):
            runs = rng.randint(1, 6)
            samples = [
                sample("a", Regime.QUALITY, Variant.REPORT, run, rng.randint(1, 4))
                for run in range(1, runs + 1)
            ] + [
                sample("a", Regime.QUALITY, Variant.PROBABILITY, run, rng.uniform(1, 4))
                for run in range(1, runs + 1)
            ]
            (summary,) = aggregate(samples, repetitions=runs)
            assert summary.combined == pytest.approx(
                (summary.std_mean + summary.prob_mean) / 2, abs=1e-12
            )


class TestSamplesFromResults:
    def test_parse_failures_are_counted_not_imputed(self):
        article = synthetic_article(0)
        profile = CountryProfile(name="X", mention_aliases=("X",), sectors=("s",))
        specs = all_prompt_specs(profile)
        spec = specs[(Regime.QUALITY, Panel.A, Variant.REPORT)]
        request = ScoreRequest(article.id, spec, "Score this journal article.\n\nT\n\nA", 1)
        good = RawResponse("Score: 3*", None, "p", "", request.fingerprint)
        bad = RawResponse("nothing to see", None, "p", "", request.fingerprint)
        samples, failures = samples_from_results([(request, good), (request, bad)])
        assert len(samples) == 1
        assert len(failures) == 1
        assert failures[0].reason == "no score pattern found"


class TestCrossValidationProperty:
    def test_standard_and_probability_scores_agree_at_corpus_scale(self):
        # Shared score model: the two scoring routes rank articles alike.
        articles = [synthetic_article(i) for i in range(120)]
        panel_by_id = {a.id: Panel.A for a in articles}
        profile = CountryProfile(name="X", mention_aliases=("X",), sectors=("s",))
        specs = all_prompt_specs(profile)
        requests = build_requests(
            articles, specs, panel_by_id, repetitions=5, regimes=(Regime.QUALITY,)
        )
        provider = mock_provider(77, {Regime.QUALITY: TraitLink("t", noise=0.02)})
        result = execute_batch(requests, provider)
        samples, failures = samples_from_results(result.outcomes)
        assert not failures
        summaries = aggregate(samples, repetitions=5)
        std = [s.std_mean for s in summaries]
        prob = [s.prob_mean for s in summaries]
        assert spearman(std, prob) > 0.9
