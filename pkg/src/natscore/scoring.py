"""Star-score parsing, probability weighting, and per-article aggregation.

Report responses yield an integer star level parsed from the text;
probability responses yield a weighted mean over the score tokens. Scores
stay on the 1-4 star scale as reals throughout; nothing is rescaled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .gateway import FailureRecord, RawResponse, ScoreRequest
from .prompts import Regime, Variant

# A star level is a digit immediately followed by the star mark, or the
# phrase "score of N"; reports usually restate the final score last, so the
# last occurrence wins.
_STAR = re.compile(r"([1-4])\*")
_SCORE_OF = re.compile(r"score of (\d+)", re.IGNORECASE)
_SCORE_TOKEN = re.compile(r"^\s*([1-4])\*?\s*$")


class ScoreParseError(ValueError):
    """No usable star level in a report; carries the report for audit."""

    def __init__(self, message: str, report: str):
        super().__init__(message)
        self.report = report


def extract_score(report: str) -> int:
    """Star level asserted by a report.

    Scans for every digit 1-4 immediately followed by "*" and every
    "score of N" phrase; the match appearing last in the text wins. A
    final match outside 1..4 is a parse failure, as is no match at all.
    """
    if not report.strip():
        raise ScoreParseError("empty report", report)
    candidates: list[tuple[int, int]] = []
    for match in _STAR.finditer(report):
        candidates.append((match.start(1), int(match.group(1))))
    for match in _SCORE_OF.finditer(report):
        candidates.append((match.start(1), int(match.group(1))))
    if not candidates:
        raise ScoreParseError("no score pattern found", report)
    _, value = max(candidates)
    if value not in (1, 2, 3, 4):
        raise ScoreParseError(f"score {value} outside 1..4", report)
    return value


def weighted_score(distribution: Mapping[int, float]) -> float:
    """Probability-weighted mean star level.

    Mass on keys outside 1..4 is discarded; the remainder is renormalized
    to sum 1, so the result is invariant under uniform scaling of the
    input. Raises ValueError when no valid mass remains.
    """
    valid = {k: p for k, p in distribution.items() if k in (1, 2, 3, 4) and p > 0.0}
    if any(p < 0.0 for p in distribution.values()):
        raise ValueError("probabilities must be non-negative")
    total = sum(valid.values())
    if total <= 0.0:
        raise ValueError("distribution has no mass on score levels 1..4")
    mean = sum(k * p for k, p in sorted(valid.items())) / total
    # The weighted mean lies within the support; clamp float drift back in.
    return min(max(mean, min(valid)), max(valid))


def token_distribution(
    token_probabilities: Iterable[tuple[str, float]],
) -> dict[int, float]:
    """Map token/probability pairs onto star levels, merging duplicates."""
    distribution: dict[int, float] = {}
    for token, probability in token_probabilities:
        match = _SCORE_TOKEN.match(token)
        if match:
            level = int(match.group(1))
            distribution[level] = distribution.get(level, 0.0) + probability
    return distribution


@dataclass(frozen=True)
class ScoreSample:
    """One run's score: exactly one of parsed_score / weighted_score is set,
    matching the variant."""

    article_id: str
    regime: Regime
    variant: Variant
    run_index: int
    parsed_score: int | None
    weighted_score: float | None
    fingerprint: str

    @property
    def value(self) -> float:
        if self.parsed_score is not None:
            return float(self.parsed_score)
        assert self.weighted_score is not None
        return self.weighted_score


@dataclass(frozen=True)
class ParseFailure:
    article_id: str
    regime: str
    variant: str
    run_index: int
    fingerprint: str
    reason: str


@dataclass(frozen=True)
class ArticleScoreSummary:
    article_id: str
    regime: Regime
    std_mean: float | None
    prob_mean: float | None
    combined: float | None
    n_report: int
    n_probability: int
    incomplete: bool


def samples_from_results(
    outcomes: Sequence[tuple[ScoreRequest, RawResponse | FailureRecord]],
) -> tuple[list[ScoreSample], list[ParseFailure]]:
    """Convert raw batch outcomes into score samples.

    Gateway failures are skipped here (the gateway already reports them);
    unparseable responses become ParseFailure records, never imputed
    values.
    """
    samples: list[ScoreSample] = []
    failures: list[ParseFailure] = []

    def fail(request: ScoreRequest, reason: str) -> None:
        failures.append(
            ParseFailure(
                article_id=request.article_id,
                regime=request.prompt.regime.value,
                variant=request.prompt.variant.value,
                run_index=request.run_index,
                fingerprint=request.fingerprint,
                reason=reason,
            )
        )

    for request, outcome in outcomes:
        if isinstance(outcome, FailureRecord):
            continue
        if request.prompt.variant is Variant.REPORT:
            try:
                parsed = extract_score(outcome.text)
            except ScoreParseError as exc:
                fail(request, str(exc))
                continue
            samples.append(
                ScoreSample(
                    article_id=request.article_id,
                    regime=request.prompt.regime,
                    variant=Variant.REPORT,
                    run_index=request.run_index,
                    parsed_score=parsed,
                    weighted_score=None,
                    fingerprint=request.fingerprint,
                )
            )
        else:
            if not outcome.token_probabilities:
                fail(request, "response carries no token probabilities")
                continue
            try:
                weighted = weighted_score(token_distribution(outcome.token_probabilities))
            except ValueError as exc:
                fail(request, str(exc))
                continue
            samples.append(
                ScoreSample(
                    article_id=request.article_id,
                    regime=request.prompt.regime,
                    variant=Variant.PROBABILITY,
                    run_index=request.run_index,
                    parsed_score=None,
                    weighted_score=weighted,
                    fingerprint=request.fingerprint,
                )
            )
    return samples, failures


def aggregate(samples: Iterable[ScoreSample], repetitions: int) -> list[ArticleScoreSummary]:
    """Per-(article, regime) means across runs.

    std_mean and prob_mean average the available runs of each variant;
    combined averages the union of all per-run values, which equals
    (std_mean + prob_mean) / 2 when both variants have equally many runs.
    A summary missing either variant entirely is flagged incomplete.
    """
    grouped: dict[tuple[str, Regime], dict[Variant, list[tuple[int, float]]]] = {}
    for sample in samples:
        key = (sample.article_id, sample.regime)
        bucket = grouped.setdefault(key, {Variant.REPORT: [], Variant.PROBABILITY: []})
        bucket[sample.variant].append((sample.run_index, sample.value))
    summaries: list[ArticleScoreSummary] = []
    for (article_id, regime), bucket in sorted(
        grouped.items(), key=lambda item: (item[0][0], item[0][1].value)
    ):
        # Summation in run order keeps aggregation exactly permutation
        # invariant despite float rounding.
        reports = [v for _, v in sorted(bucket[Variant.REPORT])]
        probabilities = [v for _, v in sorted(bucket[Variant.PROBABILITY])]
        if len(reports) > repetitions or len(probabilities) > repetitions:
            raise ValueError(
                f"more than {repetitions} runs for ({article_id}, {regime.value})"
            )
        all_values = reports + probabilities
        summaries.append(
            ArticleScoreSummary(
                article_id=article_id,
                regime=regime,
                std_mean=sum(reports) / len(reports) if reports else None,
                prob_mean=sum(probabilities) / len(probabilities) if probabilities else None,
                combined=sum(all_values) / len(all_values) if all_values else None,
                n_report=len(reports),
                n_probability=len(probabilities),
                incomplete=not reports or not probabilities,
            )
        )
    return summaries
