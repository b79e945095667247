"""Deterministic offline scoring provider for desk-scale runs and tests.

Responses are pure functions of (seed, request content): every hash chain
starts from sha256 over the seed plus the request's system/user text, so
the same request always produces a byte-identical response, across
processes and platforms.

A score model maps (regime, panel) to either a fixed distribution over the
four star levels or a trait link. Trait-linked articles carry latent traits
derived from their user text; regimes linked to the same trait produce
correlated scores (up to the configured noise), regimes on different
traits score independently.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Union

from .corpus import Panel
from .gateway import RawResponse, ScoreRequest, ScoringProvider
from .prompts import Regime

SCORE_LEVELS = (1, 2, 3, 4)
MOCK_TIMESTAMP = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class FixedDistribution:
    """The same distribution over {1,2,3,4} for every article."""

    probabilities: Mapping[int, float]

    def __post_init__(self) -> None:
        bad = set(self.probabilities) - set(SCORE_LEVELS)
        if bad:
            raise ValueError(f"scores outside 1..4: {sorted(bad)}")
        if any(p < 0 for p in self.probabilities.values()):
            raise ValueError("probabilities must be non-negative")
        if sum(self.probabilities.values()) <= 0:
            raise ValueError("distribution has zero total mass")


@dataclass(frozen=True)
class TraitLink:
    """Scores driven by a per-article latent trait.

    noise is the standard deviation of a per-(article, regime) perturbation
    of the trait; spread is the width of the score kernel around the target
    level. Two regimes linked to the same trait name produce correlated
    scores.
    """

    trait: str
    noise: float = 0.0
    spread: float = 0.45


DistributionSpec = Union[FixedDistribution, TraitLink]
ScoreModel = Mapping[Union[tuple[Regime, Panel], Regime], DistributionSpec]

_REPORT_TEMPLATE = (
    "The submission was assessed against the configured level definitions "
    "for panel {panel}. Drawing only on the title and abstract, the "
    "strengths and limitations of the work were weighed against each "
    "starred level in turn, and the evidence best matches the level-{score} "
    "description. Score: {score}*"
)


def _unit(*parts: object) -> float:
    """Uniform [0,1) value from a sha256 chain over the parts."""
    digest = hashlib.sha256(
        "\x1f".join(str(p) for p in parts).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def _normal(*parts: object) -> float:
    u1 = max(_unit(*parts, "u1"), 1e-12)
    u2 = _unit(*parts, "u2")
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def default_score_model() -> dict[Regime, TraitLink]:
    """Generic quality and country-oriented quality share one latent trait;
    direct national value follows an independent trait."""
    return {
        Regime.QUALITY: TraitLink("quality", noise=0.03),
        Regime.QUALITY_COUNTRY: TraitLink("quality", noise=0.10),
        Regime.VALUE_COUNTRY: TraitLink("value", noise=0.03),
    }


class MockProvider(ScoringProvider):
    def __init__(self, seed: int, score_model: ScoreModel | DistributionSpec):
        self.seed = seed
        self.score_model = score_model
        self.provider_id = f"mock-{seed}"

    def _spec_for(self, regime: Regime, panel: Panel) -> DistributionSpec:
        model = self.score_model
        if isinstance(model, (FixedDistribution, TraitLink)):
            return model
        if (regime, panel) in model:
            return model[(regime, panel)]
        if regime in model:
            return model[regime]
        raise KeyError(f"score model has no entry for ({regime}, {panel})")

    def _distribution(self, request: ScoreRequest) -> dict[int, float]:
        spec = self._spec_for(request.prompt.regime, request.prompt.panel)
        if isinstance(spec, FixedDistribution):
            weights = {k: float(spec.probabilities.get(k, 0.0)) for k in SCORE_LEVELS}
        else:
            # Trait and regime perturbation hang off the user text, not the
            # article id, so identical prompts get identical responses.
            content = hashlib.sha256(request.user_text.encode("utf-8")).hexdigest()
            trait = _unit(self.seed, "trait", spec.trait, content)
            eta = (
                _normal(
                    self.seed, "noise", spec.trait, request.prompt.regime.value, content
                )
                * spec.noise
            )
            level = min(1.0, max(0.0, trait + eta))
            target = 1.0 + 3.0 * level
            weights = {
                k: math.exp(-((k - target) ** 2) / (2.0 * spec.spread**2))
                for k in SCORE_LEVELS
            }
        total = sum(weights.values())
        return {k: w / total for k, w in weights.items() if w > 0.0}

    def complete(self, request: ScoreRequest) -> RawResponse:
        distribution = self._distribution(request)
        fingerprint = request.fingerprint
        if request.want_token_probabilities:
            entries = sorted(distribution.items(), key=lambda kv: (-kv[1], kv[0]))
            token_probabilities = tuple((str(k), p) for k, p in entries)
            text = f"{entries[0][0]}*"
        else:
            token_probabilities = None
            score = self._sample(distribution, fingerprint)
            text = _REPORT_TEMPLATE.format(panel=request.prompt.panel.value, score=score)
        return RawResponse(
            text=text,
            token_probabilities=token_probabilities,
            provider_id=self.provider_id,
            timestamp=MOCK_TIMESTAMP,
            fingerprint=fingerprint,
        )

    def _sample(self, distribution: dict[int, float], fingerprint: str) -> int:
        u = _unit(self.seed, "sample", fingerprint)
        cumulative = 0.0
        for score in SCORE_LEVELS:
            cumulative += distribution.get(score, 0.0)
            if u <= cumulative:
                return score
        return max(k for k, p in distribution.items() if p > 0.0)


def mock_provider(
    seed: int, score_model: ScoreModel | DistributionSpec | None = None
) -> MockProvider:
    """A deterministic provider; defaults to the trait-linked score model."""
    return MockProvider(seed, score_model if score_model is not None else default_score_model())
