"""System-instruction rendering for the three scoring regimes.

Templates live as plain-text assets, one per (regime, panel, variant),
with {{country}} and {{sectors}} placeholders. Rendering is deterministic
and each rendered text carries a content-hash version so scores can be
traced to the exact instructions that produced them.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .corpus import Article, Panel


class Regime(str, Enum):
    QUALITY = "quality"
    QUALITY_COUNTRY = "quality_country"
    VALUE_COUNTRY = "value_country"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


class Variant(str, Enum):
    REPORT = "report"
    PROBABILITY = "probability"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


USER_PROMPT_INSTRUCTION = "Score this journal article."

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class CountryProfile:
    """Target country name, mention aliases, and ordered key-sector list."""

    name: str
    mention_aliases: tuple[str, ...]
    sectors: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("country profile needs a non-empty name")
        if not self.mention_aliases:
            raise ValueError("country profile needs at least one mention alias")


@dataclass(frozen=True)
class PromptSpec:
    regime: Regime
    panel: Panel
    variant: Variant
    system_text: str
    template_version: str


def template_filename(regime: Regime, panel: Panel, variant: Variant) -> str:
    return f"{regime.value}__{panel.value.lower()}__{variant.value}.txt"


def _load_template(
    regime: Regime, panel: Panel, variant: Variant, template_dir: Path | None
) -> str:
    name = template_filename(regime, panel, variant)
    if template_dir is not None:
        path = Path(template_dir) / name
        if not path.is_file():
            raise TemplateError(f"template asset not found: {path}")
        return path.read_text(encoding="utf-8")
    asset = resources.files("natscore").joinpath("templates", name)
    if not asset.is_file():
        raise TemplateError(f"packaged template asset not found: {name}")
    return asset.read_text(encoding="utf-8")


def render_system_instructions(
    regime: Regime,
    panel: Panel,
    variant: Variant,
    profile: CountryProfile,
    template_dir: Path | None = None,
) -> PromptSpec:
    """Render the template for (regime, panel, variant) with the profile.

    {{country}} takes the profile name and {{sectors}} the comma-joined
    sector list, in order. An unknown placeholder, or {{sectors}} with an
    empty sector list, raises TemplateError.
    """
    template = _load_template(regime, panel, variant, template_dir)
    substitutions = {"country": profile.name}
    if profile.sectors:
        substitutions["sectors"] = ", ".join(profile.sectors)

    unresolved: list[str] = []

    def replace(match: re.Match[str]) -> str:
        key = match.group(1)
        if key not in substitutions:
            unresolved.append(key)
            return match.group(0)
        return substitutions[key]

    system_text = _PLACEHOLDER.sub(replace, template)
    if unresolved:
        raise TemplateError(
            f"unresolved placeholder {{{{{unresolved[0]}}}}} in "
            f"{template_filename(regime, panel, variant)}"
        )
    if not system_text.strip():
        raise TemplateError(
            f"empty template {template_filename(regime, panel, variant)}"
        )
    version = hashlib.sha256(system_text.encode("utf-8")).hexdigest()[:12]
    return PromptSpec(
        regime=regime,
        panel=panel,
        variant=variant,
        system_text=system_text,
        template_version=version,
    )


def all_prompt_specs(
    profile: CountryProfile, template_dir: Path | None = None
) -> dict[tuple[Regime, Panel, Variant], PromptSpec]:
    """Render all 24 (regime, panel, variant) combinations."""
    specs = {}
    for regime in Regime:
        for panel in Panel:
            for variant in Variant:
                specs[(regime, panel, variant)] = render_system_instructions(
                    regime, panel, variant, profile, template_dir
                )
    return specs


def build_user_prompt(article: Article) -> str:
    """The scoring request plus title and abstract; never any other field."""
    title = article.title.strip()
    abstract = article.abstract.strip()
    if not title:
        raise ValueError(f"article {article.id} has an empty title")
    if not abstract:
        raise ValueError(f"article {article.id} has an empty abstract")
    return f"{USER_PROMPT_INSTRUCTION}\n\nTitle: {title}\n\nAbstract: {abstract}\n"
