"""Project configuration and country profiles (YAML key-value documents).

Relative paths inside a config file resolve against the file's own
directory, so a project directory can be moved or shared as a unit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import yaml

from .corpus import FilterConfig
from .prompts import CountryProfile


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderSettings:
    endpoint: str = ""
    model: str = ""
    credentials_env: str = "NATSCORE_API_KEY"


@dataclass(frozen=True)
class RunSettings:
    repetitions: int = 5
    max_in_flight: int = 4
    max_retries: int = 2
    backoff_seconds: float = 0.5
    requests_per_second: float | None = None


@dataclass(frozen=True)
class BootstrapSettings:
    resamples: int = 1000
    alpha: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class WataSettings:
    alpha: float = 0.05
    min_docs: int = 5
    contexts_per_term: int = 10
    stop_words: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProjectConfig:
    config_path: Path
    config_hash: str
    corpus_csv: Path
    output_dir: Path
    country_profile: Path | None
    overrides_csv: Path | None
    column_map: Path | None
    asjc_names: Path | None
    template_dir: Path | None
    filter: FilterConfig
    provider: ProviderSettings
    runs: RunSettings
    bootstrap: BootstrapSettings
    wata: WataSettings
    top_bottom_k: int = 50


def _resolve(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path: Path | str) -> ProjectConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw_bytes = path.read_bytes()
    try:
        doc = yaml.safe_load(raw_bytes) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    base = path.parent

    corpus_section = doc.get("corpus") or {}
    if "csv" not in corpus_section:
        raise ConfigError("config is missing corpus.csv")
    filter_section = doc.get("filter") or {}
    provider_section = doc.get("provider") or {}
    runs_section = doc.get("runs") or {}
    bootstrap_section = doc.get("bootstrap") or {}
    wata_section = doc.get("wata") or {}
    analysis_section = doc.get("analysis") or {}

    try:
        filter_config = FilterConfig(
            year_min=int(filter_section.get("year_min", 2015)),
            year_max=int(filter_section.get("year_max", 2021)),
            allowed_doc_types=frozenset(filter_section.get("doc_types", ["Article"])),
            allowed_languages=frozenset(filter_section.get("languages", ["English"])),
            abstract_decile_cut=float(filter_section.get("abstract_decile_cut", 0.10)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid filter settings: {exc}") from exc

    runs = RunSettings(
        repetitions=int(runs_section.get("repetitions", 5)),
        max_in_flight=int(runs_section.get("max_in_flight", 4)),
        max_retries=int(runs_section.get("max_retries", 2)),
        backoff_seconds=float(runs_section.get("backoff_seconds", 0.5)),
        requests_per_second=(
            float(runs_section["requests_per_second"])
            if runs_section.get("requests_per_second") is not None
            else None
        ),
    )
    if runs.repetitions < 1:
        raise ConfigError("runs.repetitions must be >= 1")

    return ProjectConfig(
        config_path=path,
        config_hash=hashlib.sha256(raw_bytes).hexdigest()[:12],
        corpus_csv=_resolve(base, corpus_section["csv"]),
        output_dir=_resolve(base, doc.get("output_dir", "out")),
        country_profile=_resolve(base, doc.get("country_profile")),
        overrides_csv=_resolve(base, corpus_section.get("overrides")),
        column_map=_resolve(base, corpus_section.get("column_map")),
        asjc_names=_resolve(base, corpus_section.get("asjc_names")),
        template_dir=_resolve(base, doc.get("template_dir")),
        filter=filter_config,
        provider=ProviderSettings(
            endpoint=provider_section.get("endpoint", ""),
            model=provider_section.get("model", ""),
            credentials_env=provider_section.get("credentials_env", "NATSCORE_API_KEY"),
        ),
        runs=runs,
        bootstrap=BootstrapSettings(
            resamples=int(bootstrap_section.get("resamples", 1000)),
            alpha=float(bootstrap_section.get("alpha", 0.05)),
            seed=int(bootstrap_section.get("seed", 0)),
        ),
        wata=WataSettings(
            alpha=float(wata_section.get("alpha", 0.05)),
            min_docs=int(wata_section.get("min_docs", 5)),
            contexts_per_term=int(wata_section.get("contexts_per_term", 10)),
            stop_words=tuple(wata_section.get("stop_words") or ()),
        ),
        top_bottom_k=int(analysis_section.get("top_bottom_k", 50)),
    )


def load_country_profile(path: Path | str) -> CountryProfile:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"country profile not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    try:
        return CountryProfile(
            name=str(doc["name"]),
            mention_aliases=tuple(str(a) for a in doc.get("mention_aliases", [])),
            sectors=tuple(str(s) for s in doc.get("sectors", [])),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid country profile {path}: {exc}") from exc


def load_column_map(path: Path | str) -> dict[str, str]:
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"column map must be a mapping: {path}")
    return {str(k): str(v) for k, v in doc.items()}


def load_asjc_names(path: Path | str) -> dict[str, int]:
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"subject-code name map must be a mapping: {path}")
    return {str(k): int(v) for k, v in doc.items()}
