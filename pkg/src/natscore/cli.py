"""Command-line pipeline: ingest, score, analyze.

Stages communicate only through files under the configured output
directory, so each stage can be rerun independently; scoring is resumable
through the response cache. One command at a time per project directory,
enforced by a lock file.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import analysis, citations, reporting, wata
from .config import (
    ConfigError,
    ProjectConfig,
    load_asjc_names,
    load_column_map,
    load_config,
    load_country_profile,
)
from .corpus import (
    Article,
    CorpusSchemaError,
    EmptyCorpusError,
    Panel,
    UnresolvedPanelError,
    assign_panel,
    filter_corpus,
    parse_corpus_csv,
    resolve_panels,
)
from .gateway import (
    FailureRecord,
    ProviderAuthError,
    ResponseCache,
    RetryPolicy,
    build_requests,
    execute_batch,
)
from .mock import mock_provider
from .prompts import CountryProfile, Regime, Variant, all_prompt_specs
from .providers import OpenAiChatProvider
from .scoring import aggregate, samples_from_results

SNAPSHOT = "corpus_snapshot.csv"
ASSIGNMENTS = "panel_assignments.csv"
DIAGNOSTICS = "ingest_diagnostics.csv"
SCORE_MATRIX = "score_matrix.csv"
FAILURES = "failures.csv"
CACHE_DIR = "cache"

SCORE_COLUMNS = [f"{r.value}_{v}" for r in Regime for v in ("std", "prob", "combined")]
FLAG_COLUMNS = [f"{r.value}_incomplete" for r in Regime]

ANALYSIS_FILES = (
    "nlcs.csv",
    "correlations.csv",
    "indicator_diff.csv",
    "mention_audit.csv",
    "wata_terms.csv",
    "wata_contexts.csv",
    "summary.md",
)


class ProjectLock:
    """One command at a time per project directory."""

    def __init__(self, output_dir: Path, resume: bool):
        self.path = output_dir / ".lock"
        self.resume = resume

    def __enter__(self) -> "ProjectLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.resume and self.path.exists():
            self.path.unlink()
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"lock file {self.path} exists: another command appears to be "
                "running in this project directory; pass --resume to take over "
                "a stale lock"
            ) from None
        with os.fdopen(fd, "w") as handle:
            handle.write(str(os.getpid()))
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.path.unlink(missing_ok=True)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _profile_for(config: ProjectConfig) -> CountryProfile:
    if config.country_profile is None:
        raise ConfigError("config is missing country_profile")
    return load_country_profile(config.country_profile)


def _load_overrides(path: Path | None) -> dict[str, Panel]:
    if path is None or not path.is_file():
        return {}
    overrides: dict[str, Panel] = {}
    with path.open("r", encoding="utf-8", newline="") as handle:
        for row in csv.reader(handle):
            if len(row) < 2:
                continue
            article_id, panel_text = row[0].strip(), row[1].strip().upper()
            if panel_text in Panel.__members__:
                overrides[article_id] = Panel[panel_text]
    return overrides


def cmd_ingest(config: ProjectConfig) -> int:
    if not config.corpus_csv.is_file():
        raise ConfigError(f"corpus CSV not found: {config.corpus_csv}")
    columns = load_column_map(config.column_map) if config.column_map else None
    asjc_names = load_asjc_names(config.asjc_names) if config.asjc_names else None
    with config.corpus_csv.open("rb") as handle:
        articles, diagnostics = parse_corpus_csv(handle, columns, asjc_names)
    _log(f"parsed {len(articles)} articles, rejected {len(diagnostics)} rows")
    for diagnostic in diagnostics:
        _log(f"  row {diagnostic.row} ({diagnostic.id or '<no id>'}): {diagnostic.reason}")

    meta = {"config_hash": config.config_hash, "seed": str(config.bootstrap.seed)}
    out = config.output_dir
    reporting.write_csv(
        out / DIAGNOSTICS,
        ["row", "id", "reason"],
        [{"row": d.row, "id": d.id, "reason": d.reason} for d in diagnostics],
        meta,
    )
    if not articles:
        raise EmptyCorpusError(
            f"no usable articles in {config.corpus_csv}; see {out / DIAGNOSTICS}"
        )

    kept, removals = filter_corpus(articles, config.filter)
    for rule, count in removals.items():
        if count:
            _log(f"filter removed {count} under rule {rule!r}")

    assignments = [assign_panel(article) for article in kept]
    overrides = _load_overrides(config.overrides_csv)
    unresolved: list[str] = []
    try:
        panel_by_id = resolve_panels(assignments, overrides)
    except UnresolvedPanelError as exc:
        unresolved = exc.article_ids
        panel_by_id = {
            a.article_id: a.panel if a.resolved else overrides.get(a.article_id)
            for a in assignments
        }

    def status(assignment) -> str:
        if assignment.resolved:
            return "resolved"
        return "unclassifiable" if assignment.unclassifiable else "ambiguous"

    def panel_cell(article_id: str) -> str:
        panel = panel_by_id.get(article_id)
        return panel.value if panel else ""

    reporting.write_csv(
        out / ASSIGNMENTS,
        ["id", "status", "candidates", "panel"],
        [
            {
                "id": a.article_id,
                "status": status(a),
                "candidates": ";".join(p.value for p in a.candidates),
                "panel": panel_cell(a.article_id),
            }
            for a in assignments
        ],
        meta,
    )

    snapshot_meta = dict(meta)
    snapshot_meta["articles"] = str(len(kept))
    for rule, count in removals.items():
        snapshot_meta[f"removed_{rule}"] = str(count)
    reporting.write_csv(
        out / SNAPSHOT,
        [
            "id", "title", "abstract", "year", "citations", "language",
            "doc_type", "source_title", "asjc_codes", "panel",
        ],
        [
            {
                "id": a.id,
                "title": a.title,
                "abstract": a.abstract,
                "year": a.year,
                "citations": a.citations,
                "language": a.language,
                "doc_type": a.doc_type,
                "source_title": a.source_title,
                "asjc_codes": ";".join(str(c) for c in sorted(a.asjc_codes)),
                "panel": panel_cell(a.id),
            }
            for a in kept
        ],
        snapshot_meta,
    )

    if unresolved:
        _log(f"{len(unresolved)} unresolved panel assignments need an overrides file:")
        for article_id in unresolved:
            _log(f"  {article_id}")
        return 2
    _log("0 unresolved")
    counts: dict[str, int] = {}
    for panel in panel_by_id.values():
        counts[panel.value] = counts.get(panel.value, 0) + 1
    _log("panel counts: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return 0


def _load_snapshot(config: ProjectConfig) -> tuple[list[Article], dict[str, Panel], dict[str, str]]:
    path = config.output_dir / SNAPSHOT
    if not path.is_file():
        raise ConfigError(f"missing corpus snapshot {path}: run the ingest stage first")
    rows, meta = reporting.read_csv(path)
    articles: list[Article] = []
    panel_by_id: dict[str, Panel] = {}
    for row in rows:
        article = Article(
            id=row["id"],
            title=row["title"],
            abstract=row["abstract"],
            year=int(row["year"]),
            citations=int(row["citations"]),
            asjc_codes=frozenset(
                int(c) for c in row["asjc_codes"].split(";") if c.strip()
            ),
            language=row["language"],
            doc_type=row["doc_type"],
            source_title=row["source_title"],
        )
        articles.append(article)
        if row["panel"]:
            panel_by_id[article.id] = Panel(row["panel"])
    return articles, panel_by_id, meta


def _parse_regimes(text: str | None) -> tuple[Regime, ...] | None:
    if not text:
        return None
    chosen = []
    for piece in text.split(","):
        piece = piece.strip()
        try:
            chosen.append(Regime(piece))
        except ValueError:
            valid = ", ".join(r.value for r in Regime)
            raise ConfigError(f"unknown regime {piece!r} (valid: {valid})") from None
    return tuple(chosen)


def _parse_variants(text: str | None) -> tuple[Variant, ...] | None:
    if not text:
        return None
    chosen = []
    for piece in text.split(","):
        piece = piece.strip()
        try:
            chosen.append(Variant(piece))
        except ValueError:
            valid = ", ".join(v.value for v in Variant)
            raise ConfigError(f"unknown variant {piece!r} (valid: {valid})") from None
    return tuple(chosen)


def cmd_score(
    config: ProjectConfig,
    mock_seed: int | None,
    regimes: tuple[Regime, ...] | None = None,
    variants: tuple[Variant, ...] | None = None,
) -> int:
    articles, panel_by_id, _ = _load_snapshot(config)
    missing_panels = [a.id for a in articles if a.id not in panel_by_id]
    if missing_panels:
        raise ConfigError(
            f"{len(missing_panels)} articles in the snapshot have no panel; "
            "rerun ingest with an overrides file"
        )
    profile = _profile_for(config)
    specs = all_prompt_specs(profile, config.template_dir)

    if mock_seed is not None:
        provider = mock_provider(mock_seed)
        provenance = f"mock-{mock_seed}"
    else:
        if not config.provider.endpoint or not config.provider.model:
            raise ConfigError("config is missing provider.endpoint or provider.model")
        api_key = os.environ.get(config.provider.credentials_env, "")
        if not api_key:
            raise ConfigError(
                f"environment variable {config.provider.credentials_env} is not set; "
                "export the provider credentials before running live scoring"
            )
        provider = OpenAiChatProvider(
            endpoint=config.provider.endpoint,
            model=config.provider.model,
            api_key=api_key,
        )
        provenance = config.provider.model

    requests = build_requests(
        articles, specs, panel_by_id, config.runs.repetitions, regimes, variants
    )
    cache = ResponseCache(config.output_dir / CACHE_DIR)
    policy = RetryPolicy(
        max_in_flight=config.runs.max_in_flight,
        max_retries=config.runs.max_retries,
        backoff_seconds=config.runs.backoff_seconds,
        requests_per_second=config.runs.requests_per_second,
    )
    result = execute_batch(requests, provider, policy, cache)
    telemetry = result.telemetry
    _log(
        f"{telemetry.requests} requests: {telemetry.provider_calls} provider calls, "
        f"{telemetry.cache_hits} cache hits, {telemetry.retries} retries, "
        f"{telemetry.failures} failures"
    )

    samples, parse_failures = samples_from_results(result.outcomes)
    failure_rows = [
        {
            "kind": "provider",
            "article_id": f.article_id,
            "regime": f.regime,
            "panel": f.panel,
            "variant": f.variant,
            "run_index": f.run_index,
            "fingerprint": f.fingerprint,
            "attempts": f.attempts,
            "error": f.error,
        }
        for _, f in result.outcomes
        if isinstance(f, FailureRecord)
    ] + [
        {
            "kind": "parse",
            "article_id": f.article_id,
            "regime": f.regime,
            "panel": "",
            "variant": f.variant,
            "run_index": f.run_index,
            "fingerprint": f.fingerprint,
            "attempts": "",
            "error": f.reason,
        }
        for f in parse_failures
    ]

    meta = {
        "config_hash": config.config_hash,
        "seed": str(config.bootstrap.seed),
        "provider": provenance,
        "repetitions": str(config.runs.repetitions),
        "template_versions": ";".join(
            f"{regime.value}-{panel.value}-{variant.value}:{spec.template_version}"
            for (regime, panel, variant), spec in sorted(
                specs.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2].value)
            )
        ),
    }
    reporting.write_csv(
        config.output_dir / FAILURES,
        [
            "kind", "article_id", "regime", "panel", "variant", "run_index",
            "fingerprint", "attempts", "error",
        ],
        failure_rows,
        meta,
    )

    summaries = {(s.article_id, s.regime): s for s in aggregate(samples, config.runs.repetitions)}
    matrix_rows = []
    for article in sorted(articles, key=lambda a: a.id):
        row: dict[str, object] = {
            "article_id": article.id,
            "panel": panel_by_id[article.id].value,
        }
        for regime in Regime:
            summary = summaries.get((article.id, regime))
            if summary is None:
                continue
            row[f"{regime.value}_std"] = summary.std_mean
            row[f"{regime.value}_prob"] = summary.prob_mean
            row[f"{regime.value}_combined"] = summary.combined
            row[f"{regime.value}_incomplete"] = summary.incomplete
        matrix_rows.append(row)
    reporting.write_csv(
        config.output_dir / SCORE_MATRIX,
        ["article_id", "panel"] + SCORE_COLUMNS + FLAG_COLUMNS,
        matrix_rows,
        meta,
    )
    _log(f"score matrix written for {len(matrix_rows)} articles")
    return 0


def _series_from_matrix(
    matrix_rows: list[dict[str, str]],
    nlcs_by_id: dict[str, float],
) -> dict[str, dict[str, dict[str, float]]]:
    series: dict[str, dict[str, dict[str, float]]] = {}
    for row in matrix_rows:
        panel = row["panel"]
        families = series.setdefault(panel, {})
        article_id = row["article_id"]
        for regime in Regime:
            complete = row.get(f"{regime.value}_incomplete") == "false"
            combined = reporting.parse_optional_float(row.get(f"{regime.value}_combined"))
            if complete and combined is not None:
                families.setdefault(regime.value, {})[article_id] = combined
            for variant_key in ("std", "prob"):
                cell = reporting.parse_optional_float(row.get(f"{regime.value}_{variant_key}"))
                if cell is not None:
                    families.setdefault(f"{regime.value}_{variant_key}", {})[article_id] = cell
        if article_id in nlcs_by_id:
            families.setdefault("nlcs", {})[article_id] = nlcs_by_id[article_id]
    return series


def cmd_analyze(config: ProjectConfig) -> int:
    articles, panel_by_id, _ = _load_snapshot(config)
    matrix_path = config.output_dir / SCORE_MATRIX
    if not matrix_path.is_file():
        raise ConfigError(f"missing score matrix {matrix_path}: run the score stage first")
    matrix_rows, matrix_meta = reporting.read_csv(matrix_path)
    profile = _profile_for(config)
    out = config.output_dir
    meta = {
        "config_hash": config.config_hash,
        "seed": str(config.bootstrap.seed),
        "provider": matrix_meta.get("provider", ""),
        "template_versions": matrix_meta.get("template_versions", ""),
    }

    # Citation indicator over the full resolved corpus.
    records = citations.compute_nlcs(
        (a.id, panel_by_id[a.id].value, a.year, a.citations)
        for a in articles
        if a.id in panel_by_id
    )
    reporting.write_csv(
        out / "nlcs.csv",
        ["article_id", "panel", "year", "citations", "nlcs"],
        [
            {
                "article_id": r.article_id,
                "panel": r.panel,
                "year": r.year,
                "citations": r.citations,
                "nlcs": r.nlcs,
            }
            for r in records
        ],
        meta,
    )
    nlcs_by_id = {r.article_id: r.nlcs for r in records}

    series = _series_from_matrix(matrix_rows, nlcs_by_id)
    correlation_rows = analysis.correlation_matrix(
        series,
        analysis.DEFAULT_PAIRS,
        resamples=config.bootstrap.resamples,
        alpha=config.bootstrap.alpha,
        base_seed=config.bootstrap.seed,
    )
    reporting.write_csv(
        out / "correlations.csv",
        ["family_x", "family_y", "panel", "n", "rho", "ci_low", "ci_high",
         "resamples", "seed", "note"],
        [
            {
                "family_x": row.pair[0],
                "family_y": row.pair[1],
                "panel": row.panel,
                "n": row.n,
                "rho": row.rho,
                "ci_low": row.ci_low,
                "ci_high": row.ci_high,
                "resamples": row.resamples,
                "seed": row.seed,
                "note": row.note,
            }
            for row in correlation_rows
        ],
        meta,
    )

    # Indicator differences over articles complete in both regimes.
    quality = {
        article_id: value
        for panel in series.values()
        for article_id, value in panel.get("quality", {}).items()
    }
    value_scores = {
        article_id: value
        for panel in series.values()
        for article_id, value in panel.get("value_country", {}).items()
    }
    diffs, excluded = analysis.indicator_difference(quality, value_scores)
    panel_of = {a.id: panel_by_id[a.id].value for a in articles if a.id in panel_by_id}
    reporting.write_csv(
        out / "indicator_diff.csv",
        ["article_id", "panel", "quality_combined", "value_country_combined", "diff"],
        [
            {
                "article_id": d.article_id,
                "panel": panel_of.get(d.article_id, ""),
                "quality_combined": d.quality,
                "value_country_combined": d.value,
                "diff": d.diff,
            }
            for d in diffs
        ],
        dict(meta, excluded_incomplete=str(excluded)),
    )

    # Top/bottom mention audit per panel.
    articles_by_id = {a.id: a for a in articles}
    audit_rows = []
    mention_counts: list[tuple[str, str, int, int]] = []
    diff_by_id = {d.article_id: d.diff for d in diffs}
    for panel in sorted(series):
        panel_diffs = [d for d in diffs if panel_of.get(d.article_id) == panel]
        if not panel_diffs:
            continue
        selection = analysis.top_bottom(panel_diffs, config.top_bottom_k)
        if selection.shrunk:
            _log(
                f"panel {panel}: top/bottom k reduced to {selection.k} "
                f"for {len(panel_diffs)} articles"
            )
        for group, ids in (("top", selection.top), ("bottom", selection.bottom)):
            audit = analysis.audit_mentions(group, ids, articles_by_id, profile)
            mention_counts.append((panel, group, audit.k, audit.mention_count))
            for article_id, flag in audit.flags:
                audit_rows.append(
                    {
                        "panel": panel,
                        "group": group,
                        "k": audit.k,
                        "article_id": article_id,
                        "diff": diff_by_id[article_id],
                        "mentions_country": flag,
                    }
                )
    reporting.write_csv(
        out / "mention_audit.csv",
        ["panel", "group", "k", "article_id", "diff", "mentions_country"],
        audit_rows,
        meta,
    )

    # Word association worksheets over the pooled median split of the
    # indicator difference; terms are tested in both directions.
    term_rows: list[dict[str, object]] = []
    context_rows: list[dict[str, object]] = []
    wata_note = ""
    docs = {
        d.article_id: f"{articles_by_id[d.article_id].title}\n"
        f"{articles_by_id[d.article_id].abstract}"
        for d in diffs
    }
    if len(diffs) >= 2:
        try:
            split = wata.split_by_median(diff_by_id)
        except ValueError as exc:
            wata_note = str(exc)
        else:
            high_docs = {i: docs[i] for i in split.high}
            low_docs = {i: docs[i] for i in split.low}
            directions = (
                ("quality_leaning", high_docs, low_docs),
                ("value_leaning", low_docs, high_docs),
            )
            for group, group_docs, other_docs in directions:
                stats_list = wata.enriched_terms(
                    group_docs,
                    other_docs,
                    alpha=config.wata.alpha,
                    min_docs=config.wata.min_docs,
                    stop_words=config.wata.stop_words or None,
                )
                for stat in stats_list:
                    term_rows.append(
                        {
                            "group": group,
                            "term": stat.term,
                            "docs_high": stat.docs_high,
                            "docs_low": stat.docs_low,
                            "n_high": stat.n_high,
                            "n_low": stat.n_low,
                            "chi2": stat.chi2,
                            "p": stat.p,
                            "selected": stat.selected,
                        }
                    )
                for stat in stats_list:
                    if not stat.selected:
                        continue
                    term_seed = analysis.derive_seed(
                        config.bootstrap.seed, group, "context", stat.term
                    )
                    for article_id, snippet in wata.sample_contexts(
                        stat.term,
                        group_docs,
                        n=config.wata.contexts_per_term,
                        seed=term_seed,
                    ):
                        context_rows.append(
                            {
                                "group": group,
                                "term": stat.term,
                                "article_id": article_id,
                                "snippet": snippet,
                            }
                        )
    else:
        wata_note = "fewer than 2 articles with complete scores"
    if wata_note:
        _log(f"word association analysis skipped: {wata_note}")
    wata_meta = dict(meta)
    if wata_note:
        wata_meta["note"] = wata_note
    reporting.write_csv(
        out / "wata_terms.csv",
        ["group", "term", "docs_high", "docs_low", "n_high", "n_low", "chi2", "p", "selected"],
        term_rows,
        wata_meta,
    )
    reporting.write_csv(
        out / "wata_contexts.csv",
        ["group", "term", "article_id", "snippet"],
        context_rows,
        wata_meta,
    )

    # Summary document.
    panel_counts: dict[str, int] = {}
    for article in articles:
        if article.id in panel_by_id:
            panel = panel_by_id[article.id].value
            panel_counts[panel] = panel_counts.get(panel, 0) + 1
    mean_scores: dict[str, dict[str, dict[str, float | None]]] = {}
    for panel, families in series.items():
        mean_scores[panel] = {}
        for family in ("quality", "quality_country", "value_country"):
            values = {
                "combined": families.get(family, {}),
                "std": families.get(f"{family}_std", {}),
                "prob": families.get(f"{family}_prob", {}),
            }
            mean_scores[panel][family] = {
                key: (sum(cells.values()) / len(cells) if cells else None)
                for key, cells in values.items()
            }
    mention_rates = {}
    by_panel: dict[str, list[Article]] = {}
    for article in articles:
        if article.id in panel_by_id:
            by_panel.setdefault(panel_by_id[article.id].value, []).append(article)
    for panel, panel_articles in sorted(by_panel.items()):
        mention_rates[panel] = analysis.mention_rate(panel_articles, profile)
    reporting.write_summary(
        out / "summary.md",
        country=profile.name,
        panel_counts=panel_counts,
        mean_scores=mean_scores,
        mention_rates=mention_rates,
        correlation_rows=correlation_rows,
        mention_counts=mention_counts,
        meta=meta,
    )
    _log(f"wrote {', '.join(ANALYSIS_FILES)} to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="natscore",
        description="Score journal articles for research quality and national "
        "value, normalize citations, and compare the indicators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="project config YAML")
        p.add_argument(
            "--resume",
            action="store_true",
            help="take over a stale lock left by an interrupted run",
        )

    p_ingest = sub.add_parser("ingest", help="parse, filter, and panel-assign the corpus")
    common(p_ingest)

    p_score = sub.add_parser("score", help="run the scoring batch (live or mock)")
    common(p_score)
    p_score.add_argument(
        "--mock",
        type=int,
        metavar="SEED",
        default=None,
        help="use the deterministic mock provider with this seed",
    )
    p_score.add_argument("--regimes", help="comma-separated regime subset")
    p_score.add_argument("--variants", help="comma-separated variant subset")

    p_analyze = sub.add_parser("analyze", help="emit indicator and report files")
    common(p_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        with ProjectLock(config.output_dir, args.resume):
            if args.command == "ingest":
                return cmd_ingest(config)
            if args.command == "score":
                return cmd_score(
                    config,
                    args.mock,
                    _parse_regimes(args.regimes),
                    _parse_variants(args.variants),
                )
            return cmd_analyze(config)
    except (ConfigError, CorpusSchemaError, EmptyCorpusError, ProviderAuthError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
