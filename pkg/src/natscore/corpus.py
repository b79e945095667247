"""Bibliometric CSV ingestion, inclusion filtering, and panel assignment.

Reads header-bearing CSV exports (Scopus-style column names by default,
remappable), applies the year / document-type / language / abstract-length
inclusion rules, and assigns each article to one of four broad panels from
the 2-digit prefixes of its 4-digit subject codes.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping


class Panel(str, Enum):
    A = "A"  # health and life sciences
    B = "B"  # physical sciences, maths and engineering
    C = "C"  # social sciences
    D = "D"  # arts and humanities

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


# 2-digit subject-code prefixes per panel; prefix 10 (multidisciplinary)
# contributes no candidate.
PANEL_PREFIXES: dict[Panel, frozenset[int]] = {
    Panel.A: frozenset({11, 13, 24, 27, 28, 29, 30, 32, 34, 35, 36}),
    Panel.B: frozenset({15, 16, 17, 18, 19, 21, 22, 23, 25, 26, 31}),
    Panel.C: frozenset({14, 20, 33}),
    Panel.D: frozenset({12}),
}
MULTIDISCIPLINARY_PREFIX = 10

DEFAULT_COLUMNS: dict[str, str] = {
    "eid": "EID",
    "doi": "DOI",
    "title": "Title",
    "abstract": "Abstract",
    "year": "Year",
    "citations": "Cited by",
    "language": "Language of Original Document",
    "doc_type": "Document Type",
    "source_title": "Source title",
    "asjc": "ASJC",
}
# Columns that must be present in the header; eid/doi are checked separately
# because either one can supply the identifier.
MANDATORY_FIELDS = ("title", "abstract", "year", "citations", "asjc")

_WHITESPACE = re.compile(r"\s+")


class CorpusSchemaError(ValueError):
    """The CSV header is missing a mandatory column."""


class EmptyCorpusError(ValueError):
    """Filtering removed every article."""


class UnresolvedPanelError(ValueError):
    """Ambiguous panel assignments lack overrides."""

    def __init__(self, article_ids: Iterable[str]):
        self.article_ids = sorted(article_ids)
        super().__init__(
            "unresolved panel assignment for: " + ", ".join(self.article_ids)
        )


@dataclass(frozen=True)
class Article:
    id: str
    title: str
    abstract: str
    year: int
    citations: int
    asjc_codes: frozenset[int]
    language: str = ""
    doc_type: str = ""
    source_title: str = ""


@dataclass(frozen=True)
class RowDiagnostic:
    """One rejected data row: 1-based row number, id if known, and reason."""

    row: int
    id: str
    reason: str


@dataclass(frozen=True)
class FilterConfig:
    year_min: int
    year_max: int
    allowed_doc_types: frozenset[str] = frozenset()
    allowed_languages: frozenset[str] = frozenset()
    abstract_decile_cut: float = 0.10

    def __post_init__(self) -> None:
        if self.year_min > self.year_max:
            raise ValueError(f"year_min {self.year_min} > year_max {self.year_max}")
        if not 0.0 <= self.abstract_decile_cut < 1.0:
            raise ValueError(
                f"abstract_decile_cut must be in [0, 1), got {self.abstract_decile_cut}"
            )


@dataclass(frozen=True)
class PanelAssignment:
    """Resolved carries a panel; ambiguous carries >= 2 candidates; an empty
    candidate set means no prefix mapped anywhere (unclassifiable)."""

    article_id: str
    panel: Panel | None = None
    candidates: tuple[Panel, ...] = ()

    @property
    def resolved(self) -> bool:
        return self.panel is not None

    @property
    def unclassifiable(self) -> bool:
        return self.panel is None and not self.candidates


def abstract_length(abstract: str) -> int:
    """Character count after collapsing whitespace runs; the length metric
    used by the shortest-abstract cut."""
    return len(_WHITESPACE.sub(" ", abstract.strip()))


def parse_corpus_csv(
    stream: IO[bytes] | bytes,
    columns: Mapping[str, str] | None = None,
    asjc_names: Mapping[str, int] | None = None,
) -> tuple[list[Article], list[RowDiagnostic]]:
    """Parse a bibliographic CSV export into articles plus row diagnostics.

    Every data row becomes exactly one article or one diagnostic; nothing is
    dropped silently. A missing mandatory header raises CorpusSchemaError.
    Subject codes are 4-digit integers, or names resolved through the
    asjc_names mapping; an empty citation cell parses as 0 because exports
    leave uncited articles blank.
    """
    colmap = dict(DEFAULT_COLUMNS)
    if columns:
        colmap.update(columns)
    names = {key.strip().lower(): code for key, code in (asjc_names or {}).items()}

    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    text = io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")
    reader = csv.DictReader(text)
    header = reader.fieldnames
    if header is None:
        raise CorpusSchemaError("input CSV has no header row")
    for logical in MANDATORY_FIELDS:
        if colmap[logical] not in header:
            raise CorpusSchemaError(f"missing mandatory column {colmap[logical]!r}")
    if colmap["eid"] not in header and colmap["doi"] not in header:
        raise CorpusSchemaError(
            f"missing identifier column: need {colmap['eid']!r} or {colmap['doi']!r}"
        )

    def cell(row: dict, logical: str) -> str:
        return (row.get(colmap[logical]) or "").strip()

    articles: list[Article] = []
    diagnostics: list[RowDiagnostic] = []
    seen_ids: set[str] = set()
    for row_number, row in enumerate(reader, start=1):
        article_id = cell(row, "eid") or cell(row, "doi")
        if not article_id:
            diagnostics.append(RowDiagnostic(row_number, "", "missing identifier (no EID or DOI)"))
            continue
        if article_id in seen_ids:
            diagnostics.append(RowDiagnostic(row_number, article_id, "duplicate identifier"))
            continue

        year_text = cell(row, "year")
        try:
            year = int(year_text)
        except ValueError:
            diagnostics.append(
                RowDiagnostic(row_number, article_id, f"unparseable year {year_text!r}")
            )
            continue

        citations_text = cell(row, "citations")
        if citations_text == "":
            citations = 0
        else:
            try:
                citations = int(citations_text)
            except ValueError:
                diagnostics.append(
                    RowDiagnostic(
                        row_number, article_id, f"unparseable citation count {citations_text!r}"
                    )
                )
                continue
            if citations < 0:
                diagnostics.append(
                    RowDiagnostic(row_number, article_id, f"negative citation count {citations}")
                )
                continue

        codes: set[int] = set()
        bad_token = None
        for token in cell(row, "asjc").split(";"):
            token = token.strip()
            if not token:
                continue
            if token.isdigit() and len(token) == 4:
                codes.add(int(token))
            elif token.lower() in names:
                codes.add(names[token.lower()])
            else:
                bad_token = token
                break
        if bad_token is not None:
            diagnostics.append(
                RowDiagnostic(row_number, article_id, f"unknown subject code {bad_token!r}")
            )
            continue
        if not codes:
            diagnostics.append(RowDiagnostic(row_number, article_id, "no subject codes"))
            continue

        seen_ids.add(article_id)
        articles.append(
            Article(
                id=article_id,
                title=cell(row, "title"),
                abstract=cell(row, "abstract"),
                year=year,
                citations=citations,
                asjc_codes=frozenset(codes),
                language=cell(row, "language"),
                doc_type=cell(row, "doc_type"),
                source_title=cell(row, "source_title"),
            )
        )
    text.detach()
    return articles, diagnostics


def filter_corpus(
    articles: list[Article], cfg: FilterConfig
) -> tuple[list[Article], dict[str, int]]:
    """Apply the inclusion rules; returns survivors plus per-rule removal counts.

    Rules, in order: publication year range, allowed document types, allowed
    languages (empty allow-sets disable a rule), non-empty abstract, and the
    shortest-abstract cut. The cut removes exactly floor(cut * n) of the n
    survivors of the other rules, taking the first k under a stable sort by
    (length, id); ties at the boundary length are retained.
    """
    if not articles:
        raise ValueError("filter_corpus requires a non-empty article list")
    removals = {
        "year": 0,
        "doc_type": 0,
        "language": 0,
        "empty_abstract": 0,
        "short_abstract": 0,
    }
    doc_types = {t.lower() for t in cfg.allowed_doc_types}
    languages = {t.lower() for t in cfg.allowed_languages}
    survivors: list[Article] = []
    for article in articles:
        if not cfg.year_min <= article.year <= cfg.year_max:
            removals["year"] += 1
        elif doc_types and article.doc_type.lower() not in doc_types:
            removals["doc_type"] += 1
        elif languages and article.language.lower() not in languages:
            removals["language"] += 1
        elif not article.abstract.strip():
            removals["empty_abstract"] += 1
        else:
            survivors.append(article)

    cut_count = math.floor(cfg.abstract_decile_cut * len(survivors))
    if cut_count:
        ordered = sorted(survivors, key=lambda a: (abstract_length(a.abstract), a.id))
        removed_ids = {a.id for a in ordered[:cut_count]}
        removals["short_abstract"] = cut_count
        survivors = [a for a in survivors if a.id not in removed_ids]
    if not survivors:
        raise EmptyCorpusError("all articles were removed by the inclusion filters")
    return survivors, removals


def assign_panel(article: Article) -> PanelAssignment:
    """Map subject-code prefixes to a panel; multiple candidate panels yield
    an ambiguous assignment that must be resolved manually."""
    if not article.asjc_codes:
        raise ValueError(f"article {article.id} has no subject codes")
    prefixes = {code // 100 for code in article.asjc_codes}
    candidates = sorted(
        panel for panel, owned in PANEL_PREFIXES.items() if prefixes & owned
    )
    if len(candidates) == 1:
        return PanelAssignment(article_id=article.id, panel=candidates[0])
    return PanelAssignment(article_id=article.id, candidates=tuple(candidates))


def resolve_panels(
    assignments: Iterable[PanelAssignment], overrides: Mapping[str, Panel]
) -> dict[str, Panel]:
    """Resolved assignments pass through; ambiguous ones take their override.

    Raises UnresolvedPanelError listing every ambiguous id that has no
    override. Overrides are never auto-guessed.
    """
    resolved: dict[str, Panel] = {}
    missing: list[str] = []
    for assignment in assignments:
        if assignment.resolved:
            resolved[assignment.article_id] = assignment.panel
        elif assignment.article_id in overrides:
            resolved[assignment.article_id] = overrides[assignment.article_id]
        else:
            missing.append(assignment.article_id)
    if missing:
        raise UnresolvedPanelError(missing)
    return resolved
