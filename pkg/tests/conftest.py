"""Shared fixtures: synthetic corpora and ready-to-run project directories."""

from __future__ import annotations

import sys
import textwrap
from pathlib import Path

import pytest

from natscore.corpus import Article


def pytest_runtest_logreport(report):
    """One PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    outcome = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"[acceptance] {name}: {outcome}\n")

HEADER = (
    "EID,DOI,Title,Abstract,Year,Cited by,"
    "Language of Original Document,Document Type,Source title,ASJC"
)

# One 4-digit code per panel, plus the multidisciplinary prefix.
PANEL_CODE = {"A": "2713", "B": "2200", "C": "3300", "D": "1200"}

WORD_POOL = [
    "island", "coastal", "survey", "energy", "harvest", "species", "model",
    "policy", "teacher", "reef", "sugar", "textile", "tourism", "clinic",
    "water", "soil", "genome", "market", "village", "lagoon", "crop",
    "mangrove", "turbine", "fishery", "museum", "archive", "dialect",
]


def csv_row(
    eid: str = "",
    doi: str = "",
    title: str = "T",
    abstract: str = "A",
    year: int = 2018,
    cited_by: str = "0",
    language: str = "English",
    doc_type: str = "Article",
    source: str = "J",
    asjc: str = "2713",
) -> str:
    def quote(cell: str) -> str:
        cell = str(cell)
        if any(ch in cell for ch in ',"\n'):
            return '"' + cell.replace('"', '""') + '"'
        return cell

    return ",".join(
        quote(c)
        for c in (eid, doi, title, abstract, year, cited_by, language, doc_type, source, asjc)
    )


def corpus_csv(rows: list[str]) -> bytes:
    return ("\n".join([HEADER, *rows]) + "\n").encode("utf-8")


def synthetic_abstract(index: int, words: int = 30) -> str:
    chosen = [WORD_POOL[(index + i * 7) % len(WORD_POOL)] for i in range(words)]
    return f"Study number {index} examines " + " ".join(chosen) + "."


def synthetic_article(index: int, panel: str = "A", year: int = 2018, citations: int = 0) -> Article:
    code = int(PANEL_CODE[panel])
    return Article(
        id=f"art{index:04d}",
        title=f"Synthetic investigation {index} of {WORD_POOL[index % len(WORD_POOL)]}",
        abstract=synthetic_abstract(index),
        year=year,
        citations=citations,
        asjc_codes=frozenset({code}),
        language="English",
        doc_type="Article",
        source_title="Synthetic Journal",
    )


def synthetic_corpus_rows(
    n: int, panels: str = "ABCD", year_range: tuple[int, int] = (2015, 2021)
) -> list[str]:
    rows = []
    for i in range(n):
        panel = panels[i % len(panels)]
        year = year_range[0] + i % (year_range[1] - year_range[0] + 1)
        rows.append(
            csv_row(
                eid=f"art{i:04d}",
                title=f"Synthetic investigation {i} of {WORD_POOL[i % len(WORD_POOL)]}",
                abstract=synthetic_abstract(i),
                year=year,
                cited_by=str((i * 13) % 37),
                asjc=PANEL_CODE[panel],
            )
        )
    return rows


PROFILE_YAML = textwrap.dedent(
    """\
    name: Mauritius
    mention_aliases: [Mauritius, Mauritian]
    sectors: [sugar cane, tourism, renewable energy, education]
    """
)


def write_project(
    tmp_path: Path,
    corpus_bytes: bytes,
    repetitions: int = 2,
    resamples: int = 200,
    seed: int = 42,
    abstract_decile_cut: float = 0.0,
    top_bottom_k: int = 50,
    extra: str = "",
) -> Path:
    (tmp_path / "corpus.csv").write_bytes(corpus_bytes)
    (tmp_path / "profile.yaml").write_text(PROFILE_YAML, encoding="utf-8")
    config = textwrap.dedent(
        f"""\
        corpus:
          csv: corpus.csv
        country_profile: profile.yaml
        output_dir: out
        filter:
          year_min: 2015
          year_max: 2021
          doc_types: [Article]
          languages: [English]
          abstract_decile_cut: {abstract_decile_cut}
        runs:
          repetitions: {repetitions}
          max_in_flight: 4
          max_retries: 2
          backoff_seconds: 0.01
        bootstrap:
          resamples: {resamples}
          alpha: 0.05
          seed: {seed}
        wata:
          alpha: 0.05
          min_docs: 5
          contexts_per_term: 10
        analysis:
          top_bottom_k: {top_bottom_k}
        """
    )
    (tmp_path / "config.yaml").write_text(config + extra, encoding="utf-8")
    return tmp_path / "config.yaml"


@pytest.fixture
def small_project(tmp_path: Path) -> Path:
    """12-article, 4-panel project with the mock-friendly defaults."""
    rows = synthetic_corpus_rows(12)
    return write_project(tmp_path, corpus_csv(rows))
