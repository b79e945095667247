"""CSV and Markdown emission with provenance headers.

Every output file starts with '# key=value' comment lines carrying the
configuration hash, seeds, and template versions, so any report can be
traced back to the exact inputs and prompts that produced it.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .analysis import CorrelationRow


def fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path: Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, object]],
    meta: Mapping[str, str],
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for key in meta:
            handle.write(f"# {key}={meta[key]}\n")
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({name: fmt(row.get(name)) for name in fieldnames})


def read_csv(path: Path) -> tuple[list[dict[str, str]], dict[str, str]]:
    """Read a CSV written by write_csv; returns (rows, meta)."""
    meta: dict[str, str] = {}
    with path.open("r", encoding="utf-8", newline="") as handle:
        position = handle.tell()
        line = handle.readline()
        while line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            position = handle.tell()
            line = handle.readline()
        handle.seek(position)
        rows = list(csv.DictReader(handle))
    return rows, meta


def parse_optional_float(cell: str) -> float | None:
    return float(cell) if cell not in ("", None) else None


def _markdown_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(headers) + " |",
        "| " + " | ".join("---" for _ in headers) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def _round(value: float | None, digits: int = 3) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def correlation_block(rows: Sequence[CorrelationRow], pairs: Sequence[tuple[str, str]]) -> str:
    wanted = [r for r in rows if r.pair in pairs]
    body = []
    for row in wanted:
        if row.rho is None:
            body.append(
                [f"{row.pair[0]} vs {row.pair[1]}", row.panel, str(row.n), "", "", row.note]
            )
        else:
            body.append(
                [
                    f"{row.pair[0]} vs {row.pair[1]}",
                    row.panel,
                    str(row.n),
                    _round(row.rho),
                    f"[{_round(row.ci_low)}, {_round(row.ci_high)}]",
                    "",
                ]
            )
    return _markdown_table(["pair", "panel", "n", "rho", "95% CI", "note"], body)


def write_summary(
    path: Path,
    country: str,
    panel_counts: Mapping[str, int],
    mean_scores: Mapping[str, Mapping[str, Mapping[str, float | None]]],
    mention_rates: Mapping[str, float],
    correlation_rows: Sequence[CorrelationRow],
    mention_counts: Sequence[tuple[str, str, int, int]],
    meta: Mapping[str, str],
) -> None:
    """Plain-Markdown report: mean-score table, mention rates, and the three
    correlation blocks (variant agreement, score families, citation)."""
    panels = sorted(panel_counts)
    lines: list[str] = []
    for key, value in meta.items():
        lines.append(f"<!-- {key}={value} -->")
    lines.append(f"# Scoring summary: {country}")
    lines.append("")
    lines.append("## Mean scores by panel")
    lines.append("")
    header = ["score (variant)"] + [f"{p} (n={panel_counts[p]})" for p in panels]
    body = []
    for family in ("quality", "quality_country", "value_country"):
        for variant in ("std", "prob", "combined"):
            row = [f"{family} ({variant})"]
            for panel in panels:
                row.append(_round(mean_scores.get(panel, {}).get(family, {}).get(variant), 2))
            body.append(row)
    lines.append(_markdown_table(header, body))
    lines.append("")
    lines.append(f"## Articles mentioning {country} (title or abstract)")
    lines.append("")
    lines.append(
        _markdown_table(
            ["panel", "mention rate"],
            [[p, f"{mention_rates[p] * 100.0:.0f}%"] for p in sorted(mention_rates)],
        )
    )
    lines.append("")
    lines.append("## Agreement between standard and probability scoring")
    lines.append("")
    variant_pairs = [p for p in (("quality_std", "quality_prob"),
                                 ("quality_country_std", "quality_country_prob"),
                                 ("value_country_std", "value_country_prob"))]
    lines.append(correlation_block(correlation_rows, variant_pairs))
    lines.append("")
    lines.append("## Correlations between score families")
    lines.append("")
    family_pairs = [("quality", "quality_country"), ("quality", "value_country"),
                    ("quality_country", "value_country")]
    lines.append(correlation_block(correlation_rows, family_pairs))
    lines.append("")
    lines.append("## Correlations with the citation indicator")
    lines.append("")
    citation_pairs = [("quality", "nlcs"), ("quality_country", "nlcs"),
                      ("value_country", "nlcs")]
    lines.append(correlation_block(correlation_rows, citation_pairs))
    lines.append("")
    lines.append(f"## {country} mentions in indicator-difference extremes")
    lines.append("")
    lines.append(
        _markdown_table(
            ["panel", "group", "k", "mentions"],
            [[panel, group, str(k), str(count)] for panel, group, k, count in mention_counts],
        )
    )
    lines.append("")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines), encoding="utf-8")
