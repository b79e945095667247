"""Log-transformed citation scores normalized within panel-year strata.

Each citation count c becomes ln(1+c) and is divided by the mean ln(1+c)
of its (panel, year) stratum, so every non-degenerate stratum has mean 1
and values are comparable across panels and years.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class NlcsRecord:
    article_id: str
    panel: str
    year: int
    citations: int
    log_cites: float
    nlcs: float


def log_citation(citations: int) -> float:
    """ln(1 + c); the offset makes zero-cited articles well defined."""
    if citations < 0:
        raise ValueError(f"citation count must be non-negative, got {citations}")
    return math.log1p(citations)


def compute_nlcs(
    articles: Iterable[tuple[str, str, int, int]],
) -> list[NlcsRecord]:
    """Normalized log citation scores for (article_id, panel, year, citations).

    Within each (panel, year) stratum every ln(1+c) is divided by the
    stratum mean. A stratum whose mean is 0 (all counts zero, including
    the singleton zero case) gets nlcs = 1 for every member: each article
    sits exactly at its stratum mean.
    """
    rows = [(aid, panel, year, cites, log_citation(cites)) for aid, panel, year, cites in articles]
    totals: dict[tuple[str, int], list[float]] = defaultdict(lambda: [0.0, 0.0])
    for _, panel, year, _, log_c in rows:
        bucket = totals[(panel, year)]
        bucket[0] += log_c
        bucket[1] += 1.0
    means = {key: total / count for key, (total, count) in totals.items()}
    records = []
    for aid, panel, year, cites, log_c in rows:
        mean = means[(panel, year)]
        nlcs = log_c / mean if mean > 0.0 else 1.0
        records.append(
            NlcsRecord(
                article_id=aid,
                panel=panel,
                year=year,
                citations=cites,
                log_cites=log_c,
                nlcs=nlcs,
            )
        )
    return records
