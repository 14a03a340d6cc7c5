"""Per-event TF-IDF word rankings.

Each tweet is a document within its event. For a token w in event e:

    tf(w, e)  = count of w across e / total tokens in e
    idf(w, e) = ln(number of documents in e / number containing w)

Unsmoothed idf: a token present in every document scores 0.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from tdsl.corpus.records import Dataset
from tdsl.errors import ConfigError, ProtocolError


@dataclass(frozen=True)
class TfidfReport:
    event: str
    ranked: tuple[tuple[str, float], ...]  # (token, score), scores non-increasing


def tfidf_top_words(dataset: Dataset, k: int = 50) -> list[TfidfReport]:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    groups: dict[str, list[tuple[str, ...]]] = {}
    for ex in dataset.examples:
        if ex.event is None:
            raise ProtocolError(f"example '{ex.id}' has no event tag")
        groups.setdefault(ex.event, []).append(ex.tokens)
    if not groups:
        raise ProtocolError("dataset has no events")

    reports = []
    for event, docs in groups.items():
        counts: Counter = Counter()
        doc_freq: Counter = Counter()
        for doc in docs:
            counts.update(doc)
            doc_freq.update(set(doc))
        total = sum(counts.values())
        if total == 0:
            warnings.warn(f"event '{event}' has no tokens; skipped", stacklevel=2)
            continue
        n_docs = len(docs)
        scores = {
            tok: (n / total) * math.log(n_docs / doc_freq[tok])
            for tok, n in counts.items()
        }
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        reports.append(TfidfReport(event=event, ranked=tuple(ranked)))
    return reports


def write_tfidf_csv(path: Union[str, Path], reports: list[TfidfReport]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["event", "rank", "token", "score"])
        for report in reports:
            for rank, (token, score) in enumerate(report.ranked, start=1):
                writer.writerow([report.event, rank, token, f"{score:.10g}"])
