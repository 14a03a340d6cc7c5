"""File ingestion for the two supported record layouts.

LIAR files are TSV with the six-grade label in column 2 and the statement in
column 3 (1-indexed); remaining metadata columns are ignored. The normalized
per-tweet layout carries event, tweet_id, text, and a binary label, as either
TSV or JSON lines.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from tdsl.corpus.records import CLASS_NAMES, FAKE, TRUE, Dataset, Example
from tdsl.corpus.text import tokenize
from tdsl.errors import EmptyDatasetError, LabelError, ParseError

_FAKE_GRADES = frozenset({"false", "half-true", "pants-fire", "barely-true", "mostly-true"})


def binarize_liar_label(six_grade: str) -> int:
    """Collapse the six-grade scale: "true" is True, the other five are Fake."""
    lowered = six_grade.strip().lower()
    if lowered == "true":
        return TRUE
    if lowered in _FAKE_GRADES:
        return FAKE
    raise LabelError(f"unknown six-grade label {six_grade!r}")


def parse_liar(path: Union[str, Path], split: str = "train") -> Dataset:
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ParseError(
                    f"{path.name} line {lineno}: expected at least 3 tab-separated "
                    f"columns, got {len(fields)}"
                )
            raw_label, text = fields[1], fields[2]
            try:
                label = binarize_liar_label(raw_label)
            except LabelError as err:
                raise ParseError(f"{path.name} line {lineno}: {err}") from err
            examples.append(
                Example(
                    id=fields[0] or f"line{lineno}",
                    text=text,
                    tokens=tuple(tokenize(text)),
                    label=label,
                    raw_label=raw_label,
                )
            )
    if not examples:
        raise EmptyDatasetError(f"{path} contains no records")
    return Dataset(examples=tuple(examples), split=split)


_PHEME_LABELS = {"fake": FAKE, "true": TRUE}


def _pheme_example(event: str, tweet_id: str, text: str, label: str,
                   source: str, lineno: int) -> Example:
    if not event:
        raise ParseError(f"{source} line {lineno}: missing event tag")
    key = label.strip().lower()
    if key not in _PHEME_LABELS:
        raise ParseError(f"{source} line {lineno}: unknown label {label!r}")
    return Example(
        id=tweet_id,
        text=text,
        tokens=tuple(tokenize(text)),
        label=_PHEME_LABELS[key],
        event=event,
        raw_label=label,
    )


def parse_pheme(path: Union[str, Path], split: str = "train") -> Dataset:
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if line.lstrip().startswith("{"):
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as err:
                    raise ParseError(f"{path.name} line {lineno}: bad JSON: {err}") from err
                missing = {"event", "tweet_id", "text", "label"} - record.keys()
                if missing:
                    raise ParseError(
                        f"{path.name} line {lineno}: missing fields {sorted(missing)}"
                    )
                examples.append(
                    _pheme_example(
                        str(record["event"]), str(record["tweet_id"]),
                        str(record["text"]), str(record["label"]),
                        path.name, lineno,
                    )
                )
            else:
                fields = line.split("\t")
                if len(fields) != 4:
                    raise ParseError(
                        f"{path.name} line {lineno}: expected 4 tab-separated "
                        f"columns (event, tweet_id, text, label), got {len(fields)}"
                    )
                examples.append(_pheme_example(*fields, path.name, lineno))
    if not examples:
        raise EmptyDatasetError(f"{path} contains no records")
    return Dataset(examples=tuple(examples), split=split)


def write_pheme(path: Union[str, Path], dataset: Dataset, fmt: str = "tsv") -> None:
    """Write a dataset back out in the normalized per-tweet layout.

    Every example needs an event tag and a visible label; tabs and newlines
    inside the text would corrupt the TSV layout, so they are rejected.
    """
    if fmt not in ("tsv", "jsonl"):
        raise ParseError(f"unknown format {fmt!r}")
    path = Path(path)
    lines = []
    for ex in dataset.examples:
        if ex.event is None:
            raise ParseError(f"example '{ex.id}' has no event tag")
        if ex.label is None:
            raise ParseError(f"example '{ex.id}' has no visible label")
        label = CLASS_NAMES[ex.label]
        if fmt == "jsonl":
            lines.append(json.dumps(
                {"event": ex.event, "tweet_id": ex.id, "text": ex.text, "label": label},
                ensure_ascii=False, sort_keys=True,
            ))
        else:
            if "\t" in ex.text or "\n" in ex.text:
                raise ParseError(f"example '{ex.id}' text contains tab/newline; use jsonl")
            lines.append(f"{ex.event}\t{ex.id}\t{ex.text}\t{label}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
