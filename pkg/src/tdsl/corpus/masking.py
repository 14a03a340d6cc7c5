"""Label masking: keep a seeded uniform subset of training labels visible,
hide the rest, leave every example in place."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from tdsl.corpus.records import Dataset
from tdsl.errors import ConfigError, ProtocolError


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def labeled_count(ratio: float, n_total: int) -> int:
    """M = max(1, round(ratio * N)), rounding halves up."""
    return max(1, _round_half_up(ratio * n_total))


def mask_labels(dataset: Dataset, ratio: float, seed: int, stratified: bool = False) -> Dataset:
    """Return a copy where only M = max(1, round(ratio*N)) labels stay visible.

    Sampling is uniform without replacement; the stratified variant samples
    the same fraction within each class instead. Only training splits may be
    masked.
    """
    if not 0.0 < ratio <= 1.0:
        raise ConfigError(f"labeled ratio must be in (0, 1], got {ratio}")
    if dataset.split != "train":
        raise ProtocolError(f"refusing to mask labels on split '{dataset.split}'")
    if any(ex.label is None for ex in dataset.examples):
        raise ProtocolError("dataset already has hidden labels; mask the original instead")

    n = dataset.n_total
    rng = np.random.default_rng(seed)
    if stratified:
        keep_set = set()
        by_class: dict[int, list[int]] = {}
        for idx, ex in enumerate(dataset.examples):
            by_class.setdefault(ex.label, []).append(idx)
        for label in sorted(by_class):
            members = by_class[label]
            m = min(len(members), labeled_count(ratio, len(members)))
            chosen = rng.choice(len(members), size=m, replace=False)
            keep_set.update(members[j] for j in chosen.tolist())
    else:
        m = labeled_count(ratio, n)
        keep_set = set(rng.choice(n, size=m, replace=False).tolist())

    examples = tuple(
        ex if idx in keep_set else ex.with_label(None)
        for idx, ex in enumerate(dataset.examples)
    )
    return Dataset(
        examples=examples,
        split=dataset.split,
        class_count=dataset.class_count,
        vocab_size=dataset.vocab_size,
    )


def save_mask_manifest(path: Union[str, Path], dataset: Dataset, ratio: float, seed: int) -> None:
    """Persist the visible-label id set so a masking is reusable and inspectable."""
    payload = {
        "ratio": ratio,
        "seed": seed,
        "n_total": dataset.n_total,
        "n_labeled": dataset.n_labeled,
        "labeled_ids": sorted(dataset.labeled_ids),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_mask_manifest(path: Union[str, Path]) -> frozenset[str]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return frozenset(payload["labeled_ids"])


def apply_mask_manifest(dataset: Dataset, labeled_ids: frozenset[str]) -> Dataset:
    """Reproduce a masking from a saved manifest."""
    if dataset.split != "train":
        raise ProtocolError(f"refusing to mask labels on split '{dataset.split}'")
    known = {ex.id for ex in dataset.examples}
    missing = labeled_ids - known
    if missing:
        raise ProtocolError(f"manifest ids not in dataset: {sorted(missing)[:3]}")
    examples = tuple(
        ex if ex.id in labeled_ids else ex.with_label(None) for ex in dataset.examples
    )
    return Dataset(
        examples=examples,
        split=dataset.split,
        class_count=dataset.class_count,
        vocab_size=dataset.vocab_size,
    )
