"""Example and Dataset containers.

Datasets are treated as immutable after construction: operations that change
anything (encoding, masking, fold splitting) return new objects.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from tdsl.errors import ProtocolError, StateError

FAKE = 0
TRUE = 1
CLASS_NAMES = ("fake", "true")
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class Example:
    """One statement or tweet, with whatever stages of processing it has seen."""

    id: str
    text: str
    tokens: tuple[str, ...] = ()
    token_ids: Optional[tuple[int, ...]] = None
    label: Optional[int] = None
    event: Optional[str] = None
    raw_label: Optional[str] = None

    def with_tokens(self, tokens: Sequence[str]) -> "Example":
        return replace(self, tokens=tuple(tokens))

    def with_token_ids(self, token_ids: Sequence[int]) -> "Example":
        return replace(self, token_ids=tuple(int(i) for i in token_ids))

    def with_label(self, label: Optional[int]) -> "Example":
        return replace(self, label=label)


@dataclass
class Dataset:
    """An ordered collection of examples plus the labeled subset."""

    examples: tuple[Example, ...]
    split: str = "train"
    class_count: int = 2
    vocab_size: Optional[int] = None
    labeled_ids: frozenset[str] = field(default=None)  # type: ignore[assignment]
    _tensor_cache: Optional[tuple[np.ndarray, np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.examples = tuple(self.examples)
        if self.split not in SPLITS:
            raise ProtocolError(f"unknown split '{self.split}', expected one of {SPLITS}")
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise ProtocolError(f"duplicate example id '{ex.id}'")
            seen.add(ex.id)
        if self.labeled_ids is None:
            self.labeled_ids = frozenset(ex.id for ex in self.examples if ex.label is not None)
        else:
            self.labeled_ids = frozenset(self.labeled_ids)
            by_id = {ex.id: ex for ex in self.examples}
            for eid in self.labeled_ids:
                if eid not in by_id or by_id[eid].label is None:
                    raise ProtocolError(f"labeled id '{eid}' has no labeled example")

    @property
    def n_total(self) -> int:
        return len(self.examples)

    @property
    def n_labeled(self) -> int:
        return len(self.labeled_ids)

    def class_counts(self) -> Counter:
        """Visible-label class histogram."""
        return Counter(ex.label for ex in self.examples if ex.label is not None)

    def event_counts(self) -> dict[str, Counter]:
        """Per-event visible-label class histograms, in first-appearance order."""
        out: dict[str, Counter] = {}
        for ex in self.examples:
            if ex.event is None:
                continue
            bucket = out.setdefault(ex.event, Counter())
            if ex.label is not None:
                bucket[ex.label] += 1
        return out

    def events(self) -> list[str]:
        """Distinct event tags in first-appearance order."""
        seen: dict[str, None] = {}
        for ex in self.examples:
            if ex.event is not None:
                seen.setdefault(ex.event)
        return list(seen)

    def tensors(self) -> tuple[np.ndarray, np.ndarray]:
        """(token id matrix [N, max_len], label vector [N]); hidden labels are -1.

        Requires the dataset to be encoded. The result is cached.
        """
        if self._tensor_cache is None:
            if any(ex.token_ids is None for ex in self.examples):
                raise StateError("dataset is not encoded; call encode_dataset first")
            if not self.examples:
                self._tensor_cache = (
                    np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64)
                )
                return self._tensor_cache
            ids = np.array([ex.token_ids for ex in self.examples], dtype=np.int64)
            labels = np.array(
                [ex.label if ex.label is not None else -1 for ex in self.examples],
                dtype=np.int64,
            )
            self._tensor_cache = (ids, labels)
        return self._tensor_cache

    def subset(self, indices: Iterable[int], split: Optional[str] = None) -> "Dataset":
        picked = tuple(self.examples[i] for i in indices)
        return Dataset(
            examples=picked,
            split=split if split is not None else self.split,
            class_count=self.class_count,
            vocab_size=self.vocab_size,
        )
