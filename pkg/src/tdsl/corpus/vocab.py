"""Vocabulary construction and fixed-length id encoding."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

from tdsl.corpus.records import Dataset, Example
from tdsl.errors import ConfigError, EmptyDatasetError, ProtocolError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]
    min_count: int

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocab(datasets: Union[Dataset, Iterable[Dataset]], min_count: int = 1) -> Vocabulary:
    """Rank training tokens by descending frequency (ties lexicographic);
    ids start at 2 behind the pad and unknown sentinels."""
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    counts: Counter = Counter()
    for ds in datasets:
        if ds.split != "train":
            raise ProtocolError(
                f"vocabulary must be built from training data only, got split '{ds.split}'"
            )
        for ex in ds.examples:
            counts.update(ex.tokens)
    if not counts:
        raise EmptyDatasetError("no tokens to build a vocabulary from")
    kept = sorted(
        (tok for tok, n in counts.items() if n >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    id_to_token = (PAD_TOKEN, UNK_TOKEN, *kept)
    token_to_id = {tok: i for i, tok in enumerate(id_to_token) if i >= 2}
    return Vocabulary(token_to_id=token_to_id, id_to_token=id_to_token, min_count=min_count)


def encode(example: Example, vocab: Vocabulary, max_len: int) -> Example:
    """Map the first max_len tokens to ids, right-padding to exactly max_len."""
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    ids = [vocab.id_for(tok) for tok in example.tokens[:max_len]]
    ids.extend([PAD_ID] * (max_len - len(ids)))
    return example.with_token_ids(ids)


def encode_dataset(dataset: Dataset, vocab: Vocabulary, max_len: int) -> Dataset:
    encoded = tuple(encode(ex, vocab, max_len) for ex in dataset.examples)
    return Dataset(
        examples=encoded,
        split=dataset.split,
        class_count=dataset.class_count,
        vocab_size=vocab.size,
        labeled_ids=dataset.labeled_ids,
    )
