"""Leave-one-event-out fold construction."""

from __future__ import annotations

from tdsl.corpus.records import Dataset
from tdsl.errors import ProtocolError


def loeo_folds(dataset: Dataset) -> list[tuple[Dataset, Dataset]]:
    """One (train, test) pair per event, in first-appearance order.

    Fold i trains on every event except event i and tests on event i; the two
    sides partition the dataset.
    """
    for ex in dataset.examples:
        if ex.event is None:
            raise ProtocolError(f"example '{ex.id}' has no event tag")
    events = dataset.events()
    if len(events) < 2:
        raise ProtocolError(f"leave-one-event-out needs >= 2 events, got {len(events)}")
    folds = []
    for event in events:
        train_idx = [i for i, ex in enumerate(dataset.examples) if ex.event != event]
        test_idx = [i for i, ex in enumerate(dataset.examples) if ex.event == event]
        folds.append(
            (dataset.subset(train_idx, split="train"), dataset.subset(test_idx, split="test"))
        )
    return folds
