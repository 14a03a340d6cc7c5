"""Deterministic synthetic corpora and tasks shared across the test suite.

The generators reproduce the reference example counts of the two target
corpora so parser and protocol behavior can be checked at real scale without
shipping licensed data. Text is synthetic: label-correlated word pools so
models have signal to learn.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from tdsl.corpus import Dataset, Example, build_vocab, encode_dataset

LIAR_COUNTS = {"train": 10_269, "validation": 1_284, "test": 1_283}

# (fake, true) per event; totals 92,499 = 27,992 fake + 64,507 true
PHEME_EVENT_COUNTS = {
    "germanwings-crash": (2_220, 1_700),
    "charliehebdo": (6_452, 27_784),
    "sydneysiege": (7_765, 14_072),
    "ferguson": (5_952, 15_706),
    "ottawashooting": (5_603, 5_245),
}

SIX_GRADES = ("true", "false", "half-true", "pants-fire", "barely-true", "mostly-true")
_GRADE_WEIGHTS = (0.163, 0.194, 0.206, 0.082, 0.161, 0.194)

FAKE_POOL = (
    "hoax", "shocking", "exposed", "conspiracy", "rumor", "fabricated",
    "unverified", "coverup", "scandal", "secret", "leaked", "banned",
)
TRUE_POOL = (
    "confirmed", "official", "report", "statement", "verified", "police",
    "spokesman", "announced", "investigation", "authorities", "update", "source",
)
COMMON_POOL = (
    "the", "a", "on", "in", "today", "people", "news", "city", "after",
    "new", "says", "was", "over", "about", "during",
)


def _sentence(rng: np.random.Generator, class_pool: tuple[str, ...]) -> str:
    length = int(rng.integers(6, 13))
    n_class = max(2, length * 2 // 5)
    words = [class_pool[i] for i in rng.integers(0, len(class_pool), size=n_class)]
    words += [COMMON_POOL[i] for i in rng.integers(0, len(COMMON_POOL), size=length - n_class)]
    order = rng.permutation(len(words))
    return " ".join(words[i] for i in order)


def write_liar_fixture(directory: Path, seed: int = 101) -> dict[str, Path]:
    """Three TSV files with the reference line counts; extra metadata columns
    prove they are ignored by the parser."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for split_idx, (split, count) in enumerate(LIAR_COUNTS.items()):
        rng = np.random.default_rng(seed + split_idx)
        lines = []
        for i in range(count):
            grade = SIX_GRADES[rng.choice(len(SIX_GRADES), p=_GRADE_WEIGHTS)]
            pool = TRUE_POOL if grade == "true" else FAKE_POOL
            statement = _sentence(rng, pool)
            lines.append(
                f"{split[:2]}{i:05d}.json\t{grade}\t{statement}\tpolitics\tspeaker-{i % 97}"
            )
        path = directory / f"{split}.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths[split] = path
    return paths


def write_pheme_fixture(path: Path, seed: int = 202) -> Path:
    """Normalized per-tweet TSV reproducing the reference per-event class counts."""
    rng = np.random.default_rng(seed)
    lines = []
    counter = 0
    for event, (n_fake, n_true) in PHEME_EVENT_COUNTS.items():
        for label, n, pool in (("fake", n_fake, FAKE_POOL), ("true", n_true, TRUE_POOL)):
            for _ in range(n):
                text = _sentence(rng, pool)
                if counter % 37 == 0:
                    text = f"RT @user{counter % 53}: {text} http://t.co/{counter:x}"
                lines.append(f"{event}\tt{counter:07d}\t{text}\t{label}")
                counter += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def small_pheme_lines(n_per_class: int = 10,
                      events: tuple[str, ...] = ("alpha", "beta", "gamma"),
                      seed: int = 11) -> list[str]:
    rng = np.random.default_rng(seed)
    lines = []
    counter = 0
    for event in events:
        for label, pool in (("fake", FAKE_POOL), ("true", TRUE_POOL)):
            for _ in range(n_per_class):
                lines.append(f"{event}\ts{counter:04d}\t{_sentence(rng, pool)}\t{label}")
                counter += 1
    return lines


_A_POOL = ("alpha", "breeze", "copper", "delta", "ember", "frost")
_B_POOL = ("quartz", "raven", "slate", "tundra", "umber", "violet")


def separable_dataset(n: int = 240, max_len: int = 8, seed: int = 3) -> Dataset:
    """Fully labeled, linearly separable two-class task: disjoint word pools."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        label = i % 2
        pool = _B_POOL if label == 1 else _A_POOL
        length = int(rng.integers(4, max_len + 1))
        tokens = tuple(pool[j] for j in rng.integers(0, len(pool), size=length))
        examples.append(
            Example(id=f"syn{i:04d}", text=" ".join(tokens), tokens=tokens, label=label)
        )
    dataset = Dataset(examples=tuple(examples), split="train")
    vocab = build_vocab(dataset)
    return encode_dataset(dataset, vocab, max_len)
