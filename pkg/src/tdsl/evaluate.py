"""Measurement: confusion counts, binary metrics, macro averaging over
events, whole-dataset evaluation, and the leave-one-event-out driver.

The positive class defaults to Fake (class 0): TP counts correctly
identified Fake items. Degenerate 0/0 ratios are defined as 0 so heavily
imbalanced folds aggregate without NaNs. Macro metrics are unweighted means
of per-fold values, never recomputations from pooled counts.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from tdsl.corpus import FAKE, Dataset, build_vocab, encode_dataset, loeo_folds, mask_labels
from tdsl.errors import ProtocolError, ShapeError
from tdsl.model import TdslParams, predict
from tdsl.train import TrainConfig, TrainHistory, train


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    positive_class: int = FAKE

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    fscore: float
    n_examples: int
    per_event: dict[str, "MetricsReport"] = field(default_factory=dict)
    macro_a: Optional[float] = None
    macro_p: Optional[float] = None
    macro_r: Optional[float] = None
    macro_f: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "n_examples": self.n_examples,
        }
        if self.per_event:
            out["per_event"] = {k: v.to_dict() for k, v in self.per_event.items()}
        if self.macro_a is not None:
            out.update(
                macro_a=self.macro_a, macro_p=self.macro_p,
                macro_r=self.macro_r, macro_f=self.macro_f,
            )
        return out


def confusion(preds: Sequence[int], golds: Sequence[int],
              positive_class: int = FAKE) -> ConfusionCounts:
    preds = np.asarray(preds)
    golds = np.asarray(golds)
    if preds.shape != golds.shape:
        raise ShapeError(f"preds shape {preds.shape} != golds shape {golds.shape}")
    if preds.size == 0:
        raise ShapeError("cannot build confusion counts from zero examples")
    pred_pos = preds == positive_class
    gold_pos = golds == positive_class
    return ConfusionCounts(
        tp=int((pred_pos & gold_pos).sum()),
        fp=int((pred_pos & ~gold_pos).sum()),
        fn=int((~pred_pos & gold_pos).sum()),
        tn=int((~pred_pos & ~gold_pos).sum()),
        positive_class=positive_class,
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def fscore(precision: float, recall: float) -> float:
    """Harmonic mean 2PR/(P+R), 0 when both are 0."""
    return _ratio(2.0 * precision * recall, precision + recall)


def binary_metrics(counts: ConfusionCounts) -> MetricsReport:
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    return MetricsReport(
        accuracy=_ratio(counts.tp + counts.tn, counts.total),
        precision=precision,
        recall=recall,
        fscore=fscore(precision, recall),
        n_examples=counts.total,
    )


def macro_metrics(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Unweighted arithmetic mean of each metric across folds/events."""
    if not reports:
        raise ProtocolError("cannot macro-average zero reports")
    t = len(reports)
    macro_a = sum(r.accuracy for r in reports) / t
    macro_p = sum(r.precision for r in reports) / t
    macro_r = sum(r.recall for r in reports) / t
    macro_f = sum(r.fscore for r in reports) / t
    return MetricsReport(
        accuracy=macro_a,
        precision=macro_p,
        recall=macro_r,
        fscore=macro_f,
        n_examples=sum(r.n_examples for r in reports),
        macro_a=macro_a,
        macro_p=macro_p,
        macro_r=macro_r,
        macro_f=macro_f,
    )


def predict_dataset(params: TdslParams, dataset: Dataset, chunk: int = 512) -> np.ndarray:
    """Inference-mode predicted labels for every example, in dataset order."""
    ids, _ = dataset.tensors()
    out = np.empty(dataset.n_total, dtype=np.int64)
    for start in range(0, dataset.n_total, chunk):
        labels, _ = predict(params, ids[start : start + chunk])
        out[start : start + len(labels)] = labels
    return out


def evaluate(params: TdslParams, dataset: Dataset,
             positive_class: int = FAKE) -> MetricsReport:
    """Predict the whole dataset and report binary metrics, with a per-event
    breakdown when the examples carry event tags."""
    _, golds = dataset.tensors()
    if (golds < 0).any():
        first = int(np.argmax(golds < 0))
        raise ProtocolError(
            f"evaluation data must be fully labeled; example "
            f"'{dataset.examples[first].id}' has no label"
        )
    preds = predict_dataset(params, dataset)
    report = binary_metrics(confusion(preds, golds, positive_class))

    events = dataset.events()
    if events:
        per_event = {}
        by_event: dict[str, list[int]] = {}
        for i, ex in enumerate(dataset.examples):
            by_event.setdefault(ex.event, []).append(i)
        for event in events:
            idx = by_event[event]
            per_event[event] = binary_metrics(
                confusion(preds[idx], golds[idx], positive_class)
            )
        report = replace(report, per_event=per_event)
    return report


@dataclass(frozen=True)
class FoldResult:
    event: str
    report: MetricsReport
    history: TrainHistory
    n_train: int
    n_test: int


@dataclass(frozen=True)
class LoeoResult:
    folds: tuple[FoldResult, ...]
    macro: MetricsReport


def run_fold(config: TrainConfig, train_raw: Dataset, test_raw: Dataset,
             mask_seed: int, positive_class: int = FAKE
             ) -> tuple[MetricsReport, TrainHistory, TdslParams]:
    """Train on one fold's training side and evaluate on its test side.

    The vocabulary is built from the fold's training tokens only, so the
    held-out event's vocabulary stays unseen, then both sides are encoded
    with it.
    """
    vocab = build_vocab(train_raw)
    train_enc = encode_dataset(train_raw, vocab, config.max_len)
    test_enc = encode_dataset(test_raw, vocab, config.max_len)
    masked = mask_labels(train_enc, config.labeled_ratio, seed=mask_seed)
    params, history = train(config, masked)
    return evaluate(params, test_enc, positive_class), history, params


def run_loeo(config: TrainConfig, dataset: Dataset,
             positive_class: int = FAKE) -> LoeoResult:
    """Leave-one-event-out: one (train, evaluate) cycle per event, then a
    macro aggregate of the fold reports. Fold i masks labels with seed
    config.seed + i so folds draw independent masks."""
    folds = loeo_folds(dataset)
    results = []
    for i, (train_raw, test_raw) in enumerate(folds):
        event = test_raw.examples[0].event
        report, history, _ = run_fold(
            config, train_raw, test_raw, mask_seed=config.seed + i,
            positive_class=positive_class,
        )
        results.append(
            FoldResult(
                event=event, report=report, history=history,
                n_train=train_raw.n_total, n_test=test_raw.n_total,
            )
        )
    macro = macro_metrics([r.report for r in results])
    return LoeoResult(folds=tuple(results), macro=macro)


METRICS_CSV_COLUMNS = (
    "dataset", "fold", "labeled_ratio", "batch_size", "embed_dim", "lr",
    "seed", "accuracy", "precision", "recall", "fscore",
)


def metrics_csv_row(dataset_name: str, fold: str, config: TrainConfig, seed: int,
                    report: MetricsReport) -> list:
    return [
        dataset_name, fold, f"{config.labeled_ratio:.10g}", config.batch_size,
        config.embed_dim, f"{config.learning_rate:.10g}", seed,
        f"{report.accuracy:.10g}", f"{report.precision:.10g}",
        f"{report.recall:.10g}", f"{report.fscore:.10g}",
    ]


def write_metrics_csv(path: Union[str, Path], rows: Sequence[Sequence]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_CSV_COLUMNS)
        writer.writerows(rows)


def write_metrics_json(path: Union[str, Path], report: MetricsReport) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
