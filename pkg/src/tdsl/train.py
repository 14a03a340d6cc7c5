"""The joint training loop.

Each step runs one minibatch through the shared trunk and both paths,
assembles the joint loss

    total = supervised + w(t) * unsupervised

where supervised is mean cross-entropy over the batch's labeled members
(divided by the full batch size), unsupervised is the mean squared gap
between the two paths' logits (divided by C times the batch size), and
w(t) ramps up along a Gaussian curve over the first ramp_epochs epochs.
Backpropagation is exact and hand-derived; updates use Adam.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from tdsl.corpus import FAKE, Dataset, mask_labels
from tdsl.engine import AdamState, adam_step, log_softmax, softmax
from tdsl.errors import ConfigError, EmptyDatasetError, StateError, TrainingError
from tdsl.model import (
    ModelConfig,
    TdslParams,
    backward_train,
    forward_train,
    init_params,
    predict,
)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; the defaults are the reference profile."""

    max_len: int
    labeled_ratio: float = 1.0
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-4
    dropout_rate: float = 0.5
    embed_dim: int = 128
    w_max: float = 1.0
    ramp_epochs: int = 80
    seed: int = 0
    shared_filters: int = 100
    path_filters: int = 100
    select_best_validation: bool = False

    def __post_init__(self):
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if not 0.0 < self.labeled_ratio <= 1.0:
            raise ConfigError(f"labeled_ratio must be in (0, 1], got {self.labeled_ratio}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.w_max < 0:
            raise ConfigError(f"w_max must be >= 0, got {self.w_max}")
        if self.ramp_epochs < 1:
            raise ConfigError(f"ramp_epochs must be >= 1, got {self.ramp_epochs}")
        if self.epochs > 0 and self.ramp_epochs > self.epochs:
            raise ConfigError(
                f"ramp_epochs ({self.ramp_epochs}) must not exceed epochs ({self.epochs})"
            )
        if self.shared_filters < 1 or self.path_filters < 1:
            raise ConfigError("filter counts must be >= 1")

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            max_len=self.max_len,
            shared_filters=self.shared_filters,
            path_filters=self.path_filters,
        )


@dataclass(frozen=True)
class LossBundle:
    supervised: float
    unsupervised: float
    weight: float
    total: float  # always assembled as supervised + weight * unsupervised


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    sup_loss: float
    unsup_loss: float
    weight: float
    val_accuracy: Optional[float]


@dataclass
class TrainHistory:
    rows: list[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path: Union[str, Path]) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["epoch", "sup_loss", "unsup_loss", "w", "val_accuracy"])
            for row in self.rows:
                acc = "" if row.val_accuracy is None else f"{row.val_accuracy:.10g}"
                writer.writerow(
                    [row.epoch, f"{row.sup_loss:.10g}", f"{row.unsup_loss:.10g}",
                     f"{row.weight:.10g}", acc]
                )


def rampup_weight(epoch: int, ramp_epochs: int, w_max: float) -> float:
    """Gaussian ramp: w_max * exp(-5 (1 - t/T)^2) for t < T, then w_max."""
    if epoch < 1:
        raise ConfigError(f"epoch index starts at 1, got {epoch}")
    if epoch >= ramp_epochs:
        return w_max
    frac = 1.0 - epoch / ramp_epochs
    return w_max * math.exp(-5.0 * frac * frac)


def batch_loss(z: np.ndarray, z_prime: np.ndarray, labels: np.ndarray,
               labeled_mask: np.ndarray, weight: float, class_count: int
               ) -> tuple[LossBundle, np.ndarray, np.ndarray]:
    """Joint loss over one minibatch, plus gradients w.r.t. z and z'.

    Both loss terms divide by the full batch size |B|: the supervised term
    sums over labeled members only but keeps the |B| divisor, so sparsely
    labeled batches carry proportionally less supervised signal.
    """
    z = np.asarray(z, dtype=np.float64)
    z_prime = np.asarray(z_prime, dtype=np.float64)
    labels = np.asarray(labels)
    labeled_mask = np.asarray(labeled_mask, dtype=bool)
    n = z.shape[0]
    if labeled_mask.any() and (labels[labeled_mask] < 0).any():
        raise StateError("labeled_mask marks an example with no label")

    dz = np.zeros_like(z)
    supervised = 0.0
    if labeled_mask.any():
        logp = log_softmax(z[labeled_mask])
        picked = labels[labeled_mask]
        supervised = float(-logp[np.arange(len(picked)), picked].sum() / n)
        grad_rows = softmax(z[labeled_mask])
        grad_rows[np.arange(len(picked)), picked] -= 1.0
        dz[labeled_mask] = grad_rows / n

    gap = z - z_prime
    unsupervised = float((gap * gap).sum() / (class_count * n))
    d_gap = (2.0 / (class_count * n)) * gap
    dz = dz + weight * d_gap
    dzp = -weight * d_gap

    total = supervised + weight * unsupervised
    bundle = LossBundle(
        supervised=supervised, unsupervised=unsupervised, weight=weight, total=total
    )
    return bundle, dz, dzp


@dataclass(frozen=True)
class Batch:
    indices: np.ndarray
    token_ids: np.ndarray
    labels: np.ndarray  # -1 where hidden
    labeled_mask: np.ndarray


def minibatch_iterator(dataset: Dataset, batch_size: int, seed: int, epoch: int
                       ) -> Iterator[Batch]:
    """One epoch: a seeded permutation of all examples cut into consecutive
    batches (the final short batch is kept). The permutation is drawn from
    a generator seeded with the (seed, epoch) pair."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if dataset.n_total == 0:
        raise EmptyDatasetError("cannot iterate over an empty dataset")
    ids, labels = dataset.tensors()
    order = np.random.default_rng((seed, epoch)).permutation(dataset.n_total)
    for start in range(0, dataset.n_total, batch_size):
        chosen = order[start : start + batch_size]
        yield Batch(
            indices=chosen,
            token_ids=ids[chosen],
            labels=labels[chosen],
            labeled_mask=labels[chosen] >= 0,
        )


def _validation_accuracy(params: TdslParams, validation: Dataset,
                         chunk: int = 512) -> float:
    ids, labels = validation.tensors()
    if (labels < 0).any():
        raise StateError("validation examples must all be labeled")
    hits = 0
    for start in range(0, len(labels), chunk):
        pred, _ = predict(params, ids[start : start + chunk])
        hits += int((pred == labels[start : start + chunk]).sum())
    return hits / len(labels)


def train(config: TrainConfig, dataset: Dataset,
          validation: Optional[Dataset] = None) -> tuple[TdslParams, TrainHistory]:
    """Run the full double loop over epochs and minibatches.

    The dataset must already be encoded and label-masked. Returns the
    final-epoch parameters unless select_best_validation is set, in which
    case the epoch with the highest validation accuracy wins (earlier epoch
    on ties).
    """
    if dataset.vocab_size is None:
        raise StateError("dataset has no vocab_size; encode it first")
    ids, _ = dataset.tensors()
    if ids.shape[1] != config.max_len:
        raise ConfigError(
            f"dataset encoded to length {ids.shape[1]} but config.max_len is {config.max_len}"
        )
    if validation is not None and validation.n_total == 0:
        validation = None

    params = init_params(
        dataset.vocab_size, config.embed_dim, config.max_len, config.seed,
        config=config.model_config(dataset.vocab_size),
    )
    opt = AdamState.for_params(params.values, learning_rate=config.learning_rate)
    dropout_rng = np.random.default_rng((config.seed, 0))
    history = TrainHistory()
    best: Optional[tuple[float, TdslParams]] = None

    for epoch in range(1, config.epochs + 1):
        weight = rampup_weight(epoch, config.ramp_epochs, config.w_max)
        sup_sum = 0.0
        unsup_sum = 0.0
        for batch_idx, batch in enumerate(
            minibatch_iterator(dataset, config.batch_size, config.seed, epoch)
        ):
            z, zp, trace = forward_train(
                params, batch.token_ids, dropout_rng,
                training=True, dropout_rate=config.dropout_rate,
            )
            bundle, dz, dzp = batch_loss(
                z, zp, batch.labels, batch.labeled_mask, weight, dataset.class_count
            )
            if not math.isfinite(bundle.total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batch_idx}: "
                    f"supervised={bundle.supervised}, unsupervised={bundle.unsupervised}"
                )
            grads = backward_train(params, dz, dzp, trace)
            try:
                adam_step(params.values, grads, opt)
            except TrainingError as err:
                raise TrainingError(f"epoch {epoch}, batch {batch_idx}: {err}") from err
            size = len(batch.indices)
            sup_sum += bundle.supervised * size
            unsup_sum += bundle.unsupervised * size

        val_acc = (
            _validation_accuracy(params, validation) if validation is not None else None
        )
        history.rows.append(
            EpochStats(
                epoch=epoch,
                sup_loss=sup_sum / dataset.n_total,
                unsup_loss=unsup_sum / dataset.n_total,
                weight=weight,
                val_accuracy=val_acc,
            )
        )
        if config.select_best_validation and val_acc is not None:
            if best is None or val_acc > best[0]:
                best = (val_acc, params.copy())

    if best is not None:
        return best[1], history
    return params, history


@dataclass(frozen=True)
class MultiRunResult:
    per_run: tuple[dict[str, float], ...]
    mean: dict[str, float]
    seeds: tuple[int, ...]


def multi_run(config: TrainConfig, train_dataset: Dataset, test_dataset: Dataset,
              n_runs: int = 5, validation: Optional[Dataset] = None,
              positive_class: int = FAKE) -> MultiRunResult:
    """Average test metrics over n_runs seeds (seed, seed+1, ...).

    Each run re-draws its label mask, so run-to-run variance covers both
    initialization and mask sampling. The mean is the plain arithmetic
    average of per-run metric values.
    """
    from tdsl.evaluate import evaluate  # local import: evaluate drives train for LOEO

    if n_runs < 1:
        raise ConfigError(f"n_runs must be >= 1, got {n_runs}")
    per_run = []
    seeds = []
    for i in range(n_runs):
        seed = config.seed + i
        run_config = replace(config, seed=seed)
        masked = mask_labels(train_dataset, config.labeled_ratio, seed=seed)
        params, _ = train(run_config, masked, validation)
        report = evaluate(params, test_dataset, positive_class=positive_class)
        per_run.append(
            {
                "accuracy": report.accuracy,
                "precision": report.precision,
                "recall": report.recall,
                "fscore": report.fscore,
            }
        )
        seeds.append(seed)
    mean = {
        key: sum(run[key] for run in per_run) / n_runs for key in per_run[0]
    }
    return MultiRunResult(per_run=tuple(per_run), mean=mean, seeds=tuple(seeds))
