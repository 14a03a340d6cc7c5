"""Operator command line.

Subcommands:
    split   draw a label mask for a training corpus and save its id manifest
    train   train one model and evaluate it on the test split
    eval    evaluate a saved checkpoint on a chosen split
    loeo    leave-one-event-out cross-validation over an event-tagged corpus
    stats   per-event top-k TF-IDF token report
    sweep   hyperparameter grid of training runs, aggregated into one CSV

Configuration is a flat key=value file; every key doubles as a command-line
flag of the same name, and flags win over the file. The TDSL_SEED environment
variable overrides the seed from either source. Exit codes: 0 success,
1 runtime failure, 2 usage or configuration error.
"""

import argparse
import itertools
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import psutil

from tdsl import __version__
from tdsl.corpus import (
    FAKE,
    Dataset,
    apply_mask_manifest,
    build_vocab,
    encode_dataset,
    load_mask_manifest,
    loeo_folds,
    mask_labels,
    parse_liar,
    parse_pheme,
    save_mask_manifest,
    tfidf_top_words,
    write_tfidf_csv,
)
from tdsl.corpus.records import SPLITS
from tdsl.errors import ConfigError
from tdsl.evaluate import (
    MetricsReport,
    evaluate,
    macro_metrics,
    metrics_csv_row,
    run_fold,
    run_loeo,
    write_metrics_csv,
    write_metrics_json,
)
from tdsl.model import load_tdsl_params
from tdsl.train import TrainConfig, multi_run, train

DATASET_KINDS = ("liar", "pheme")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, serializable as flat key=value text."""

    dataset_kind: str = "liar"
    dataset_path: str = ""
    output_dir: str = "runs/out"
    n_runs: int = 1
    positive_class: int = FAKE
    stratified_mask: bool = False
    mask_manifest: str = ""
    checkpoint: str = ""
    eval_split: str = "test"
    min_count: int = 1
    top_k: int = 50
    workers: int = 0
    grid_labeled_ratio: tuple = ()
    grid_batch_size: tuple = ()
    grid_embed_dim: tuple = ()
    grid_lr: tuple = ()
    max_len: int = 32
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
        if self.dataset_kind not in DATASET_KINDS:
            raise ConfigError(
                f"dataset_kind must be one of {DATASET_KINDS}, got {self.dataset_kind!r}"
            )
        if self.eval_split not in SPLITS:
            raise ConfigError(f"eval_split must be one of {SPLITS}, got {self.eval_split!r}")
        if self.positive_class not in (0, 1):
            raise ConfigError(f"positive_class must be 0 or 1, got {self.positive_class}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            max_len=self.max_len,
            labeled_ratio=self.labeled_ratio,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_rate=self.dropout_rate,
            embed_dim=self.embed_dim,
            w_max=self.w_max,
            ramp_epochs=self.ramp_epochs,
            seed=self.seed,
            shared_filters=self.shared_filters,
            path_filters=self.path_filters,
            select_best_validation=self.select_best_validation,
        )


# element type for the comma-separated grid keys; scalars coerce from their
# field default's type (bool checked before int: bool subclasses int)
_GRID_ELEMENT = {
    "grid_labeled_ratio": float,
    "grid_batch_size": int,
    "grid_embed_dim": int,
    "grid_lr": float,
}

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _coerce(name: str, text: str):
    """Parse one config value from its textual form."""
    by_name = {f.name: f for f in fields(RunConfig)}
    if name not in by_name:
        raise ConfigError(f"unknown config key {name!r}")
    if name in _GRID_ELEMENT:
        element = _GRID_ELEMENT[name]
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            return tuple(element(p) for p in parts)
        except ValueError:
            raise ConfigError(f"config key {name!r}: bad list value {text!r}") from None
    default = by_name[name].default
    if isinstance(default, bool):
        lowered = text.strip().lower()
        if lowered in _TRUE_WORDS:
            return True
        if lowered in _FALSE_WORDS:
            return False
        raise ConfigError(f"config key {name!r}: expected a boolean, got {text!r}")
    try:
        return type(default)(text.strip())
    except ValueError:
        raise ConfigError(f"config key {name!r}: bad value {text!r}") from None


def parse_config_file(path) -> dict[str, str]:
    """Read a flat key=value file; # comments and blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name} line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file, command-line flags, and TDSL_SEED (strongest last)."""
    texts = {}
    if args.config:
        texts.update(parse_config_file(args.config))
    for field in fields(RunConfig):
        flag = getattr(args, field.name, None)
        if flag is not None:
            texts[field.name] = flag
    env_seed = os.environ.get("TDSL_SEED")
    if env_seed is not None:
        texts["seed"] = env_seed
    return RunConfig(**{name: _coerce(name, text) for name, text in texts.items()})


def echo_config(config: RunConfig) -> str:
    """Render the effective config back into the flat key=value form."""
    lines = []
    for field in fields(RunConfig):
        value = getattr(config, field.name)
        if isinstance(value, tuple):
            rendered = ",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                                for v in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = f"{value:.10g}"
        else:
            rendered = str(value)
        lines.append(f"{field.name}={rendered}")
    return "\n".join(lines) + "\n"


def _write_run_dir(out: Path, config: RunConfig, command: str) -> None:
    """Echo what a rerun needs: effective config, command, package version."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(echo_config(config), encoding="utf-8")
    meta = {"command": command, "seed": config.seed, "version": __version__}
    (out / "run.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _require_dataset_path(config: RunConfig) -> Path:
    if not config.dataset_path:
        raise ConfigError("dataset_path is required")
    path = Path(config.dataset_path)
    if not path.exists():
        raise ConfigError(f"dataset_path does not exist: {path}")
    return path


def _liar_split_path(directory: Path, split: str) -> Path:
    # the published corpus names the middle split valid.tsv
    candidates = [directory / f"{split}.tsv"]
    if split == "validation":
        candidates.append(directory / "valid.tsv")
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise ConfigError(f"no {split} file under {directory} (tried {candidates})")


def _load_split_corpus(config: RunConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Load the train/validation/test triple for split-corpus commands."""
    if config.dataset_kind != "liar":
        raise ConfigError(
            f"{config.dataset_kind!r} data has no train/test partition; use the "
            "loeo subcommand for event-tagged corpora"
        )
    directory = _require_dataset_path(config)
    if not directory.is_dir():
        raise ConfigError(f"dataset_path must be a directory of split files: {directory}")
    return tuple(
        parse_liar(_liar_split_path(directory, split), split) for split in SPLITS
    )


def _load_event_corpus(config: RunConfig) -> Dataset:
    if config.dataset_kind != "pheme":
        raise ConfigError(f"this subcommand needs event-tagged data, got {config.dataset_kind!r}")
    path = _require_dataset_path(config)
    if not path.is_file():
        raise ConfigError(f"dataset_path must be a file: {path}")
    return parse_pheme(path)


def _worker_count(config: RunConfig) -> int:
    if config.workers:
        return config.workers
    return psutil.cpu_count(logical=False) or 1


def _run_jobs(fn, jobs: Sequence, workers: int) -> list:
    """Run jobs on a bounded process pool, results in submission order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


# ---------------------------------------------------------------- subcommands


def cmd_split(config: RunConfig) -> None:
    if config.dataset_kind == "liar":
        directory = _require_dataset_path(config)
        dataset = parse_liar(_liar_split_path(directory, "train"), "train")
    else:
        dataset = _load_event_corpus(config)
    masked = mask_labels(
        dataset, config.labeled_ratio, seed=config.seed, stratified=config.stratified_mask
    )
    out = Path(config.output_dir)
    _write_run_dir(out, config, "split")
    save_mask_manifest(out / "mask.json", masked, config.labeled_ratio, config.seed)
    print(f"kept {masked.n_labeled} of {masked.n_total} labels -> {out / 'mask.json'}")


def cmd_train(config: RunConfig) -> None:
    train_config = config.train_config()
    train_raw, validation_raw, test_raw = _load_split_corpus(config)
    vocab = build_vocab(train_raw, min_count=config.min_count)
    train_enc = encode_dataset(train_raw, vocab, train_config.max_len)
    validation_enc = encode_dataset(validation_raw, vocab, train_config.max_len)
    test_enc = encode_dataset(test_raw, vocab, train_config.max_len)
    if config.mask_manifest:
        masked = apply_mask_manifest(train_enc, load_mask_manifest(config.mask_manifest))
    else:
        masked = mask_labels(
            train_enc, train_config.labeled_ratio, seed=train_config.seed,
            stratified=config.stratified_mask,
        )
    params, history = train(train_config, masked, validation=validation_enc)
    report = evaluate(params, test_enc, positive_class=config.positive_class)

    out = Path(config.output_dir)
    _write_run_dir(out, config, "train")
    params.save(out / "params.ckpt")
    history.to_csv(out / "history.csv")
    write_metrics_json(out / "metrics.json", report)
    save_mask_manifest(out / "mask.json", masked, train_config.labeled_ratio,
                       train_config.seed)
    print(
        f"trained {train_config.epochs} epochs on {masked.n_labeled}/{masked.n_total} "
        f"labels; test accuracy {report.accuracy:.4f} fscore {report.fscore:.4f} -> {out}"
    )


def cmd_eval(config: RunConfig) -> None:
    train_config = config.train_config()
    if not config.checkpoint:
        raise ConfigError("checkpoint is required for eval")
    checkpoint = Path(config.checkpoint)
    if not checkpoint.is_file():
        raise ConfigError(f"checkpoint does not exist: {checkpoint}")
    train_raw, validation_raw, test_raw = _load_split_corpus(config)
    target_raw = {"train": train_raw, "validation": validation_raw, "test": test_raw}[
        config.eval_split
    ]
    # the vocabulary is a pure function of the train split and min_count,
    # so rebuilding it here reproduces the encoding the checkpoint saw
    vocab = build_vocab(train_raw, min_count=config.min_count)
    target_enc = encode_dataset(target_raw, vocab, train_config.max_len)
    params = load_tdsl_params(checkpoint, train_config.model_config(vocab.size))
    report = evaluate(params, target_enc, positive_class=config.positive_class)

    out = Path(config.output_dir)
    _write_run_dir(out, config, "eval")
    write_metrics_json(out / "metrics.json", report)
    print(
        f"{config.eval_split}: accuracy {report.accuracy:.4f} "
        f"fscore {report.fscore:.4f} -> {out / 'metrics.json'}"
    )


def _fold_job(job):
    train_config, train_raw, test_raw, mask_seed, positive_class = job
    return run_fold(train_config, train_raw, test_raw, mask_seed, positive_class)


def cmd_loeo(config: RunConfig) -> None:
    train_config = config.train_config()
    dataset = _load_event_corpus(config)
    folds = loeo_folds(dataset)
    jobs = [
        (train_config, train_raw, test_raw, train_config.seed + i, config.positive_class)
        for i, (train_raw, test_raw) in enumerate(folds)
    ]
    results = _run_jobs(_fold_job, jobs, _worker_count(config))

    out = Path(config.output_dir)
    _write_run_dir(out, config, "loeo")
    rows = []
    reports = []
    for i, ((_, train_raw, test_raw, mask_seed, _), (report, history, _)) in enumerate(
        zip(jobs, results)
    ):
        event = test_raw.examples[0].event
        fold_dir = out / f"fold_{i:02d}_{_safe_name(event)}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_json(fold_dir / "metrics.json", report)
        history.to_csv(fold_dir / "history.csv")
        rows.append(metrics_csv_row(config.dataset_kind, event, train_config,
                                    mask_seed, report))
        reports.append(report)
    macro = macro_metrics(reports)
    write_metrics_csv(out / "folds.csv", rows)
    write_metrics_json(out / "macro.json", macro)
    print(
        f"{len(folds)} folds; macro accuracy {macro.macro_a:.4f} "
        f"macro fscore {macro.macro_f:.4f} -> {out}"
    )


def cmd_stats(config: RunConfig) -> None:
    dataset = _load_event_corpus(config)
    reports = tfidf_top_words(dataset, k=config.top_k)
    out = Path(config.output_dir)
    _write_run_dir(out, config, "stats")
    write_tfidf_csv(out / "tfidf.csv", reports)
    print(f"ranked top {config.top_k} tokens for {len(reports)} events -> {out / 'tfidf.csv'}")


def _sweep_cell_config(base: TrainConfig, cell: tuple) -> TrainConfig:
    ratio, batch, embed, lr = cell
    return replace(base, labeled_ratio=ratio, batch_size=batch, embed_dim=embed,
                   learning_rate=lr)


def _sweep_job(job):
    """One grid cell: n_runs seeds, averaged. Returns per-run rows or an error."""
    base, cell, data, n_runs, positive_class, kind = job
    try:
        cell_config = _sweep_cell_config(base, cell)
        if kind == "liar":
            train_enc, validation_enc, test_enc = data
            validation = validation_enc if cell_config.select_best_validation else None
            result = multi_run(cell_config, train_enc, test_enc, n_runs=n_runs,
                               validation=validation, positive_class=positive_class)
            runs = list(zip(result.seeds, result.per_run))
            mean = result.mean
        else:
            # event-tagged corpora have no fixed test split; a cell run is a
            # full LOEO pass and contributes its macro metrics
            runs = []
            for i in range(n_runs):
                seed = cell_config.seed + i
                loeo = run_loeo(replace(cell_config, seed=seed), data, positive_class)
                runs.append((seed, {
                    "accuracy": loeo.macro.macro_a,
                    "precision": loeo.macro.macro_p,
                    "recall": loeo.macro.macro_r,
                    "fscore": loeo.macro.macro_f,
                }))
            mean = {
                key: sum(metrics[key] for _, metrics in runs) / n_runs
                for key in runs[0][1]
            }
        return {"cell": cell, "runs": runs, "mean": mean}
    except Exception as err:  # record the cell failure, keep sweeping
        return {"cell": cell, "error": f"{type(err).__name__}: {err}"}


def cmd_sweep(config: RunConfig) -> None:
    base = config.train_config()
    ratios = config.grid_labeled_ratio or (base.labeled_ratio,)
    batches = config.grid_batch_size or (base.batch_size,)
    embeds = config.grid_embed_dim or (base.embed_dim,)
    lrs = config.grid_lr or (base.learning_rate,)
    cells = list(itertools.product(ratios, batches, embeds, lrs))

    if config.dataset_kind == "liar":
        train_raw, validation_raw, test_raw = _load_split_corpus(config)
        vocab = build_vocab(train_raw, min_count=config.min_count)
        # token encoding does not depend on any swept axis, so share it
        data = tuple(
            encode_dataset(ds, vocab, base.max_len)
            for ds in (train_raw, validation_raw, test_raw)
        )
    else:
        data = _load_event_corpus(config)

    jobs = [
        (base, cell, data, config.n_runs, config.positive_class, config.dataset_kind)
        for cell in cells
    ]
    outcomes = _run_jobs(_sweep_job, jobs, _worker_count(config))

    out = Path(config.output_dir)
    _write_run_dir(out, config, "sweep")
    fold_name = "test" if config.dataset_kind == "liar" else "macro"
    rows = []
    failures = []
    for index, outcome in enumerate(outcomes):
        cell = outcome["cell"]
        cell_dir = out / f"cell_{index:03d}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        if "error" in outcome:
            failures.append({"cell_index": index, "cell": list(cell),
                             "error": outcome["error"]})
            (cell_dir / "error.txt").write_text(outcome["error"] + "\n", encoding="utf-8")
            continue
        cell_config = _sweep_cell_config(base, cell)
        for seed, metrics in outcome["runs"]:
            # row formatting is shared with the fold CSVs; n_examples is not
            # a CSV column, so a placeholder report carries the four values
            report = MetricsReport(n_examples=0, **metrics)
            rows.append(metrics_csv_row(config.dataset_kind, fold_name, cell_config,
                                        seed, report))
        summary = {
            "labeled_ratio": cell[0], "batch_size": cell[1], "embed_dim": cell[2],
            "learning_rate": cell[3],
            "seeds": [seed for seed, _ in outcome["runs"]],
            "per_run": [metrics for _, metrics in outcome["runs"]],
            "mean": outcome["mean"],
        }
        (cell_dir / "metrics.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    write_metrics_csv(out / "sweep.csv", rows)
    (out / "failures.json").write_text(
        json.dumps(failures, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"{len(cells)} cells x {config.n_runs} runs: {len(rows)} rows, "
        f"{len(failures)} failures -> {out / 'sweep.csv'}"
    )


_HANDLERS = {
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "loeo": cmd_loeo,
    "stats": cmd_stats,
    "sweep": cmd_sweep,
}

_COMMAND_HELP = {
    "split": "draw a label mask and save its id manifest",
    "train": "train one model and evaluate on the test split",
    "eval": "evaluate a saved checkpoint on a chosen split",
    "loeo": "leave-one-event-out cross-validation",
    "stats": "per-event TF-IDF top-k report",
    "sweep": "hyperparameter grid of runs, aggregated to CSV",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdsl", description="two-path semi-supervised text classifier"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in _HANDLERS.items():
        command = sub.add_parser(name, help=_COMMAND_HELP[name])
        command.add_argument("--config", metavar="FILE",
                             help="flat key=value config file")
        for field in fields(RunConfig):
            command.add_argument(
                f"--{field.name.replace('_', '-')}",
                dest=field.name, metavar="VALUE",
                help=f"override config key {field.name}",
            )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        config = resolve_config(args)
        _HANDLERS[args.command](config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
