"""Confusion counting, binary and macro metrics, dataset evaluation, and
the leave-one-event-out driver."""

import numpy as np
import pytest

from fixtures import separable_dataset, small_pheme_lines

from tdsl.corpus import FAKE, TRUE, Dataset, Example, parse_pheme
from tdsl.errors import ProtocolError, ShapeError
from tdsl.evaluate import (
    ConfusionCounts,
    MetricsReport,
    binary_metrics,
    confusion,
    evaluate,
    fscore,
    macro_metrics,
    metrics_csv_row,
    run_loeo,
    write_metrics_csv,
)
from tdsl.model import ModelConfig, init_params
from tdsl.train import TrainConfig


def confusion_oracle(preds, golds, positive):
    """Per-element counting, no vector tricks."""
    tp = fp = fn = tn = 0
    for p, g in zip(preds, golds):
        if p == positive and g == positive:
            tp += 1
        elif p == positive and g != positive:
            fp += 1
        elif p != positive and g == positive:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


class TestConfusion:
    def test_all_correct_positives(self):
        c = confusion([FAKE] * 5, [FAKE] * 5)
        assert (c.tp, c.fp, c.fn, c.tn) == (5, 0, 0, 0)

    def test_all_false_positives(self):
        c = confusion([FAKE] * 4, [TRUE] * 4)
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 4, 0, 0)

    def test_against_counting_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            n = int(rng.integers(1, 201))
            preds = rng.integers(0, 2, size=n)
            golds = rng.integers(0, 2, size=n)
            positive = int(rng.integers(0, 2))
            c = confusion(preds, golds, positive_class=positive)
            assert (c.tp, c.fp, c.fn, c.tn) == confusion_oracle(preds, golds, positive)
            assert c.total == n

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            confusion([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ShapeError):
            confusion([], [])


class TestBinaryMetrics:
    def test_reference_fscore(self):
        assert abs(fscore(0.8357, 0.9994) - 0.9102) < 0.0005

    def test_half_correct_accuracy(self):
        report = binary_metrics(ConfusionCounts(tp=30, fp=20, fn=30, tn=20))
        assert report.accuracy == 0.5
        assert report.n_examples == 100

    def test_degenerate_zero_convention(self):
        report = binary_metrics(ConfusionCounts(tp=0, fp=0, fn=3, tn=7))
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.fscore == 0.0
        assert fscore(0.0, 0.0) == 0.0

    def test_matches_formula_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            tp, fp, fn, tn = (int(v) for v in rng.integers(0, 50, size=4))
            if tp + fp + fn + tn == 0:
                tn = 1
            report = binary_metrics(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
            total = tp + fp + fn + tn
            assert report.accuracy == (tp + tn) / total
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            assert report.precision == p
            assert report.recall == r
            assert report.fscore == (2 * p * r / (p + r) if p + r else 0.0)

    def test_accuracy_invariant_under_positive_swap(self):
        rng = np.random.default_rng(8)
        preds = rng.integers(0, 2, size=100)
        golds = rng.integers(0, 2, size=100)
        as_fake = binary_metrics(confusion(preds, golds, positive_class=FAKE))
        as_true = binary_metrics(confusion(preds, golds, positive_class=TRUE))
        assert as_fake.accuracy == as_true.accuracy

    def test_precision_not_invariant_under_positive_swap(self):
        # constant-0 predictor on a 1/3-0 gold split: swapping the positive
        # class turns a working predictor into one that never fires
        preds = [0, 0, 0]
        golds = [0, 1, 1]
        as_fake = binary_metrics(confusion(preds, golds, positive_class=FAKE))
        as_true = binary_metrics(confusion(preds, golds, positive_class=TRUE))
        assert as_fake.precision == pytest.approx(1 / 3)
        assert as_fake.recall == 1.0
        assert as_fake.fscore == 0.5
        assert as_true.precision == 0.0
        assert as_true.fscore == 0.0


class TestMacroMetrics:
    def _report(self, value):
        return MetricsReport(accuracy=value, precision=value, recall=value,
                             fscore=value, n_examples=10)

    def test_two_event_mean(self):
        macro = macro_metrics([self._report(0.2), self._report(0.4)])
        assert macro.fscore == pytest.approx(0.3, abs=1e-15)
        assert macro.macro_f == macro.fscore
        assert macro.n_examples == 20

    def test_single_event_passthrough(self):
        macro = macro_metrics([self._report(0.7)])
        assert macro.accuracy == 0.7
        assert macro.macro_a == 0.7

    def test_identical_reports(self):
        macro = macro_metrics([self._report(0.6)] * 4)
        assert macro.accuracy == 0.6
        assert macro.precision == 0.6

    def test_mean_not_pooled(self):
        # two folds with very different sizes: pooled counts would weight
        # the big fold, the macro mean must not
        small = MetricsReport(accuracy=1.0, precision=1.0, recall=1.0,
                              fscore=1.0, n_examples=2)
        big = MetricsReport(accuracy=0.5, precision=0.5, recall=0.5,
                            fscore=0.5, n_examples=1000)
        macro = macro_metrics([small, big])
        assert macro.accuracy == 0.75

    def test_empty_input(self):
        with pytest.raises(ProtocolError):
            macro_metrics([])


def constant_fake_params(vocab_size=10, embed_dim=4, max_len=6):
    config = ModelConfig(vocab_size=vocab_size, embed_dim=embed_dim, max_len=max_len,
                         shared_filters=3, path_filters=3)
    params = init_params(vocab_size, embed_dim, max_len, seed=0, config=config)
    for value in params.values.values():
        value[:] = 0.0
    return params  # all-zero logits, argmax ties to class 0 = Fake


def labeled_test_dataset(n_fake, n_true, max_len=6, event=None):
    examples = []
    for i in range(n_fake + n_true):
        examples.append(
            Example(
                id=f"x{i:04d}", text="w", tokens=("w",),
                token_ids=tuple([1] + [0] * (max_len - 1)),
                label=FAKE if i < n_fake else TRUE,
                event=event,
            )
        )
    return Dataset(examples=tuple(examples), split="test", vocab_size=10)


class TestEvaluate:
    def test_constant_fake_predictor_closed_form(self):
        # 83.5% Fake base rate: accuracy == base rate, recall == 1
        ds = labeled_test_dataset(n_fake=167, n_true=33)
        report = evaluate(constant_fake_params(), ds)
        assert report.accuracy == pytest.approx(0.835, abs=1e-12)
        assert report.recall == 1.0
        assert report.precision == pytest.approx(0.835, abs=1e-12)

    def test_perfect_predictor(self):
        ds = labeled_test_dataset(n_fake=20, n_true=0)
        report = evaluate(constant_fake_params(), ds)
        assert report.accuracy == 1.0
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.fscore == 1.0

    def test_order_invariance(self):
        ds = labeled_test_dataset(n_fake=30, n_true=10)
        rng = np.random.default_rng(3)
        shuffled = ds.subset(rng.permutation(ds.n_total))
        params = constant_fake_params()
        a, b = evaluate(params, ds), evaluate(params, shuffled)
        assert (a.accuracy, a.precision, a.recall, a.fscore) == (
            b.accuracy, b.precision, b.recall, b.fscore
        )

    def test_unlabeled_example_rejected(self):
        examples = (
            Example(id="a", text="w", tokens=("w",), token_ids=(1, 0, 0, 0, 0, 0),
                    label=FAKE),
            Example(id="b", text="w", tokens=("w",), token_ids=(1, 0, 0, 0, 0, 0),
                    label=None),
        )
        ds = Dataset(examples=examples, split="test", vocab_size=10)
        with pytest.raises(ProtocolError, match="'b'"):
            evaluate(constant_fake_params(), ds)

    def test_per_event_breakdown(self):
        fake_ev = labeled_test_dataset(n_fake=10, n_true=0, event="a")
        mixed = labeled_test_dataset(n_fake=5, n_true=5, event="b")
        merged = Dataset(
            examples=tuple(
                ex if ex.event == "a" else Example(
                    id="y" + ex.id, text=ex.text, tokens=ex.tokens,
                    token_ids=ex.token_ids, label=ex.label, event=ex.event,
                )
                for ex in fake_ev.examples + mixed.examples
            ),
            split="test",
            vocab_size=10,
        )
        report = evaluate(constant_fake_params(), merged)
        assert set(report.per_event) == {"a", "b"}
        assert report.per_event["a"].accuracy == 1.0
        assert report.per_event["b"].accuracy == 0.5
        assert report.n_examples == 20


@pytest.fixture(scope="module")
def loeo_result(tmp_path_factory):
    path = tmp_path_factory.mktemp("loeo") / "small.tsv"
    path.write_text("\n".join(small_pheme_lines(n_per_class=8)) + "\n",
                    encoding="utf-8")
    dataset = parse_pheme(path)
    config = TrainConfig(max_len=8, labeled_ratio=0.5, epochs=2, ramp_epochs=2,
                         batch_size=8, learning_rate=1e-3, embed_dim=8,
                         seed=0, shared_filters=4, path_filters=4)
    return dataset, run_loeo(config, dataset)


class TestRunLoeo:
    def test_one_report_per_event_plus_macro(self, loeo_result):
        dataset, result = loeo_result
        assert [f.event for f in result.folds] == dataset.events()
        assert result.macro.macro_a is not None

    def test_macro_is_mean_of_folds(self, loeo_result):
        _, result = loeo_result
        accs = [f.report.accuracy for f in result.folds]
        assert abs(result.macro.macro_a - sum(accs) / len(accs)) < 1e-12
        fs = [f.report.fscore for f in result.folds]
        assert abs(result.macro.macro_f - sum(fs) / len(fs)) < 1e-12

    def test_fold_sizes_match_events(self, loeo_result):
        dataset, result = loeo_result
        counts = {ev: sum(1 for ex in dataset.examples if ex.event == ev)
                  for ev in dataset.events()}
        for fold in result.folds:
            assert fold.n_test == counts[fold.event]
            assert fold.n_train == dataset.n_total - counts[fold.event]

    def test_fold_histories_recorded(self, loeo_result):
        _, result = loeo_result
        for fold in result.folds:
            assert len(fold.history) == 2


class TestMetricsCsv:
    def test_layout(self, tmp_path):
        config = TrainConfig(max_len=8, epochs=1, ramp_epochs=1)
        report = MetricsReport(accuracy=0.5, precision=0.25, recall=1.0,
                               fscore=0.4, n_examples=8)
        row = metrics_csv_row("pheme", "ferguson", config, seed=3, report=report)
        path = tmp_path / "m.csv"
        write_metrics_csv(path, [row])
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert lines[0] == (
            "dataset,fold,labeled_ratio,batch_size,embed_dim,lr,seed,"
            "accuracy,precision,recall,fscore"
        )
        assert lines[1] == "pheme,ferguson,1,128,128,0.0001,3,0.5,0.25,1,0.4"
