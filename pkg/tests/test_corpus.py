"""Parsing, tokenization, vocabulary, and encoding behavior."""

import pytest

from tdsl.corpus import (
    FAKE,
    PAD_ID,
    TRUE,
    UNK_ID,
    Dataset,
    Example,
    binarize_liar_label,
    build_vocab,
    encode,
    encode_dataset,
    parse_liar,
    parse_pheme,
    tokenize,
    write_pheme,
)
from tdsl.errors import (
    EmptyDatasetError,
    LabelError,
    ParseError,
    ProtocolError,
    StateError,
)


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("Hello, World!") == ["hello", "world"]

    def test_url_and_mention_sentinels(self):
        assert tokenize("RT @abc http://t.co/x") == ["rt", "<user>", "<url>"]

    def test_empty_string(self):
        assert tokenize("") == []

    def test_pure_punctuation_dropped(self):
        assert tokenize("... --- !!!") == []

    def test_interior_punctuation_kept(self):
        assert tokenize("it's a half-true claim") == ["it's", "a", "half-true", "claim"]

    def test_https_and_www_forms(self):
        assert tokenize("see https://x.co and www.example.com") == [
            "see", "<url>", "and", "<url>",
        ]

    def test_bare_at_sign_is_not_a_mention(self):
        assert tokenize("price @ 5") == ["price", "5"]


class TestBinarizeLiarLabel:
    def test_true_maps_to_true_class(self):
        assert binarize_liar_label("true") == TRUE

    @pytest.mark.parametrize(
        "grade", ["false", "half-true", "pants-fire", "barely-true", "mostly-true"]
    )
    def test_other_grades_map_to_fake(self, grade):
        assert binarize_liar_label(grade) == FAKE

    def test_case_insensitive(self):
        assert binarize_liar_label("TRUE") == TRUE
        assert binarize_liar_label("Mostly-True") == FAKE

    def test_unknown_grade_named_in_error(self):
        with pytest.raises(LabelError, match="kinda-true"):
            binarize_liar_label("kinda-true")


class TestParseLiar:
    def test_single_line(self, tmp_path):
        path = tmp_path / "one.tsv"
        path.write_text("1.json\ttrue\tThe sky is blue.\n", encoding="utf-8")
        ds = parse_liar(path)
        assert ds.n_total == 1
        ex = ds.examples[0]
        assert ex.text == "The sky is blue."
        assert ex.label == TRUE
        assert ex.raw_label == "true"
        assert ex.tokens == ("the", "sky", "is", "blue")

    def test_missing_column_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("just one column\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 1"):
            parse_liar(path)

    def test_error_line_number_is_exact(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("1.json\ttrue\tfine\n2.json\tfalse\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            parse_liar(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyDatasetError):
            parse_liar(path)

    def test_unknown_label_reported_with_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("1.json\tmaybe\ttext here\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 1"):
            parse_liar(path)

    def test_extra_columns_ignored(self, tmp_path):
        path = tmp_path / "wide.tsv"
        path.write_text(
            "1.json\tfalse\tsome claim\tsubject\tspeaker\tjob\tstate\tparty\n",
            encoding="utf-8",
        )
        ds = parse_liar(path)
        assert ds.examples[0].text == "some claim"
        assert ds.examples[0].label == FAKE

    def test_fixture_counts(self, liar_dir):
        assert parse_liar(liar_dir / "train.tsv").n_total == 10_269
        assert parse_liar(liar_dir / "validation.tsv").n_total == 1_284
        assert parse_liar(liar_dir / "test.tsv").n_total == 1_283


class TestParsePheme:
    def test_tsv_line(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("sydneysiege\tt001\tBreaking news downtown\tfake\n", encoding="utf-8")
        ds = parse_pheme(path)
        ex = ds.examples[0]
        assert ex.event == "sydneysiege"
        assert ex.id == "t001"
        assert ex.label == FAKE

    def test_jsonl_line(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text(
            '{"event": "ferguson", "tweet_id": "t9", "text": "calm tonight", "label": "true"}\n',
            encoding="utf-8",
        )
        ds = parse_pheme(path)
        assert ds.examples[0].event == "ferguson"
        assert ds.examples[0].label == TRUE

    def test_unknown_label_names_line(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text(
            "e\tt1\tok text\ttrue\ne\tt2\tbad text\trumour\n", encoding="utf-8"
        )
        with pytest.raises(ParseError, match="line 2"):
            parse_pheme(path)

    def test_missing_event(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("\tt1\tsome text\tfake\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 1"):
            parse_pheme(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("\n\n", encoding="utf-8")
        with pytest.raises(EmptyDatasetError):
            parse_pheme(path)

    def test_round_trip_tsv(self, tmp_path):
        lines = [
            "alpha\ta1\tshocking rumor spreads fast\tfake",
            "alpha\ta2\tofficial statement released\ttrue",
            "beta\tb1\tunverified claim exposed\tfake",
        ]
        src = tmp_path / "src.tsv"
        src.write_text("\n".join(lines) + "\n", encoding="utf-8")
        ds = parse_pheme(src)
        out = tmp_path / "out.tsv"
        write_pheme(out, ds)
        assert parse_pheme(out).examples == ds.examples

    def test_round_trip_jsonl(self, tmp_path):
        src = tmp_path / "src.tsv"
        src.write_text(
            "alpha\ta1\tRT @abc: claim debunked http://t.co/x\tfake\n", encoding="utf-8"
        )
        ds = parse_pheme(src)
        out = tmp_path / "out.jsonl"
        write_pheme(out, ds, fmt="jsonl")
        assert parse_pheme(out).examples == ds.examples


class TestBuildVocab:
    def _dataset(self, *texts):
        examples = tuple(
            Example(id=f"d{i}", text=t, tokens=tuple(tokenize(t)), label=FAKE)
            for i, t in enumerate(texts)
        )
        return Dataset(examples=examples, split="train")

    def test_frequency_then_id_order(self):
        vocab = build_vocab(self._dataset("a a b"))
        assert vocab.token_to_id == {"a": 2, "b": 3}

    def test_min_count_filters(self):
        vocab = build_vocab(self._dataset("a a b"), min_count=2)
        assert "a" in vocab.token_to_id
        assert "b" not in vocab.token_to_id
        assert vocab.id_for("b") == UNK_ID

    def test_ties_broken_lexicographically(self):
        vocab = build_vocab(self._dataset("zeta apple zeta apple mango"))
        assert vocab.token_to_id == {"apple": 2, "zeta": 3, "mango": 4}

    def test_empty_corpus(self):
        with pytest.raises(EmptyDatasetError):
            build_vocab(self._dataset("...", "!!!"))

    def test_rejects_non_train_split(self):
        ds = self._dataset("a b c")
        test_ds = Dataset(examples=ds.examples, split="test")
        with pytest.raises(ProtocolError, match="training"):
            build_vocab(test_ds)

    def test_multiple_datasets_pool_counts(self):
        vocab = build_vocab([self._dataset("a b"), self._dataset("b c")])
        assert vocab.token_to_id == {"b": 2, "a": 3, "c": 4}


class TestEncode:
    @pytest.fixture
    def vocab(self):
        ds = Dataset(
            examples=(
                Example(id="x", text="", tokens=("cat", "dog", "cat"), label=FAKE),
            ),
            split="train",
        )
        return build_vocab(ds)  # cat=2, dog=3

    def test_padding(self, vocab):
        ex = Example(id="e", text="", tokens=("cat", "dog"))
        assert encode(ex, vocab, max_len=4).token_ids == (2, 3, 0, 0)

    def test_truncation(self, vocab):
        ex = Example(id="e", text="", tokens=("cat",) * 6)
        assert encode(ex, vocab, max_len=4).token_ids == (2, 2, 2, 2)

    def test_unknown_tokens(self, vocab):
        ex = Example(id="e", text="", tokens=("bird", "fish"))
        assert encode(ex, vocab, max_len=3).token_ids == (UNK_ID, UNK_ID, PAD_ID)

    def test_decode_recovers_known_prefix(self, vocab):
        ex = Example(id="e", text="", tokens=("dog", "bird", "cat"))
        ids = encode(ex, vocab, max_len=3).token_ids
        assert vocab.decode(ids) == ["dog", "<unk>", "cat"]

    def test_output_length_is_always_max_len(self, vocab):
        for n_tokens in range(0, 9):
            ex = Example(id="e", text="", tokens=("cat",) * n_tokens)
            assert len(encode(ex, vocab, max_len=5).token_ids) == 5


class TestDataset:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ProtocolError, match="duplicate"):
            Dataset(
                examples=(
                    Example(id="a", text="x", label=FAKE),
                    Example(id="a", text="y", label=TRUE),
                ),
            )

    def test_labeled_ids_follow_labels(self):
        ds = Dataset(
            examples=(
                Example(id="a", text="", label=FAKE),
                Example(id="b", text="", label=None),
                Example(id="c", text="", label=TRUE),
            ),
        )
        assert ds.labeled_ids == {"a", "c"}
        assert ds.n_labeled == 2
        assert ds.n_total == 3

    def test_bad_split_rejected(self):
        with pytest.raises(ProtocolError, match="split"):
            Dataset(examples=(), split="dev")

    def test_tensors_require_encoding(self):
        ds = Dataset(examples=(Example(id="a", text="", tokens=("x",), label=FAKE),))
        with pytest.raises(StateError, match="encode"):
            ds.tensors()

    def test_tensors_hidden_labels_are_minus_one(self):
        examples = (
            Example(id="a", text="", token_ids=(1, 0), label=FAKE),
            Example(id="b", text="", token_ids=(1, 1), label=None),
        )
        ds = Dataset(examples=examples)
        ids, labels = ds.tensors()
        assert ids.shape == (2, 2)
        assert labels.tolist() == [0, -1]

    def test_encode_dataset_sets_vocab_size(self):
        base = Dataset(
            examples=(Example(id="a", text="", tokens=("cat", "dog"), label=FAKE),),
            split="train",
        )
        vocab = build_vocab(base)
        encoded = encode_dataset(base, vocab, max_len=4)
        assert encoded.vocab_size == vocab.size == 4
        assert encoded.examples[0].token_ids == (2, 3, 0, 0)
