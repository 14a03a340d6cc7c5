"""Corpus ingestion, tokenization, encoding, masking, and event tooling."""

from tdsl.corpus.folds import loeo_folds
from tdsl.corpus.masking import (
    apply_mask_manifest,
    labeled_count,
    load_mask_manifest,
    mask_labels,
    save_mask_manifest,
)
from tdsl.corpus.parsers import binarize_liar_label, parse_liar, parse_pheme, write_pheme
from tdsl.corpus.records import CLASS_NAMES, FAKE, TRUE, Dataset, Example
from tdsl.corpus.text import URL_TOKEN, USER_TOKEN, tokenize
from tdsl.corpus.tfidf import TfidfReport, tfidf_top_words, write_tfidf_csv
from tdsl.corpus.vocab import (
    PAD_ID,
    PAD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    Vocabulary,
    build_vocab,
    encode,
    encode_dataset,
)

__all__ = [
    "CLASS_NAMES",
    "FAKE",
    "TRUE",
    "Dataset",
    "Example",
    "PAD_ID",
    "PAD_TOKEN",
    "TfidfReport",
    "UNK_ID",
    "UNK_TOKEN",
    "URL_TOKEN",
    "USER_TOKEN",
    "Vocabulary",
    "apply_mask_manifest",
    "binarize_liar_label",
    "build_vocab",
    "encode",
    "encode_dataset",
    "labeled_count",
    "load_mask_manifest",
    "loeo_folds",
    "mask_labels",
    "parse_liar",
    "parse_pheme",
    "save_mask_manifest",
    "tfidf_top_words",
    "tokenize",
    "write_pheme",
    "write_tfidf_csv",
]
