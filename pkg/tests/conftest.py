import pytest

from fixtures import write_liar_fixture, write_pheme_fixture

from tdsl.corpus import parse_liar, parse_pheme


@pytest.fixture(scope="session")
def liar_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("liar")
    write_liar_fixture(directory)
    return directory


@pytest.fixture(scope="session")
def liar_train(liar_dir):
    return parse_liar(liar_dir / "train.tsv", split="train")


@pytest.fixture(scope="session")
def pheme_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("pheme") / "pheme.tsv"
    return write_pheme_fixture(path)


@pytest.fixture(scope="session")
def pheme_dataset(pheme_path):
    return parse_pheme(pheme_path)
