import pytest

from segindex.corpus import Document, build_vocabulary
from segindex.embeddings import pseudo_provider
from segindex.synthetic import make_collection

ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.fixture
def toy_docs():
    return [Document.from_text("d1", "a b"), Document.from_text("d2", "b c")]


@pytest.fixture
def toy_vocab(toy_docs):
    return build_vocabulary(toy_docs, 0.0, 0.0)


@pytest.fixture(scope="session")
def collection():
    return make_collection(n_docs=60, n_queries=10, seed=3)


@pytest.fixture(scope="session")
def provider16():
    return pseudo_provider(16, seed=7)


@pytest.fixture(scope="session")
def vocab(collection):
    return build_vocabulary(collection.docs)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")
