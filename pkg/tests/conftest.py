import pytest

from screenrank.data import synthetic_dataset

# (criterion name, "PASS"/"FAIL") pairs appended by the acceptance suite.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {status}: {name}")


@pytest.fixture(scope="session")
def dataset_paths():
    return synthetic_dataset()


@pytest.fixture(scope="session")
def synthetic(dataset_paths):
    from screenrank import corpus

    return {
        "topics": corpus.read_topics(dataset_paths["topics"]),
        "qrels": corpus.read_qrels(dataset_paths["qrels"]),
        "store": corpus.read_corpus(dataset_paths["corpus"]),
    }
