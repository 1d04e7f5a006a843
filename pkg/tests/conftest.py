import numpy as np
import pytest

from semproj.embeddings import EmbeddingStore
from semproj.synthetic import make_world


def make_store(mapping):
    tokens = list(mapping)
    return EmbeddingStore(tuple(tokens), np.array([mapping[t] for t in tokens], dtype=np.float32))


@pytest.fixture
def toy_store():
    return make_store({
        "dog": [1.0, 0.0, 0.0, 0.5],
        "north": [0.0, 2.0, 0.0, 0.0],
        "dakota": [2.0, 0.0, 4.0, 1.0],
        "big": [3.0, 1.0, 0.0, 0.0],
        "small": [-1.0, 1.0, 0.0, 0.0],
        "whale": [4.0, 0.5, 1.0, 0.0],
        "mouse": [-2.0, 0.5, 1.0, 0.0],
        "new-york": [0.5, 0.5, 0.5, 0.5],
    })


@pytest.fixture(scope="session")
def world():
    return make_world(seed=7)


# Acceptance results, printed as one line per criterion at the end of the run.
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {number}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
