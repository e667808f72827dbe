import os

import numpy as np
import pytest

from randebias._backend import available_backends
from randebias.embedding_io import EmbeddingSet, Vocabulary
from randebias.synthetic import make_biased_embedding

DATA = os.path.join(os.path.dirname(__file__), "data")

BACKENDS = available_backends()


def random_embedding(n, dim, seed=0, prefix="t"):
    rng = np.random.default_rng(seed)
    words = [f"{prefix}{i}" for i in range(n)]
    return EmbeddingSet(Vocabulary(words), rng.normal(size=(n, dim)))


@pytest.fixture(params=sorted(BACKENDS))
def kernels(request):
    return BACKENDS[request.param]


@pytest.fixture(scope="session")
def synthetic_small():
    return make_biased_embedding(n_words=120, dim=20, n_clusters=8, seed=3)


@pytest.fixture
def data_dir():
    return DATA


# acceptance criteria record their outcome here; printed after the run
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (status, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{status:4s}  {name}" + (f"  ({detail})" if detail else ""))
