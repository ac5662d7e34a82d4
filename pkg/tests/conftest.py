import numpy as np
import pytest

from groupprofiler.store import RawRecord, ingest
from groupprofiler.synthetic import deterministic_corpus, separable_vector_corpus


@pytest.fixture(scope="session")
def toy_corpus():
    """Six rows over two facets, small enough to enumerate by hand."""
    records = [
        RawRecord("e1", [("color", "red"), ("size", "big")]),
        RawRecord("e2", [("color", "red"), ("size", "big")]),
        RawRecord("e3", [("color", "red"), ("size", "small")]),
        RawRecord("e4", [("color", "blue"), ("size", "small")]),
        RawRecord("e5", [("color", "blue"), ("size", "small")]),
        RawRecord("e6", [("color", "red"), ("size", "big")]),
    ]
    return ingest(records, cap=3000, seed=3)


@pytest.fixture(scope="session")
def synthetic():
    schema, table, mapping = deterministic_corpus(n_rows=1000, n_values=8, seed=7)
    return schema, table, mapping


@pytest.fixture(scope="session")
def trained_ae(synthetic):
    from groupprofiler.models import AutoencoderProfiler

    _, table, _ = synthetic
    model = AutoencoderProfiler(
        embedding_size=16, hidden_units=64, max_epochs=40, seed=5
    )
    model.fit(table)
    return model


@pytest.fixture(scope="session")
def vector_corpus():
    return separable_vector_corpus(n_rows=600, dim=16, seed=11)


def random_simplex(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.dirichlet(np.ones(dim))
