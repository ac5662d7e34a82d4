"""Seeded synthetic corpora for tests, demos, and the EMB vector sidecar."""
from __future__ import annotations

import numpy as np

from .store import ExemplarTable, FacetSchema, RawRecord, ingest


def deterministic_corpus(
    n_rows: int = 1000, n_values: int = 8, seed: int = 7, noise_facet: bool = True
) -> tuple[FacetSchema, ExemplarTable, dict[str, str]]:
    """Corpus where facet B is a fixed permutation f of facet A.

    A is uniform over n_values labels, so B's marginal is near-uniform and
    the Bayes-optimal accuracy predicting B from A is 1.0. Returns the
    mapping f as {a_label: b_label}.
    """
    rng = np.random.default_rng(seed)
    a_labels = [f"a{i}" for i in range(n_values)]
    b_labels = [f"b{i}" for i in range(n_values)]
    perm = rng.permutation(n_values)
    mapping = {a_labels[i]: b_labels[perm[i]] for i in range(n_values)}
    records = []
    for r in range(n_rows):
        a = a_labels[int(rng.integers(n_values))]
        rec = RawRecord(f"e{r:05d}", [("A", a), ("B", mapping[a])])
        if noise_facet:
            rec.assertions.append(("C", f"c{int(rng.integers(3))}"))
        records.append(rec)
    schema, table = ingest(records, cap=3000, seed=seed)
    return schema, table, mapping


def separable_vector_corpus(
    n_rows: int = 600, dim: int = 16, seed: int = 11
) -> tuple[FacetSchema, ExemplarTable]:
    """Corpus whose facet B is encoded in the sign of vector coordinate 0."""
    rng = np.random.default_rng(seed)
    records = []
    vectors = np.zeros((n_rows, dim))
    for r in range(n_rows):
        cls = int(rng.integers(2))
        vec = rng.normal(scale=0.3, size=dim)
        vec[0] = (1.0 if cls == 1 else -1.0) + rng.normal(scale=0.1)
        vectors[r] = vec
        records.append(RawRecord(f"e{r:05d}", [("B", f"b{cls}")]))
    schema, table = ingest(records, cap=3000, seed=seed)
    # ingest keeps input row order, so vectors align with table rows
    table.vectors = vectors
    return schema, table


def generate_vectors(entity_ids, dim: int = 1000, seed: int = 0) -> np.ndarray:
    """Deterministic stand-in for pretrained entity vectors."""
    rng = np.random.default_rng(seed)
    return rng.normal(size=(len(entity_ids), dim))
