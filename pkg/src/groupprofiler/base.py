"""Common profiler interface: sklearn-style fit/profile with param introspection."""
from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .store import ExemplarTable, FacetSchema, MISSING


def validate_query(schema: FacetSchema, known: Mapping[str, str]) -> np.ndarray:
    """Turn a {facet: value} mapping into a cells row (MISSING elsewhere)."""
    cells = np.full(len(schema), MISSING, dtype=np.int64)
    for facet, value in known.items():
        fi = schema.facet_index(facet)
        cells[fi] = schema.value_index(fi, value)
    return cells


@dataclass
class Profile:
    """Expectation distributions for every facet not fixed by the query."""

    fixed: dict[str, str]
    expectations: dict[str, np.ndarray]

    def top_values(self, schema: FacetSchema, facet: str, k: int = 10) -> list[tuple[str, float]]:
        dist = self.expectations[facet]
        fi = schema.facet_index(facet)
        vocab = schema.facets[fi].vocabulary
        order = sorted(range(len(dist)), key=lambda j: (-dist[j], vocab[j]))
        return [(vocab[j], float(dist[j])) for j in order[:k]]


@dataclass
class ShiftEntry:
    facet: str
    js_divergence: float
    top_before: str
    top_after: str
    argmax_changed: bool


@dataclass
class ShiftReport:
    base: dict[str, str]
    added: dict[str, str]
    entries: list[ShiftEntry] = field(default_factory=list)


def top_k_indices(dist: np.ndarray, vocab: Sequence[str], k: int) -> list[int]:
    """Indices of the k most probable values; ties break lexicographically."""
    order = sorted(range(len(dist)), key=lambda j: (-dist[j], vocab[j]))
    return order[:k]


class BaseProfiler:
    """Base estimator: constructor keyword args are hyperparameters.

    Subclasses set `self.schema_` in fit() and implement
    `predict_distribution(cells, target_index, vector=None)`.
    """

    schema_: FacetSchema

    def get_params(self, deep: bool = True) -> dict:
        params = {}
        for name in inspect.signature(type(self).__init__).parameters:
            if name in ("self", "args", "kwargs"):
                continue
            params[name] = getattr(self, name)
        return params

    def set_params(self, **params) -> "BaseProfiler":
        valid = set(self.get_params())
        for name, value in params.items():
            if name not in valid:
                raise ValidationError(
                    f"invalid parameter {name!r} for {type(self).__name__}"
                )
            setattr(self, name, value)
        return self

    def fit(self, table: ExemplarTable) -> "BaseProfiler":
        raise NotImplementedError

    def predict_distribution(
        self, cells: np.ndarray, target: int, vector: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Distribution over the target facet's vocabulary given evidence cells.

        The target facet's own cell is ignored as evidence.
        """
        raise NotImplementedError

    def _check_fitted(self) -> None:
        if not hasattr(self, "schema_"):
            raise ValidationError(f"{type(self).__name__} is not fitted")

    def profile(
        self, known: Mapping[str, str], vector: Optional[np.ndarray] = None
    ) -> Profile:
        """Full expectation distributions for every facet not fixed in `known`."""
        self._check_fitted()
        cells = validate_query(self.schema_, known)
        expectations = {}
        for fi, facet in enumerate(self.schema_):
            if cells[fi] != MISSING:
                continue
            expectations[facet.name] = self.predict_distribution(cells, fi, vector=vector)
        return Profile(dict(known), expectations)

    def shift(
        self,
        base: Mapping[str, str],
        added: Mapping[str, str],
        vector: Optional[np.ndarray] = None,
    ) -> ShiftReport:
        """Per-facet divergence between profile(base) and profile(base + added)."""
        from .evaluation import js_divergence

        overlap = set(base) & set(added)
        if any(base[f] != added[f] for f in overlap):
            raise ValidationError("added facts contradict the base query")
        combined = {**base, **added}
        before = self.profile(base, vector=vector)
        after = self.profile(combined, vector=vector)
        report = ShiftReport(dict(base), dict(added))
        for facet_name, dist_after in after.expectations.items():
            dist_before = before.expectations[facet_name]
            fi = self.schema_.facet_index(facet_name)
            vocab = self.schema_.facets[fi].vocabulary
            top_b = top_k_indices(dist_before, vocab, 1)[0]
            top_a = top_k_indices(dist_after, vocab, 1)[0]
            report.entries.append(
                ShiftEntry(
                    facet=facet_name,
                    js_divergence=js_divergence(dist_before, dist_after),
                    top_before=vocab[top_b],
                    top_after=vocab[top_a],
                    argmax_changed=top_b != top_a,
                )
            )
        return report
