"""Reference profilers: most-frequent-value and Naive Bayes with Laplace smoothing."""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .base import BaseProfiler
from .errors import ValidationError
from .store import ExemplarTable, MISSING, TRAIN


class MostFrequentValueProfiler(BaseProfiler):
    """Predicts each facet's training frequency distribution, ignoring evidence."""

    def __init__(self):
        pass

    def fit(self, table: ExemplarTable) -> "MostFrequentValueProfiler":
        self.schema_ = table.schema
        self.distributions_: list[Optional[np.ndarray]] = []
        for facet in table.schema:
            counts = np.array(facet.value_counts, dtype=np.float64)
            total = counts.sum()
            self.distributions_.append(counts / total if total > 0 else None)
        return self

    def predict_distribution(self, cells, target, vector=None) -> np.ndarray:
        self._check_fitted()
        dist = self.distributions_[target]
        if dist is None:
            raise ValidationError(
                f"facet {self.schema_.facets[target].name!r} has no training values"
            )
        return dist.copy()


class NaiveBayesProfiler(BaseProfiler):
    """P(target | evidence) under facet-independence, Laplace-smoothed.

    Products run in log space; conditional count tables are built lazily per
    (target, evidence) pair from the stored training cells and cached.
    """

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def fit(self, table: ExemplarTable) -> "NaiveBayesProfiler":
        if self.alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        self.schema_ = table.schema
        self.train_cells_ = table.cells[table.split == TRAIN].copy()
        self._cond_cache: dict[tuple[int, int], np.ndarray] = {}
        return self

    def _log_prior(self, target: int) -> np.ndarray:
        facet = self.schema_.facets[target]
        col = self.train_cells_[:, target]
        known = col[col != MISSING]
        if known.size == 0:
            raise ValidationError(f"facet {facet.name!r} has no training values")
        counts = np.bincount(known, minlength=facet.size).astype(np.float64)
        smoothed = counts + self.alpha
        return np.log(smoothed) - np.log(smoothed.sum())

    def _log_conditional(self, evidence: int, target: int) -> np.ndarray:
        """log P(evidence value | target class), shape (v_target, v_evidence)."""
        key = (evidence, target)
        cached = self._cond_cache.get(key)
        if cached is not None:
            return cached
        vt = self.schema_.facets[target].size
        ve = self.schema_.facets[evidence].size
        tcol = self.train_cells_[:, target]
        ecol = self.train_cells_[:, evidence]
        both = (tcol != MISSING) & (ecol != MISSING)
        counts = np.zeros((vt, ve))
        np.add.at(counts, (tcol[both], ecol[both]), 1.0)
        smoothed = counts + self.alpha
        table = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        self._cond_cache[key] = table
        return table

    def predict_distribution(self, cells, target, vector=None) -> np.ndarray:
        self._check_fitted()
        log_post = self._log_prior(target)
        for fi in range(len(self.schema_)):
            if fi == target or cells[fi] == MISSING:
                continue
            log_post = log_post + self._log_conditional(fi, target)[:, cells[fi]]
        return np.exp(log_post - logsumexp(log_post))
