"""The two neural profiling machines: masked autoencoder and fixed-embedding predictor."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import BaseProfiler
from .errors import ValidationError
from .neural import (
    AdamOptimizer,
    FacetEmbeddings,
    FacetNetwork,
    backward,
    masked_cross_entropy,
)
from .store import DEV, ExemplarTable, MISSING, TRAIN

log = logging.getLogger(__name__)


@dataclass
class TrainingLog:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_loss: float = float("inf")
    stopped_early: bool = False
    untrained_facets: list[str] = field(default_factory=list)
    skipped_rows: int = 0


def _batches(order: np.ndarray, batch_size: int):
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def _oversample(
    batch: np.ndarray,
    cells: np.ndarray,
    rows_with_value: list[np.ndarray],
    rng: np.random.Generator,
) -> np.ndarray:
    """Append one value-bearing TRAIN exemplar for each facet absent from the batch."""
    extra = []
    for fi, candidates in enumerate(rows_with_value):
        if candidates.size == 0:
            continue
        if (cells[batch, fi] != MISSING).any():
            continue
        extra.append(candidates[rng.integers(candidates.size)])
    if not extra:
        return batch
    return np.concatenate([batch, np.array(extra, dtype=batch.dtype)])


class _NeuralProfilerMixin:
    """Shared minibatch/ADAM/early-stopping loop for both neural profilers."""

    def _run_training(
        self,
        table: ExemplarTable,
        train_idx: np.ndarray,
        params: dict[str, np.ndarray],
        rng: np.random.Generator,
        batch_loss_and_grads,
        dev_loss_fn,
    ) -> TrainingLog:
        cells = table.cells
        rows_with_value = [
            train_idx[cells[train_idx, fi] != MISSING] for fi in range(len(table.schema))
        ]
        logbook = TrainingLog()
        logbook.untrained_facets = [
            table.schema.facets[fi].name
            for fi, rows in enumerate(rows_with_value)
            if rows.size == 0
        ]
        for name in logbook.untrained_facets:
            log.warning("facet %r has no training values; its head stays untrained", name)

        adam = AdamOptimizer(params, learning_rate=self.learning_rate)
        best_params = {k: v.copy() for k, v in params.items()}
        epochs_since_best = 0
        for epoch in range(1, self.max_epochs + 1):
            order = train_idx[rng.permutation(train_idx.size)]
            epoch_loss, n_batches = 0.0, 0
            for batch in _batches(order, self.batch_size):
                batch = _oversample(batch, cells, rows_with_value, rng)
                loss, grads = batch_loss_and_grads(batch, rng)
                adam.step(params, grads)
                epoch_loss += loss
                n_batches += 1
            dev_loss = dev_loss_fn()
            logbook.epochs.append(
                {
                    "epoch": epoch,
                    "train_loss": epoch_loss / max(n_batches, 1),
                    "dev_loss": dev_loss,
                }
            )
            if dev_loss < logbook.best_dev_loss:
                logbook.best_dev_loss = dev_loss
                logbook.best_epoch = epoch
                best_params = {k: v.copy() for k, v in params.items()}
                epochs_since_best = 0
            else:
                epochs_since_best += 1
                if epochs_since_best >= self.patience:
                    logbook.stopped_early = True
                    break
        for k in params:
            params[k][...] = best_params[k]
        return logbook

    def _validate_common(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")


class AutoencoderProfiler(BaseProfiler, _NeuralProfilerMixin):
    """Denoising autoencoder over facet embeddings.

    Each facet is embedded into `embedding_size` reals; MISSING and
    dropout-dropped facets contribute zero blocks. The loss scores every known
    facet of the row, including the dropped ones, so the network learns to
    reconstruct evidence it cannot see.
    """

    def __init__(
        self,
        embedding_size: int = 30,
        hidden_units: int = 128,
        dropout: float = 0.5,
        batch_size: int = 64,
        max_epochs: int = 100,
        patience: int = 10,
        learning_rate: float = 1e-3,
        seed: int = 0,
    ):
        self.embedding_size = embedding_size
        self.hidden_units = hidden_units
        self.dropout = dropout
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, table: ExemplarTable) -> "AutoencoderProfiler":
        self._validate_common()
        if not 0 <= self.dropout < 1:
            raise ValidationError("dropout must be in [0, 1)")
        train_idx = table.split_rows(TRAIN)
        dev_idx = table.split_rows(DEV)
        if train_idx.size == 0 or dev_idx.size == 0:
            raise ValidationError("TRAIN and DEV splits must be non-empty")

        self.schema_ = table.schema
        vocab_sizes = [f.size for f in table.schema]
        rng = np.random.default_rng(self.seed)
        self.embeddings_ = FacetEmbeddings(vocab_sizes, self.embedding_size, rng)
        self.net_ = FacetNetwork(self.embeddings_.input_dim, self.hidden_units, vocab_sizes, rng)
        params = {**self.net_.params, **self.embeddings_.tables}

        cells = table.cells
        dev_cells = cells[dev_idx]

        def batch_loss_and_grads(batch, batch_rng):
            batch_cells = cells[batch]
            known = batch_cells != MISSING
            drop_mask = known & (batch_rng.random(batch_cells.shape) < self.dropout)
            x = self.embeddings_.encode(batch_cells, drop_mask)
            cache = self.net_.forward(x)
            loss = masked_cross_entropy(cache.probs, batch_cells)
            grads, d_x = backward(self.net_, cache, batch_cells)
            grads.update(self.embeddings_.input_gradients(batch_cells, d_x, drop_mask))
            return loss, grads

        def dev_loss_fn():
            x = self.embeddings_.encode(dev_cells)
            cache = self.net_.forward(x)
            return masked_cross_entropy(cache.probs, dev_cells)

        self.training_log_ = self._run_training(
            table, train_idx, params, rng, batch_loss_and_grads, dev_loss_fn
        )
        return self

    def predict_distribution(self, cells, target, vector=None) -> np.ndarray:
        self._check_fitted()
        evidence = np.asarray(cells).copy()
        evidence[target] = MISSING
        x = self.embeddings_.encode(evidence[None, :])
        return self.net_.forward(x).probs[target][0]


class EmbeddingProfiler(BaseProfiler, _NeuralProfilerMixin):
    """Predicts all facets from a fixed pretrained entity vector.

    Input vectors live on the table (sidecar-loaded) and are never updated;
    rows without a finite vector are skipped with a warning count.
    """

    def __init__(
        self,
        input_dim: int = 1000,
        hidden_units: int = 128,
        batch_size: int = 64,
        max_epochs: int = 100,
        patience: int = 10,
        learning_rate: float = 1e-3,
        seed: int = 0,
    ):
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, table: ExemplarTable) -> "EmbeddingProfiler":
        self._validate_common()
        if table.vectors is None:
            raise ValidationError("embedding profiler needs a table with row vectors")
        if table.vectors.shape[1] != self.input_dim:
            raise ValidationError(
                f"table vectors have dim {table.vectors.shape[1]}, expected {self.input_dim}"
            )
        have_vector = np.isfinite(table.vectors).all(axis=1)
        train_idx = table.split_rows(TRAIN)
        skipped = int((~have_vector[train_idx]).sum())
        if skipped:
            log.warning("%d TRAIN rows lack an input vector and are skipped", skipped)
        train_idx = train_idx[have_vector[train_idx]]
        dev_idx = table.split_rows(DEV)
        dev_idx = dev_idx[have_vector[dev_idx]]
        if train_idx.size == 0 or dev_idx.size == 0:
            raise ValidationError("TRAIN and DEV splits must have rows with vectors")

        self.schema_ = table.schema
        vocab_sizes = [f.size for f in table.schema]
        rng = np.random.default_rng(self.seed)
        self.net_ = FacetNetwork(self.input_dim, self.hidden_units, vocab_sizes, rng)
        params = self.net_.params

        cells, vectors = table.cells, table.vectors
        dev_cells, dev_x = cells[dev_idx], vectors[dev_idx]

        def batch_loss_and_grads(batch, batch_rng):
            batch_cells = cells[batch]
            cache = self.net_.forward(vectors[batch])
            loss = masked_cross_entropy(cache.probs, batch_cells)
            grads, _ = backward(self.net_, cache, batch_cells)
            return loss, grads

        def dev_loss_fn():
            cache = self.net_.forward(dev_x)
            return masked_cross_entropy(cache.probs, dev_cells)

        self.training_log_ = self._run_training(
            table, train_idx, params, rng, batch_loss_and_grads, dev_loss_fn
        )
        self.training_log_.skipped_rows = skipped
        return self

    def predict_distribution(self, cells, target, vector: Optional[np.ndarray] = None) -> np.ndarray:
        self._check_fitted()
        if vector is None:
            vector = np.zeros(self.input_dim)
        vector = np.asarray(vector, dtype=np.float64)
        return self.net_.forward(vector[None, :]).probs[target][0]
