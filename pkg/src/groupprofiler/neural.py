"""Numerical substrate for the neural profilers.

A single tanh hidden layer feeding per-facet softmax heads, trained with
masked cross-entropy, manual backpropagation, and ADAM. Everything is float64
numpy; a central finite-difference checker verifies the analytic gradients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .store import MISSING


def glorot_uniform(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    s = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class AdamOptimizer:
    """Standard ADAM with bias correction over a named parameter dict."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            p = params[name]
            if g.shape != p.shape:
                raise ShapeMismatchError(p.shape, g.shape, context=f"gradient of {name}")
            m = self.m[name] = b1 * self.m[name] + (1 - b1) * g
            v = self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class ForwardCache:
    x: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    probs: list[np.ndarray]


class FacetNetwork:
    """Dense input -> tanh hidden -> one softmax head per facet."""

    def __init__(
        self,
        input_dim: int,
        hidden_units: int,
        vocab_sizes: Sequence[int],
        rng: Optional[np.random.Generator] = None,
    ):
        if rng is None:
            rng = np.random.default_rng(0)
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        self.vocab_sizes = list(vocab_sizes)
        self.params: dict[str, np.ndarray] = {
            "W1": glorot_uniform((input_dim, hidden_units), rng),
            "b1": np.zeros(hidden_units),
        }
        for i, v in enumerate(self.vocab_sizes):
            self.params[f"head_W{i}"] = glorot_uniform((hidden_units, max(v, 1)), rng)
            self.params[f"head_b{i}"] = np.zeros(max(v, 1))

    def forward(self, x: np.ndarray) -> ForwardCache:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ShapeMismatchError((x.shape[0], self.input_dim), x.shape, context="forward input")
        hidden_pre = x @ self.params["W1"] + self.params["b1"]
        hidden = np.tanh(hidden_pre)
        probs = []
        for i in range(len(self.vocab_sizes)):
            logits = hidden @ self.params[f"head_W{i}"] + self.params[f"head_b{i}"]
            probs.append(softmax(logits))
        return ForwardCache(x, hidden_pre, hidden, probs)

    def predict_facet(self, x: np.ndarray, facet: int) -> np.ndarray:
        return self.forward(x).probs[facet][0]


def masked_cross_entropy(probs: list[np.ndarray], targets: np.ndarray) -> float:
    """Mean over rows of the summed negative log-likelihood of known targets.

    `targets` is (batch, n_facets) of vocabulary indices, MISSING excluded
    from the loss. Natural log.
    """
    targets = np.atleast_2d(targets)
    batch = targets.shape[0]
    total = 0.0
    for i, z in enumerate(probs):
        t = targets[:, i]
        known = t != MISSING
        if not known.any():
            continue
        idx = t[known]
        if idx.min() < 0 or idx.max() >= z.shape[1]:
            raise ValidationError(f"target index out of vocabulary for facet {i}")
        total += -np.log(z[known, idx]).sum()
    return total / batch


def backward(
    net: FacetNetwork, cache: ForwardCache, targets: np.ndarray
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of the masked cross-entropy w.r.t. all parameters and the input."""
    targets = np.atleast_2d(targets)
    batch = targets.shape[0]
    grads: dict[str, np.ndarray] = {}
    d_hidden = np.zeros_like(cache.hidden)
    for i, z in enumerate(cache.probs):
        t = targets[:, i]
        known = t != MISSING
        # softmax + CE composite: d_logits = z - onehot(target), masked rows zero
        d_logits = z.copy()
        d_logits[np.arange(batch), np.where(known, t, 0)] -= 1.0
        d_logits[~known] = 0.0
        d_logits /= batch
        grads[f"head_W{i}"] = cache.hidden.T @ d_logits
        grads[f"head_b{i}"] = d_logits.sum(axis=0)
        d_hidden += d_logits @ net.params[f"head_W{i}"].T
    d_pre = d_hidden * (1.0 - cache.hidden**2)
    grads["W1"] = cache.x.T @ d_pre
    grads["b1"] = d_pre.sum(axis=0)
    d_x = d_pre @ net.params["W1"].T
    return grads, d_x


class FacetEmbeddings:
    """Per-facet embedding tables; MISSING or dropped facets contribute zeros."""

    def __init__(
        self,
        vocab_sizes: Sequence[int],
        embedding_size: int,
        rng: Optional[np.random.Generator] = None,
    ):
        if rng is None:
            rng = np.random.default_rng(0)
        self.embedding_size = embedding_size
        self.vocab_sizes = list(vocab_sizes)
        self.tables: dict[str, np.ndarray] = {
            f"emb{i}": glorot_uniform((max(v, 1), embedding_size), rng)
            for i, v in enumerate(self.vocab_sizes)
        }

    @property
    def input_dim(self) -> int:
        return len(self.vocab_sizes) * self.embedding_size

    def encode(self, cells: np.ndarray, drop_mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Concatenate facet embeddings for each row; masked blocks are zero."""
        cells = np.atleast_2d(cells)
        batch, n = cells.shape
        ne = self.embedding_size
        x = np.zeros((batch, n * ne))
        for i in range(n):
            col = cells[:, i]
            active = col != MISSING
            if drop_mask is not None:
                active = active & ~drop_mask[:, i]
            if active.any():
                x[active, i * ne:(i + 1) * ne] = self.tables[f"emb{i}"][col[active]]
        return x

    def input_gradients(
        self,
        cells: np.ndarray,
        d_x: np.ndarray,
        drop_mask: Optional[np.ndarray] = None,
    ) -> dict[str, np.ndarray]:
        """Scatter the input gradient back into the embedding rows used."""
        cells = np.atleast_2d(cells)
        _, n = cells.shape
        ne = self.embedding_size
        grads = {k: np.zeros_like(t) for k, t in self.tables.items()}
        for i in range(n):
            col = cells[:, i]
            active = col != MISSING
            if drop_mask is not None:
                active = active & ~drop_mask[:, i]
            if active.any():
                np.add.at(grads[f"emb{i}"], col[active], d_x[active, i * ne:(i + 1) * ne])
        return grads


@dataclass
class GradCheckReport:
    per_param: dict[str, float] = field(default_factory=dict)
    max_relative_error: float = 0.0
    passed: bool = False
    failure: Optional[str] = None


def finite_difference_check(
    loss_fn: Callable[[dict[str, np.ndarray]], float],
    params: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    h: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Relative error per coordinate is |a - n| / max(1, |a| + |n|) so that
    near-zero gradients do not blow up the ratio.
    """
    report = GradCheckReport()
    for name, p in params.items():
        a = analytic[name]
        worst = 0.0
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_fn(params)
            p[idx] = orig - h
            lm = loss_fn(params)
            p[idx] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                report.failure = f"non-finite loss perturbing {name}{idx}"
                report.passed = False
                return report
            numeric = (lp - lm) / (2 * h)
            err = abs(a[idx] - numeric) / max(1.0, abs(a[idx]) + abs(numeric))
            worst = max(worst, err)
        report.per_param[name] = worst
        report.max_relative_error = max(report.max_relative_error, worst)
    report.passed = report.max_relative_error < tolerance
    return report
