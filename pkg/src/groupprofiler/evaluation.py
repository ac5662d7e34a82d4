"""Measurement protocols: top-k accuracy, shift curves, judgment aggregation,
distribution divergences, and class-overlap precision/recall/F1."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .base import BaseProfiler, top_k_indices
from .errors import ValidationError
from .store import ExemplarTable, MISSING, TEST

log = logging.getLogger(__name__)

NONE_OF_THE_ABOVE = "NONE_OF_THE_ABOVE"
CANNOT_DECIDE = "CANNOT_DECIDE"
OTHER_CLASS = "__OTHER__"

LOW_CONFIDENCE_BUCKET = 20


# --- divergences ----------------------------------------------------------

def _check_pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"distribution support mismatch: {p.shape} vs {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if (d < 0).any():
            raise ValidationError(f"{name} has negative mass")
        if abs(d.sum() - 1.0) > 1e-6:
            raise ValidationError(f"{name} sums to {d.sum()}, not 1")
    return p, q


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    with np.errstate(divide="ignore"):
        ratio = np.log2(p[mask]) - np.log2(q[mask])
    return float(np.dot(p[mask], ratio))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in bits; symmetric, in [0, 1]."""
    p, q = _check_pair(p, q)
    m = (p + q) / 2.0
    return 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m)


def js_distance(p, q) -> float:
    return math.sqrt(max(js_divergence(p, q), 0.0))


def kl_divergence(p, q) -> float:
    p, q = _check_pair(p, q)
    return _kl_bits(p, q)


def kl_divergence_avg(p, q) -> float:
    return 0.5 * (kl_divergence(p, q) + kl_divergence(q, p))


def kl_divergence_max(p, q) -> float:
    return max(kl_divergence(p, q), kl_divergence(q, p))


def cosine_distance(p, q) -> float:
    p, q = _check_pair(p, q)
    denom = np.linalg.norm(p) * np.linalg.norm(q)
    if denom == 0:
        raise ValidationError("zero-norm distribution")
    return 1.0 - float(np.dot(p, q) / denom)


DIVERGENCE_METRICS = {
    "js_divergence": js_divergence,
    "js_distance": js_distance,
    "kl_divergence": kl_divergence,
    "kl_divergence_avg": kl_divergence_avg,
    "kl_divergence_max": kl_divergence_max,
    "cosine_distance": cosine_distance,
}


def metric_agreement(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]], reference: str = "js_divergence"
) -> dict[str, float]:
    """Spearman correlation of every metric against the reference over sample pairs."""
    scores = {name: [fn(p, q) for p, q in pairs] for name, fn in DIVERGENCE_METRICS.items()}
    ref = scores[reference]
    return {
        name: float(spearmanr(ref, vals).statistic)
        for name, vals in scores.items()
        if name != reference
    }


# --- accuracy -------------------------------------------------------------

@dataclass
class FacetAccuracy:
    facet: str
    evaluated: int
    top_k: dict[int, float] = field(default_factory=dict)  # k -> accuracy, None if n/a


@dataclass
class AccuracyReport:
    per_facet: list[FacetAccuracy]
    ks: tuple[int, ...]

    def to_rows(self) -> list[dict]:
        rows = []
        for fa in self.per_facet:
            row = {"facet": fa.facet, "evaluated": fa.evaluated}
            for k in self.ks:
                row[f"top{k}"] = fa.top_k.get(k)
            rows.append(row)
        return rows


def topk_accuracy(
    model: BaseProfiler,
    table: ExemplarTable,
    ks: Sequence[int] = (1, 3),
    split: int = TEST,
    vectors: Optional[np.ndarray] = None,
) -> AccuracyReport:
    """Hide each known test cell in turn and score top-k retrieval of it.

    Facets with no known value in the split are reported as N/A (None).
    """
    ks = tuple(ks)
    rows = table.split_rows(split)
    if vectors is None:
        vectors = table.vectors
    schema = model.schema_
    hits = {fi: {k: 0 for k in ks} for fi in range(len(schema))}
    counts = {fi: 0 for fi in range(len(schema))}
    for r in rows:
        cells = table.cells[r]
        vec = vectors[r] if vectors is not None else None
        for fi in range(len(schema)):
            truth = cells[fi]
            if truth == MISSING:
                continue
            evidence = cells.copy()
            evidence[fi] = MISSING
            dist = model.predict_distribution(evidence, fi, vector=vec)
            vocab = schema.facets[fi].vocabulary
            counts[fi] += 1
            top = top_k_indices(dist, vocab, max(ks))
            for k in ks:
                if truth in top[:k]:
                    hits[fi][k] += 1
    report = AccuracyReport([], ks)
    for fi, facet in enumerate(schema):
        n = counts[fi]
        fa = FacetAccuracy(facet.name, n)
        for k in ks:
            fa.top_k[k] = (hits[fi][k] / n) if n else None
        report.per_facet.append(fa)
    return report


@dataclass
class ShiftBucket:
    known_facets: int
    top1: float
    top3: float
    n: int
    low_confidence: bool


@dataclass
class ShiftCurve:
    facet: str
    buckets: list[ShiftBucket]
    spearman_rho: Optional[float]
    regime: str  # positive | none | negative

    def to_csv(self) -> str:
        lines = ["known_facets,top1,top3,n,low_confidence"]
        for b in self.buckets:
            lines.append(
                f"{b.known_facets},{b.top1:.6f},{b.top3:.6f},{b.n},{int(b.low_confidence)}"
            )
        return "\n".join(lines) + "\n"


def shift_curve(
    model: BaseProfiler,
    table: ExemplarTable,
    facet: str,
    split: int = TEST,
    vectors: Optional[np.ndarray] = None,
) -> ShiftCurve:
    """Accuracy for one facet, bucketed by the number of known evidence facets."""
    fi = model.schema_.facet_index(facet)
    rows = table.split_rows(split)
    if vectors is None:
        vectors = table.vectors
    vocab = model.schema_.facets[fi].vocabulary
    by_bucket: dict[int, list[tuple[bool, bool]]] = {}
    for r in rows:
        cells = table.cells[r]
        truth = cells[fi]
        if truth == MISSING:
            continue
        evidence = cells.copy()
        evidence[fi] = MISSING
        n_known = int((evidence != MISSING).sum())
        vec = vectors[r] if vectors is not None else None
        dist = model.predict_distribution(evidence, fi, vector=vec)
        top = top_k_indices(dist, vocab, 3)
        by_bucket.setdefault(n_known, []).append((truth == top[0], truth in top))
    buckets = []
    for n_known in sorted(by_bucket):
        outcomes = by_bucket[n_known]
        n = len(outcomes)
        buckets.append(
            ShiftBucket(
                known_facets=n_known,
                top1=sum(t1 for t1, _ in outcomes) / n,
                top3=sum(t3 for _, t3 in outcomes) / n,
                n=n,
                low_confidence=n < LOW_CONFIDENCE_BUCKET,
            )
        )
    rho: Optional[float] = None
    regime = "none"
    if len(buckets) >= 2:
        rho_val = spearmanr(
            [b.known_facets for b in buckets], [b.top1 for b in buckets]
        ).statistic
        rho = None if np.isnan(rho_val) else float(rho_val)
        if rho is not None:
            if rho >= 0.3:
                regime = "positive"
            elif rho <= -0.3:
                regime = "negative"
    return ShiftCurve(facet, buckets, rho, regime)


# --- human judgments ------------------------------------------------------

@dataclass
class JudgmentProfile:
    known: dict[str, str]
    target: str
    options: list[str]  # top-10 value labels, in display order
    judgments: list[str]  # option labels, NONE_OF_THE_ABOVE, or CANNOT_DECIDE


def read_judgments(path) -> list[JudgmentProfile]:
    """JSON lines, one incomplete profile per line."""
    profiles = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            profiles.append(
                JudgmentProfile(
                    known=doc.get("known", {}),
                    target=doc["target"],
                    options=list(doc["options"]),
                    judgments=list(doc["judgments"]),
                )
            )
    return profiles


def aggregate_judgments(judgments: Sequence[str], options: Sequence[str]) -> np.ndarray:
    """Combine worker votes into one distribution over options + the outside class.

    NONE_OF_THE_ABOVE maps onto the lumped outside-top-10 class;
    CANNOT_DECIDE spreads a 1/N vote over all N classes.
    """
    if not judgments:
        raise ValidationError("empty judgment list")
    classes = list(options) + [OTHER_CLASS]
    n_classes = len(classes)
    index = {label: i for i, label in enumerate(classes)}
    votes = np.zeros(n_classes)
    for j in judgments:
        if j == CANNOT_DECIDE:
            votes += 1.0 / n_classes
        elif j == NONE_OF_THE_ABOVE:
            votes[index[OTHER_CLASS]] += 1.0
        elif j in index:
            votes[index[j]] += 1.0
        else:
            raise ValidationError(f"judgment {j!r} is not among the declared options")
    return votes / votes.sum()


def system_distribution_over_options(
    model: BaseProfiler, known: dict[str, str], target: str, options: Sequence[str]
) -> np.ndarray:
    """Model distribution projected onto the option classes + lumped outside mass."""
    profile = model.profile(known)
    fi = model.schema_.facet_index(target)
    facet = model.schema_.facets[fi]
    dist = profile.expectations[target]
    out = np.zeros(len(options) + 1)
    for i, label in enumerate(options):
        if label in facet.vocabulary:
            out[i] = dist[facet.vocabulary.index(label)]
    out[-1] = max(0.0, 1.0 - out[:-1].sum())
    return out / out.sum()


def class_overlap_prf(
    system_set: Iterable[str], human_set: Iterable[str]
) -> tuple[Optional[float], Optional[float], Optional[float]]:
    """Set-overlap precision/recall/F1; empty human set makes recall undefined."""
    sys_set, hum_set = set(system_set), set(human_set)
    overlap = len(sys_set & hum_set)
    precision = overlap / len(sys_set) if sys_set else None
    recall = overlap / len(hum_set) if hum_set else None
    if not precision or recall is None or precision + recall == 0:
        f1 = 0.0 if (precision is not None and recall is not None) else None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def above_threshold_classes(
    dist: np.ndarray, labels: Sequence[str], threshold: Optional[float] = None
) -> set[str]:
    """Classes carrying more than the indifference level 1/N of the mass."""
    if threshold is None:
        threshold = 1.0 / len(dist)
    return {labels[i] for i in range(len(dist)) if dist[i] > threshold}


@dataclass
class HumanEvalRow:
    target: str
    known_count: int
    divergence: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def human_evaluation(
    model: BaseProfiler,
    profiles: Sequence[JudgmentProfile],
    metric: str = "js_divergence",
) -> list[HumanEvalRow]:
    """Per-profile divergence between model and aggregated human expectations."""
    fn = DIVERGENCE_METRICS[metric]
    rows = []
    for jp in profiles:
        human = aggregate_judgments(jp.judgments, jp.options)
        system = system_distribution_over_options(model, jp.known, jp.target, jp.options)
        labels = list(jp.options) + [OTHER_CLASS]
        p, r, f1 = class_overlap_prf(
            above_threshold_classes(system, labels),
            above_threshold_classes(human, labels),
        )
        rows.append(
            HumanEvalRow(
                target=jp.target,
                known_count=len(jp.known),
                divergence=fn(system, human),
                precision=p,
                recall=r,
                f1=f1,
            )
        )
    return rows
