"""Knowledge profiling over sparse entity-facet tables."""

from .base import BaseProfiler, Profile, ShiftReport
from .baselines import MostFrequentValueProfiler, NaiveBayesProfiler
from .checkpoint import load_checkpoint, save_checkpoint
from .dataspace import dataspace_report, dataspace_size, facet_entropy
from .evaluation import (
    aggregate_judgments,
    class_overlap_prf,
    js_divergence,
    shift_curve,
    topk_accuracy,
)
from .models import AutoencoderProfiler, EmbeddingProfiler
from .store import (
    ExemplarTable,
    FacetSchema,
    MISSING,
    RawRecord,
    derive_date_facets,
    ingest,
    read_tsv,
    resolve_multivalue,
)

__all__ = [
    "AutoencoderProfiler",
    "BaseProfiler",
    "EmbeddingProfiler",
    "ExemplarTable",
    "FacetSchema",
    "MISSING",
    "MostFrequentValueProfiler",
    "NaiveBayesProfiler",
    "Profile",
    "RawRecord",
    "ShiftReport",
    "aggregate_judgments",
    "class_overlap_prf",
    "dataspace_report",
    "dataspace_size",
    "derive_date_facets",
    "facet_entropy",
    "ingest",
    "js_divergence",
    "load_checkpoint",
    "read_tsv",
    "resolve_multivalue",
    "save_checkpoint",
    "shift_curve",
    "topk_accuracy",
]

__version__ = "0.1.0"
