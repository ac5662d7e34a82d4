"""Quantification of the data value space: per-facet entropy and global size/density."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ValidationError
from .store import ExemplarTable, FacetSchema, MISSING, TRAIN

log = logging.getLogger(__name__)


def facet_entropy(counts: Sequence[int]) -> tuple[float, float]:
    """Entropy H (bits) and normalized entropy H' of one facet's value counts.

    H' divides by log2 of the number of observed values, and is defined as 0
    when that number is <= 1.
    """
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValidationError("negative category count")
    n = sum(counts)
    if n == 0:
        raise ValidationError("all-zero category counts")
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / n
            h -= p * math.log2(p)
    h_norm = h / math.log2(n) if n > 1 else 0.0
    return h, h_norm


@dataclass
class FacetSpaceRecord:
    facet: str
    n_ex: int
    v_i: int
    entropy_bits: Optional[float]
    entropy_normalized: Optional[float]


@dataclass
class DataspaceReport:
    facets: list[FacetSpaceRecord]
    n_train_rows: int
    d_size: int
    d_avg_density: Fraction
    log10_d_size: float
    log10_d_avg_density: float

    def to_json(self) -> dict:
        return {
            "facets": [
                {
                    "facet": r.facet,
                    "n_ex": r.n_ex,
                    "v_i": r.v_i,
                    "H": r.entropy_bits,
                    "H_norm": r.entropy_normalized,
                }
                for r in self.facets
            ],
            "n_train_rows": self.n_train_rows,
            "d_size": str(self.d_size),
            "d_avg_density": str(self.d_avg_density),
            "log10_d_size": self.log10_d_size,
            "log10_d_avg_density": self.log10_d_avg_density,
        }

    def to_text(self) -> str:
        """Aligned-column table, one facet per line."""
        rows = [("facet", "n_ex", "v_i", "H", "H'")]
        for r in self.facets:
            rows.append(
                (
                    r.facet,
                    f"{r.n_ex:,}",
                    f"{r.v_i:,}",
                    "-" if r.entropy_bits is None else f"{r.entropy_bits:.2f}",
                    "-" if r.entropy_normalized is None else f"{r.entropy_normalized:.2f}",
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        lines = [
            "  ".join(
                cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                for i, cell in enumerate(row)
            )
            for row in rows
        ]
        lines.append("")
        lines.append(f"d_size      = {self.d_size}  (log10 ~ {self.log10_d_size:.2f})")
        lines.append(
            f"d_avg-d     = {float(self.d_avg_density):.6g}  "
            f"(log10 ~ {self.log10_d_avg_density:.2f})"
        )
        return "\n".join(lines)


def dataspace_size(
    vocab_sizes: Sequence[int], n_train_rows: int
) -> tuple[int, Fraction, float, float]:
    """Exact product of vocabulary sizes and the average training density.

    Facets with an empty vocabulary are excluded with a warning rather than
    zeroing the product.
    """
    if n_train_rows < 1:
        raise ValidationError("need at least one training row for density")
    d_size = 1
    for i, v in enumerate(vocab_sizes):
        if v == 0:
            log.warning("facet %d has empty vocabulary; excluded from d_size", i)
            continue
        d_size *= int(v)
    d_avg = Fraction(d_size, n_train_rows)
    log10_size = _log10_big(d_size)
    log10_avg = log10_size - math.log10(n_train_rows)
    return d_size, d_avg, log10_size, log10_avg


def _log10_big(n: int) -> float:
    # math.log10 overflows float conversion for astronomically large products
    if n < 10**300:
        return math.log10(n)
    digits = len(str(n))
    head = int(str(n)[:15])
    return (digits - 15) + math.log10(head)


def dataspace_report(table: ExemplarTable) -> DataspaceReport:
    schema: FacetSchema = table.schema
    train = table.cells[table.split == TRAIN]
    records = []
    for i, facet in enumerate(schema):
        col = train[:, i]
        n_ex = int((col != MISSING).sum())
        if n_ex == 0:
            records.append(FacetSpaceRecord(facet.name, 0, facet.size, None, None))
            continue
        counts = [int((col == j).sum()) for j in range(facet.size)]
        h, h_norm = facet_entropy(counts)
        records.append(FacetSpaceRecord(facet.name, n_ex, facet.size, h, h_norm))
    n_train_rows = int((table.split == TRAIN).sum())
    d_size, d_avg, l10s, l10a = dataspace_size(
        [f.size for f in schema], max(n_train_rows, 1)
    )
    return DataspaceReport(records, n_train_rows, d_size, d_avg, l10s, l10a)


def report_to_json_file(report: DataspaceReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, ensure_ascii=False, indent=1)
