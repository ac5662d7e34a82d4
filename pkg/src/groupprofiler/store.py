"""Knowledge store: ingestion of entity-facet assertions into an exemplar table.

Input is a stream of per-entity records (or a TSV triple file). Ingestion builds
capped per-facet vocabularies, derives date-based facets, resolves multi-valued
cells by training frequency, and tags rows with a deterministic 80-10-10 split.
"""
from __future__ import annotations

import gzip
import hashlib
import io
import json
import logging
import re
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import EmptyInputError, ParseError, ValidationError

log = logging.getLogger(__name__)

MISSING = -1
MISSING_U32 = 0xFFFFFFFF

TRAIN, DEV, TEST = 0, 1, 2
SPLIT_NAMES = ("train", "dev", "test")

BIRTH_DATE_FACET = "birth_date"
DEATH_DATE_FACET = "death_date"
LIFESPAN_FACET = "lifespan range"
CENTURY_FACET = "century of birth"

SCHEMA_FORMAT_VERSION = 1
TABLE_MAGIC = b"PRFT"
TABLE_FORMAT_VERSION = 1


@dataclass
class RawRecord:
    """One entity as it arrives from the source dump, before vocabulary capping."""

    entity_id: str
    assertions: list[tuple[str, str]] = field(default_factory=list)
    birth_date: Optional[str] = None
    death_date: Optional[str] = None


@dataclass(frozen=True)
class Facet:
    name: str
    vocabulary: tuple[str, ...]
    value_counts: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValidationError(f"facet {self.name!r}: duplicate vocabulary labels")
        if len(self.value_counts) != len(self.vocabulary):
            raise ValidationError(f"facet {self.name!r}: value_counts length mismatch")

    @property
    def size(self) -> int:
        return len(self.vocabulary)


class FacetSchema:
    """Ordered facet descriptors with stable index<->label codebooks."""

    def __init__(self, facets: Sequence[Facet]):
        names = [f.name for f in facets]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate facet names in schema")
        self.facets: tuple[Facet, ...] = tuple(facets)
        self._index = {f.name: i for i, f in enumerate(self.facets)}
        self._value_index = [
            {label: j for j, label in enumerate(f.vocabulary)} for f in self.facets
        ]

    def __len__(self) -> int:
        return len(self.facets)

    def __iter__(self) -> Iterator[Facet]:
        return iter(self.facets)

    @property
    def facet_names(self) -> list[str]:
        return [f.name for f in self.facets]

    def facet_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            from .errors import UnknownFacetError

            raise UnknownFacetError(name, self.facet_names) from None

    def value_index(self, facet_idx: int, label: str) -> int:
        try:
            return self._value_index[facet_idx][label]
        except KeyError:
            import difflib

            from .errors import UnknownValueError

            facet = self.facets[facet_idx]
            close = difflib.get_close_matches(label, facet.vocabulary, n=3)
            raise UnknownValueError(facet.name, label, close) from None

    def to_json(self) -> dict:
        return {
            "format_version": SCHEMA_FORMAT_VERSION,
            "facets": [
                {
                    "name": f.name,
                    "vocabulary": list(f.vocabulary),
                    "value_counts": list(f.value_counts),
                }
                for f in self.facets
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FacetSchema":
        if doc.get("format_version") != SCHEMA_FORMAT_VERSION:
            raise ValidationError(
                f"unsupported schema format_version {doc.get('format_version')!r}"
            )
        return cls(
            [
                Facet(f["name"], tuple(f["vocabulary"]), tuple(f["value_counts"]))
                for f in doc["facets"]
            ]
        )

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path) -> "FacetSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class ExemplarTable:
    """The background knowledge: one row per entity, one int cell per facet.

    Cells hold vocabulary indices, or MISSING (-1). Immutable after
    construction by convention; nothing in the package mutates a built table.
    """

    def __init__(
        self,
        schema: FacetSchema,
        entity_ids: Sequence[str],
        cells: np.ndarray,
        split: np.ndarray,
        vectors: Optional[np.ndarray] = None,
    ):
        cells = np.asarray(cells, dtype=np.int64)
        split = np.asarray(split, dtype=np.int8)
        if cells.shape != (len(entity_ids), len(schema)):
            raise ValidationError(
                f"cells shape {cells.shape} inconsistent with "
                f"{len(entity_ids)} rows x {len(schema)} facets"
            )
        if split.shape != (len(entity_ids),):
            raise ValidationError("split tag array length mismatch")
        for i, facet in enumerate(schema):
            col = cells[:, i]
            bad = (col != MISSING) & ((col < 0) | (col >= max(facet.size, 1)))
            if bad.any():
                raise ValidationError(f"facet {facet.name!r}: cell index out of vocabulary")
        self.schema = schema
        self.entity_ids = list(entity_ids)
        self.cells = cells
        self.split = split
        self.vectors = vectors

    @property
    def n_rows(self) -> int:
        return len(self.entity_ids)

    def split_rows(self, which: int) -> np.ndarray:
        return np.nonzero(self.split == which)[0]

    def stats(self) -> list[dict]:
        """Per-facet (n_ex, v_i) over TRAIN rows, flagging degenerate facets."""
        train = self.cells[self.split == TRAIN]
        report = []
        for i, facet in enumerate(self.schema):
            n_ex = int((train[:, i] != MISSING).sum())
            report.append(
                {
                    "facet": facet.name,
                    "n_ex": n_ex,
                    "v_i": facet.size,
                    "degenerate": n_ex == 0 or facet.size == 0,
                }
            )
        return report

    # --- binary columnar persistence -------------------------------------

    def save(self, path) -> None:
        header = {
            "facet_names": self.schema.facet_names,
            "entity_ids": self.entity_ids,
            "schema_fingerprint": self.schema.fingerprint(),
            "has_vectors": self.vectors is not None,
            "vector_dim": 0 if self.vectors is None else int(self.vectors.shape[1]),
        }
        blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(TABLE_MAGIC)
            fh.write(struct.pack("<HIL", TABLE_FORMAT_VERSION, self.n_rows, len(blob)))
            fh.write(blob)
            fh.write(self.split.astype(np.uint8).tobytes())
            for i in range(len(self.schema)):
                col = self.cells[:, i].copy()
                col_u32 = col.astype(np.int64)
                col_u32[col_u32 == MISSING] = MISSING_U32
                fh.write(col_u32.astype("<u4").tobytes())
            if self.vectors is not None:
                fh.write(self.vectors.astype("<f8").tobytes())

    @classmethod
    def load(cls, path, schema: FacetSchema) -> "ExemplarTable":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != TABLE_MAGIC:
                raise ValidationError(f"not an exemplar table file (magic {magic!r})")
            version, n_rows, header_len = struct.unpack("<HIL", fh.read(10))
            if version != TABLE_FORMAT_VERSION:
                raise ValidationError(f"unsupported table format version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            if header["schema_fingerprint"] != schema.fingerprint():
                raise ValidationError("table was built against a different schema")
            split = np.frombuffer(fh.read(n_rows), dtype=np.uint8).astype(np.int8)
            cols = []
            for _ in range(len(schema)):
                col = np.frombuffer(fh.read(4 * n_rows), dtype="<u4").astype(np.int64)
                col[col == MISSING_U32] = MISSING
                cols.append(col)
            cells = np.stack(cols, axis=1) if cols else np.zeros((n_rows, 0), np.int64)
            vectors = None
            if header.get("has_vectors"):
                dim = header["vector_dim"]
                vectors = np.frombuffer(fh.read(8 * n_rows * dim), dtype="<f8")
                vectors = vectors.reshape(n_rows, dim)
        return cls(schema, header["entity_ids"], cells, split, vectors)


# --- date-derived facets --------------------------------------------------

_YEAR_RE = re.compile(r"^(-?\d{1,4})(?:-(\d{2})-(\d{2}))?$")


def _parse_year(date: Optional[str]) -> Optional[int]:
    if date is None or date == "":
        return None
    m = _YEAR_RE.match(date.strip())
    if not m:
        raise ParseError(f"unparseable date {date!r} (expected ISO-8601 or bare year)")
    return int(m.group(1))


def _ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def derive_date_facets(
    birth_date: Optional[str], death_date: Optional[str]
) -> tuple[Optional[str], Optional[str]]:
    """Return (lifespan bucket label, century-of-birth label); None stands for MISSING.

    Lifespan uses 5-year buckets "[5k, 5k+5)" of death_year - birth_year.
    Century is the ordinal of ceil(year/100). A death before birth keeps the
    row but yields no derived cells.
    """
    birth = _parse_year(birth_date)
    death = _parse_year(death_date)
    if birth is not None and death is not None and death < birth:
        log.warning("death date %r precedes birth date %r; derived facets dropped",
                    death_date, birth_date)
        return None, None
    century = None
    if birth is not None:
        century = _ordinal(-(-birth // 100))
    lifespan = None
    if birth is not None and death is not None:
        span = death - birth
        lo = (span // 5) * 5
        lifespan = f"[{lo},{lo + 5})"
    return lifespan, century


def resolve_multivalue(
    asserted: Sequence[str], frequency: dict[str, int]
) -> str:
    """Pick one value from a multi-valued assertion set.

    Highest training frequency wins; ties break lexicographically.
    """
    if not asserted:
        raise ValidationError("resolve_multivalue called with no asserted values")
    return min(set(asserted), key=lambda v: (-frequency.get(v, 0), v))


# --- TSV parsing ----------------------------------------------------------

def _open_text(path):
    with open(path, "rb") as probe:
        head = probe.read(2)
    if head == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def read_tsv(path) -> list[RawRecord]:
    """Read `entity_id<TAB>facet<TAB>value` triples, grouped per entity.

    Reserved facets birth_date/death_date feed date derivation; a repeated
    date assertion keeps the first occurrence.
    """
    records: dict[str, RawRecord] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            entity_id, facet, value = parts
            if not entity_id:
                raise ParseError(f"line {lineno}: empty entity_id")
            rec = records.get(entity_id)
            if rec is None:
                rec = records[entity_id] = RawRecord(entity_id)
            if facet == BIRTH_DATE_FACET:
                rec.birth_date = rec.birth_date or value
            elif facet == DEATH_DATE_FACET:
                rec.death_date = rec.death_date or value
            else:
                rec.assertions.append((facet, value))
    return list(records.values())


# --- ingestion ------------------------------------------------------------

def ingest(
    records: Iterable[RawRecord], cap: int = 3000, seed: int = 0
) -> tuple[FacetSchema, ExemplarTable]:
    """Build schema and split-tagged table from raw records.

    Vocabulary per facet is the `cap` most frequent labels in the input (ties
    lexicographic); out-of-cap values become MISSING. Rows are split 80-10-10
    by a seeded shuffle; value_counts and multi-value resolution frequencies
    are computed on TRAIN rows only.
    """
    if cap < 1:
        raise ValidationError(f"cap must be >= 1, got {cap}")
    recs = list(records)
    if not recs:
        raise EmptyInputError("no input records")
    for rec in recs:
        if not rec.entity_id:
            raise ParseError("record with no entity_id")

    # Date-derived assertions join the generic facet stream.
    derived: list[list[tuple[str, str]]] = []
    for rec in recs:
        extra = []
        lifespan, century = derive_date_facets(rec.birth_date, rec.death_date)
        if lifespan is not None:
            extra.append((LIFESPAN_FACET, lifespan))
        if century is not None:
            extra.append((CENTURY_FACET, century))
        derived.append(extra)

    all_assertions = [rec.assertions + extra for rec, extra in zip(recs, derived)]

    input_counts: dict[str, Counter] = defaultdict(Counter)
    for assertions in all_assertions:
        for facet, value in assertions:
            input_counts[facet][value] += 1
    facet_names = sorted(input_counts)

    vocab: dict[str, list[str]] = {}
    for name in facet_names:
        ranked = sorted(input_counts[name].items(), key=lambda kv: (-kv[1], kv[0]))
        vocab[name] = [label for label, _ in ranked[:cap]]

    n = len(recs)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_dev = int(round(n * 0.1))
    n_test = int(round(n * 0.1))
    split = np.full(n, TRAIN, dtype=np.int8)
    split[order[:n_dev]] = DEV
    split[order[n_dev:n_dev + n_test]] = TEST

    # Multi-value resolution frequency: raw assertion counts on TRAIN rows.
    train_counts: dict[str, Counter] = defaultdict(Counter)
    for row, assertions in enumerate(all_assertions):
        if split[row] == TRAIN:
            for facet, value in assertions:
                train_counts[facet][value] += 1

    name_to_col = {name: i for i, name in enumerate(facet_names)}
    cells = np.full((n, len(facet_names)), MISSING, dtype=np.int64)
    vocab_sets = {name: set(vocab[name]) for name in facet_names}
    for row, assertions in enumerate(all_assertions):
        per_facet: dict[str, list[str]] = defaultdict(list)
        for facet, value in assertions:
            if value in vocab_sets[facet]:
                per_facet[facet].append(value)
        for facet, values in per_facet.items():
            chosen = resolve_multivalue(values, train_counts[facet])
            cells[row, name_to_col[facet]] = vocab[facet].index(chosen)

    facets = []
    for name in facet_names:
        counts = Counter(
            cells[row, name_to_col[name]]
            for row in range(n)
            if split[row] == TRAIN and cells[row, name_to_col[name]] != MISSING
        )
        value_counts = tuple(counts.get(j, 0) for j in range(len(vocab[name])))
        facets.append(Facet(name, tuple(vocab[name]), value_counts))
    schema = FacetSchema(facets)
    table = ExemplarTable(schema, [r.entity_id for r in recs], cells, split)
    return schema, table


# --- vector sidecar -------------------------------------------------------

def read_vector_sidecar(path, entity_ids: Sequence[str], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Load `entity_id<TAB>v1 v2 ...` vectors aligned to table rows.

    Returns (vectors, have) where `have[i]` marks rows with a vector; rows
    without one are NaN-filled so downstream code can skip them.
    """
    by_id: dict[str, np.ndarray] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                entity_id, rest = line.split("\t", 1)
                vec = np.array(rest.split(), dtype=np.float64)
            except ValueError:
                raise ParseError(f"vector sidecar line {lineno}: malformed") from None
            if vec.shape != (dim,):
                raise ParseError(
                    f"vector sidecar line {lineno}: expected {dim} components, got {vec.size}"
                )
            by_id[entity_id] = vec
    vectors = np.full((len(entity_ids), dim), np.nan)
    have = np.zeros(len(entity_ids), dtype=bool)
    for i, eid in enumerate(entity_ids):
        if eid in by_id:
            vectors[i] = by_id[eid]
            have[i] = True
    return vectors, have


def write_vector_sidecar(path, entity_ids: Sequence[str], vectors: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for eid, vec in zip(entity_ids, vectors):
            fh.write(eid + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")
