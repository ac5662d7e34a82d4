"""Command-line entry points for the whole pipeline."""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import checkpoint as ckpt
from .baselines import MostFrequentValueProfiler, NaiveBayesProfiler
from .errors import CheckpointError, ProfilerError, ValidationError
from .evaluation import human_evaluation, read_judgments, shift_curve, topk_accuracy
from .models import AutoencoderProfiler, EmbeddingProfiler
from .dataspace import dataspace_report, report_to_json_file
from .store import ExemplarTable, FacetSchema, ingest, read_tsv, read_vector_sidecar

log = logging.getLogger(__name__)

SCHEMA_FILE = "schema.json"
TABLE_FILE = "table.bin"


def _load_store(store_dir):
    store = Path(store_dir)
    schema = FacetSchema.load(store / SCHEMA_FILE)
    table = ExemplarTable.load(store / TABLE_FILE, schema)
    return schema, table


@click.group()
@click.option("--log-level", default="WARNING", show_default=True)
def cli(log_level):
    """Profile sparse entity-facet tables with learned expectation distributions."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING))


@cli.command("ingest")
@click.argument("input_file", type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--cap", default=3000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def ingest_cmd(input_file, out_dir, cap, seed):
    """Build schema + exemplar table from a TSV triple file (gzip accepted)."""
    records = read_tsv(input_file)
    schema, table = ingest(records, cap=cap, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema.save(out / SCHEMA_FILE)
    table.save(out / TABLE_FILE)
    click.echo(f"ingested {table.n_rows} rows, {len(schema)} facets -> {out}")


@cli.command("stats")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--json", "json_out", type=click.Path(), default=None)
def stats_cmd(store_dir, json_out):
    """Data-space quantification report (entropy, size, density)."""
    _, table = _load_store(store_dir)
    report = dataspace_report(table)
    click.echo(report.to_text())
    if json_out:
        report_to_json_file(report, json_out)


MODEL_FACTORIES = {
    "mfv": MostFrequentValueProfiler,
    "nb": NaiveBayesProfiler,
    "ae": AutoencoderProfiler,
    "emb": EmbeddingProfiler,
}


@cli.command("train")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--model", "model_kind", required=True,
              type=click.Choice(sorted(MODEL_FACTORIES)))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--vectors", "vectors_path", type=click.Path(exists=True), default=None,
              help="entity vector sidecar (required for emb)")
@click.option("--input-dim", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-epochs", default=100, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
def train_cmd(store_dir, model_kind, out_path, vectors_path, input_dim, seed,
              max_epochs, learning_rate):
    """Fit a profiler and write its checkpoint."""
    _, table = _load_store(store_dir)
    if model_kind == "emb":
        if vectors_path is None and table.vectors is None:
            raise ValidationError("--vectors is required for the emb model")
        if vectors_path is not None:
            vectors, _ = read_vector_sidecar(vectors_path, table.entity_ids, input_dim)
            table.vectors = vectors
        model = EmbeddingProfiler(
            input_dim=table.vectors.shape[1], seed=seed,
            max_epochs=max_epochs, learning_rate=learning_rate,
        )
    elif model_kind == "ae":
        model = AutoencoderProfiler(
            seed=seed, max_epochs=max_epochs, learning_rate=learning_rate
        )
    else:
        model = MODEL_FACTORIES[model_kind]()
    model.fit(table)
    ckpt.save_checkpoint(model, out_path)
    logbook = getattr(model, "training_log_", None)
    if logbook is not None:
        click.echo(
            f"trained {model_kind}: best dev loss {logbook.best_dev_loss:.4f} "
            f"at epoch {logbook.best_epoch}"
        )
    else:
        click.echo(f"trained {model_kind}")
    click.echo(f"checkpoint -> {out_path}")


@cli.command("evaluate")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--topk", default="1,3", show_default=True)
@click.option("--shift-curve", "shift_facet", default=None,
              help="emit an accuracy-vs-known-facets curve for this facet")
@click.option("--vectors", "vectors_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
def evaluate_cmd(store_dir, ckpt_path, topk, shift_facet, vectors_path, out_path):
    """Top-k accuracy on the TEST split, optionally a shift curve CSV."""
    schema, table = _load_store(store_dir)
    model = ckpt.load_checkpoint(ckpt_path, expect_schema=schema)
    if vectors_path is not None:
        dim = getattr(model, "input_dim", 1000)
        table.vectors, _ = read_vector_sidecar(vectors_path, table.entity_ids, dim)
    ks = tuple(int(k) for k in topk.split(","))
    if shift_facet is not None:
        curve = shift_curve(model, table, shift_facet)
        csv = curve.to_csv()
        if out_path:
            Path(out_path).write_text(csv)
        click.echo(csv, nl=False)
        click.echo(f"# spearman={curve.spearman_rho} regime={curve.regime}")
        return
    report = topk_accuracy(model, table, ks=ks)
    rows = report.to_rows()
    click.echo(json.dumps(rows, indent=1))
    if out_path:
        Path(out_path).write_text(json.dumps(rows, indent=1))


@cli.command("human-eval")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--metric", default="js_divergence", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def human_eval_cmd(ckpt_path, judgments_path, metric, out_path):
    """Divergence between model profiles and aggregated crowd judgments."""
    model = ckpt.load_checkpoint(ckpt_path)
    profiles = read_judgments(judgments_path)
    rows = human_evaluation(model, profiles, metric=metric)
    payload = [
        {
            "target": r.target,
            "known_count": r.known_count,
            "divergence": r.divergence,
            "precision": r.precision,
            "recall": r.recall,
            "f1": r.f1,
        }
        for r in rows
    ]
    click.echo(json.dumps(payload, indent=1))
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=1))


@cli.command("profile")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--known", default="", help="comma-separated facet=value pairs")
@click.option("--top-n", default=10, show_default=True)
def profile_cmd(ckpt_path, known, top_n):
    """Print expectation distributions for a partial-group query."""
    model = ckpt.load_checkpoint(ckpt_path)
    query = {}
    if known:
        for pair in known.split(","):
            if "=" not in pair:
                raise ValidationError(f"bad --known entry {pair!r}, expected facet=value")
            facet, value = pair.split("=", 1)
            query[facet.strip()] = value.strip()
    result = model.profile(query)
    out = {"fixed": result.fixed, "expectations": {}}
    for facet in result.expectations:
        out["expectations"][facet] = [
            {"value": v, "probability": p}
            for v, p in result.top_values(model.schema_, facet, k=top_n)
        ]
    click.echo(json.dumps(out, indent=1))


@cli.command("serve")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--top-n-cap", default=100, show_default=True)
@click.option("--cors-origin", "cors_origins", multiple=True)
def serve_cmd(ckpt_path, host, port, top_n_cap, cors_origins):
    """Serve /schema, /profile, /shift, /health over a frozen checkpoint."""
    from .service import serve

    serve(
        ckpt_path,
        host=host,
        port=port,
        top_n_cap=top_n_cap,
        cors_origins=list(cors_origins) or None,
    )


def main(argv=None):
    """Entry point with the documented exit codes: 0 ok, 1 validation, 2 I/O."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except CheckpointError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except ProfilerError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
