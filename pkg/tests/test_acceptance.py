"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single PASS/FAIL line so
the suite output doubles as a checklist. Tolerances are pinned; do not loosen.
"""
import concurrent.futures
import math
import sys
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from groupprofiler.baselines import MostFrequentValueProfiler, NaiveBayesProfiler
from groupprofiler.checkpoint import load_checkpoint, save_checkpoint
from groupprofiler.dataspace import facet_entropy
from groupprofiler.evaluation import js_divergence, metric_agreement, shift_curve, topk_accuracy
from groupprofiler.models import AutoencoderProfiler, EmbeddingProfiler
from groupprofiler.neural import (
    FacetEmbeddings,
    FacetNetwork,
    backward,
    finite_difference_check,
    masked_cross_entropy,
)
from groupprofiler.service import create_app
from groupprofiler.store import MISSING, TEST, ExemplarTable, Facet, FacetSchema
from groupprofiler.synthetic import deterministic_corpus, separable_vector_corpus

from test_baselines import make_table, naive_bayes_oracle


def _report(name, ok, detail=""):
    line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def synth():
    return deterministic_corpus(n_rows=1000, n_values=8, seed=7)


@pytest.fixture(scope="module")
def trained(synth):
    _, table, _ = synth
    start = time.perf_counter()
    model = AutoencoderProfiler(embedding_size=16, hidden_units=64, max_epochs=40, seed=5)
    model.fit(table)
    return model, time.perf_counter() - start


def test_gradient_correctness(synth):
    start = time.perf_counter()
    rng = np.random.default_rng(13)
    vocab_sizes = [3, 4, 2]

    # reconstruction network: per-facet embeddings, hidden 5
    emb = FacetEmbeddings(vocab_sizes, 2, rng=rng)
    net = FacetNetwork(emb.input_dim, 5, vocab_sizes, rng=rng)
    cells = np.array([[0, 2, MISSING], [1, MISSING, 1], [2, 3, 0]])
    drop = np.array([[False, True, False]] * 3)
    x = emb.encode(cells, drop)
    cache = net.forward(x)
    analytic, d_x = backward(net, cache, cells)
    analytic.update(emb.input_gradients(cells, d_x, drop))
    ae_report = finite_difference_check(
        lambda p: masked_cross_entropy(net.forward(emb.encode(cells, drop)).probs, cells),
        {**net.params, **emb.tables},
        analytic,
        h=1e-5,
    )

    # fixed-vector predictor: six-dimensional inputs
    net2 = FacetNetwork(6, 5, vocab_sizes, rng=rng)
    x2 = rng.normal(size=(4, 6))
    targets = rng.integers(-1, 2, size=(4, 3))
    cache2 = net2.forward(x2)
    analytic2, _ = backward(net2, cache2, targets)
    emb_report = finite_difference_check(
        lambda p: masked_cross_entropy(net2.forward(x2).probs, targets),
        net2.params,
        analytic2,
        h=1e-5,
    )

    elapsed = time.perf_counter() - start
    worst = max(ae_report.max_relative_error, emb_report.max_relative_error)
    _report(
        "gradient correctness",
        ae_report.passed and emb_report.passed and worst < 1e-4 and elapsed < 5.0,
        f"max rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_naive_bayes_oracle_equivalence():
    rng = np.random.default_rng(20260823)
    checked = 0
    worst = 0.0
    while checked < 100:
        n_facets = int(rng.integers(2, 4))
        vocab_sizes = [int(rng.integers(2, 5)) for _ in range(n_facets)]
        n_rows = int(rng.integers(2, 9))
        rows = [
            [int(rng.integers(-1, vocab_sizes[i])) for i in range(n_facets)]
            for _ in range(n_rows)
        ]
        target = int(rng.integers(n_facets))
        if all(row[target] == MISSING for row in rows):
            continue
        model = NaiveBayesProfiler(alpha=1.0).fit(make_table(rows, vocab_sizes))
        evidence = {
            fi: int(rng.integers(vocab_sizes[fi]))
            for fi in range(n_facets)
            if fi != target and rng.random() < 0.7
        }
        cells = np.full(n_facets, MISSING)
        for fi, val in evidence.items():
            cells[fi] = val
        dist = model.predict_distribution(cells, target)
        oracle = naive_bayes_oracle(rows, vocab_sizes, target, evidence, 1.0)
        worst = max(worst, float(np.abs(dist - np.asarray(oracle)).max()))
        checked += 1
    _report(
        "naive bayes oracle equivalence",
        checked == 100 and worst < 1e-9,
        f"100 corpora, max abs err {worst:.2e}",
    )


def test_mfv_definitional():
    # train and test halves share the exact value frequencies 40/35/25,
    # so the modal-value predictor must score the modal share exactly
    counts = [40, 35, 25]
    half = [v for v, c in enumerate(counts) for _ in range(c)]
    rows = [[v] for v in half + half]
    split = [0] * 100 + [2] * 100
    table = make_table(rows, [3], split=split)
    model = MostFrequentValueProfiler().fit(table)
    report = topk_accuracy(model, table, ks=(1,), split=TEST)
    top1 = report.per_facet[0].top_k[1]
    _report("mfv definitional check", top1 == 40 / 100, f"top-1 {top1}")


def test_learning_check(synth, trained):
    _, table, _ = synth
    ae, ae_seconds = trained
    ae_top1 = {
        fa.facet: fa.top_k[1] for fa in topk_accuracy(ae, table, ks=(1,)).per_facet
    }["B"]
    mfv_top1 = {
        fa.facet: fa.top_k[1]
        for fa in topk_accuracy(MostFrequentValueProfiler().fit(table), table, ks=(1,)).per_facet
    }["B"]

    _, vec_table = separable_vector_corpus(n_rows=600, dim=16, seed=11)
    start = time.perf_counter()
    emb = EmbeddingProfiler(input_dim=16, hidden_units=32, max_epochs=30, seed=6)
    emb.fit(vec_table)
    emb_seconds = time.perf_counter() - start
    emb_top1 = topk_accuracy(emb, vec_table, ks=(1,)).per_facet[0].top_k[1]

    ok = (
        ae_top1 >= 0.95
        and ae_top1 - mfv_top1 >= 0.30
        and emb_top1 >= 0.95
        and ae_seconds < 60.0
        and emb_seconds < 60.0
    )
    _report(
        "learning check",
        ok,
        f"AE B top-1 {ae_top1:.3f} vs MFV {mfv_top1:.3f}, EMB top-1 {emb_top1:.3f}, "
        f"train {ae_seconds:.1f}s/{emb_seconds:.1f}s",
    )


def test_denoising_robustness(synth, trained):
    schema, table, _ = synth
    ae, _ = trained
    a_idx, b_idx = schema.facet_index("A"), schema.facet_index("B")
    vocab = schema.facets[b_idx].vocabulary
    rng = np.random.default_rng(99)

    clean_hits, masked_hits, n = 0, 0, 0
    for r in table.split_rows(TEST):
        cells = table.cells[r]
        truth = cells[b_idx]
        if truth == MISSING or cells[a_idx] == MISSING:
            continue
        evidence = cells.copy()
        evidence[b_idx] = MISSING
        known = np.flatnonzero(evidence != MISSING)
        keep = rng.random(known.size) >= 0.5
        if not keep[np.where(known == a_idx)[0][0]]:
            continue  # only rows where A survives the 50% mask
        degraded = evidence.copy()
        degraded[known[~keep]] = MISSING
        clean_hits += int(np.argmax(ae.predict_distribution(evidence, b_idx)) == truth)
        masked_hits += int(np.argmax(ae.predict_distribution(degraded, b_idx)) == truth)
        n += 1
    drop = clean_hits / n - masked_hits / n
    _report(
        "denoising robustness",
        n > 0 and drop < 0.10,
        f"{n} rows, top-1 drop {drop:.3f}",
    )


def test_metric_properties(synth, trained):
    rng = np.random.default_rng(42)
    ok = True
    for _ in range(10_000):
        dim = int(rng.integers(2, 11))
        p = rng.dirichlet(np.ones(dim))
        q = rng.dirichlet(np.ones(dim))
        d = js_divergence(p, q)
        ok &= abs(d - js_divergence(q, p)) < 1e-9
        ok &= -1e-9 < d < 1.0 + 1e-9
        ok &= js_divergence(p, p) < 1e-9
        ok &= d > 1e-9  # independent Dirichlet draws are never equal

    h, h_norm = facet_entropy([3, 1])
    ok &= abs(h - 0.8113) < 1e-4 and abs(h_norm - 0.4056) < 1e-4
    h_u, h_u_norm = facet_entropy([5, 5, 5, 5])
    ok &= abs(h_u - 2.0) < 1e-4 and abs(h_u_norm - 2.0 / math.log2(20)) < 1e-4

    _, table, _ = synth
    ae, _ = trained
    report = topk_accuracy(ae, table, ks=(1, 2, 3))
    for fa in report.per_facet:
        ok &= fa.top_k[1] <= fa.top_k[2] <= fa.top_k[3]
    _report("metric properties", bool(ok))


def test_divergence_metric_agreement():
    rng = np.random.default_rng(7)
    pairs = [
        (rng.dirichlet(np.ones(8) * 10), rng.dirichlet(np.ones(8) * 10))
        for _ in range(1000)
    ]
    agreement = metric_agreement(pairs)
    worst = min(agreement.values())
    _report(
        "divergence metric agreement",
        worst >= 0.85,
        ", ".join(f"{k}={v:.3f}" for k, v in sorted(agreement.items())),
    )


def test_determinism_and_persistence(synth, trained, tmp_path):
    schema, table, _ = synth
    ae, _ = trained

    schema2, table2, _ = deterministic_corpus(n_rows=1000, n_values=8, seed=7)
    ingest_ok = (
        schema.to_json() == schema2.to_json()
        and np.array_equal(table.cells, table2.cells)
        and np.array_equal(table.split, table2.split)
    )

    retrain = AutoencoderProfiler(embedding_size=16, hidden_units=64, max_epochs=40, seed=5)
    retrain.fit(table2)
    train_ok = all(
        np.array_equal(ae.net_.params[k], retrain.net_.params[k]) for k in ae.net_.params
    ) and all(
        np.array_equal(ae.embeddings_.tables[k], retrain.embeddings_.tables[k])
        for k in ae.embeddings_.tables
    )

    path = tmp_path / "ae.ckpt"
    save_checkpoint(ae, path)
    loaded = load_checkpoint(path, expect_schema=schema)
    rng = np.random.default_rng(5)
    persist_ok = True
    for _ in range(100):
        cells = np.array(
            [
                rng.integers(f.size) if rng.random() < 0.5 else MISSING
                for f in schema.facets
            ]
        )
        target = int(rng.integers(len(schema)))
        persist_ok &= np.array_equal(
            ae.predict_distribution(cells, target),
            loaded.predict_distribution(cells, target),
        )
    _report(
        "determinism and persistence",
        ingest_ok and train_ok and bool(persist_ok),
        f"ingest={ingest_ok} train={train_ok} save/load={bool(persist_ok)}",
    )


def test_shift_curve_machinery(synth, trained):
    _, table, _ = synth
    ae, _ = trained
    curve = shift_curve(ae, table, "B")
    # A is asserted on every row, so every evidence bucket contains it
    accuracy_ok = all(b.top1 == 1.0 for b in curve.buckets)
    b_idx = table.schema.facet_index("B")
    evaluated = sum(
        1 for r in table.split_rows(TEST) if table.cells[r][b_idx] != MISSING
    )
    partition_ok = sum(b.n for b in curve.buckets) == evaluated
    _report(
        "shift curve machinery",
        accuracy_ok and partition_ok,
        f"{len(curve.buckets)} buckets over {evaluated} rows",
    )


def test_service_contract(trained):
    ae, _ = trained
    app = create_app(model=ae)
    with TestClient(app) as client:
        body = client.post("/profile", json={"known": {"A": "a0"}, "top_n": 3}).json()
        sums_ok = all(
            abs(sum(v["probability"] for v in block["values"]) + block["other"] - 1.0)
            < 1e-6
            for block in body["expectations"].values()
        )
        payload = {"known": {"A": "a1"}, "top_n": 5}
        with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
            bodies = set(
                pool.map(lambda _: client.post("/profile", json=payload).content, range(64))
            )
        concurrency_ok = len(bodies) == 1
        invalid_ok = client.post("/profile", json={"known": {"bogus": "x"}}).status_code == 422
    _report(
        "service contract",
        sums_ok and concurrency_ok and invalid_ok,
        f"sums={sums_ok} concurrency={concurrency_ok} invalid-facet-422={invalid_ok}",
    )
