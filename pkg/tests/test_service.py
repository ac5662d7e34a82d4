import concurrent.futures

import pytest
from fastapi.testclient import TestClient

from groupprofiler.baselines import NaiveBayesProfiler
from groupprofiler.checkpoint import checkpoint_file_hash, save_checkpoint
from groupprofiler.service import create_app


@pytest.fixture(scope="module")
def served(synthetic, trained_ae, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "ae.ckpt"
    save_checkpoint(trained_ae, path)
    app = create_app(checkpoint_path=path)
    with TestClient(app, raise_server_exceptions=False) as client:
        yield client, path


def test_health(served):
    client, _ = served
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_schema_lists_all_facets_and_values(served, synthetic):
    client, _ = served
    schema, _, _ = synthetic
    doc = client.get("/schema").json()
    facets = {f["name"]: f for f in doc["facets"]}
    assert set(facets) == set(schema.facet_names)
    for f in schema:
        assert sorted(facets[f.name]["values"]) == sorted(f.vocabulary)
        assert facets[f.name]["size"] == f.size


def test_schema_suffices_to_build_any_profile_request(served):
    client, _ = served
    doc = client.get("/schema").json()
    facet = doc["facets"][0]
    resp = client.post("/profile", json={"known": {facet["name"]: facet["values"][0]}})
    assert resp.status_code == 200


def test_empty_profile_returns_all_facets(served, synthetic):
    client, _ = served
    schema, _, _ = synthetic
    body = client.post("/profile", json={}).json()
    assert body["fixed"] == {}
    assert set(body["expectations"]) == set(schema.facet_names)


def test_profile_distributions_sum_to_one_with_residual(served):
    client, _ = served
    body = client.post("/profile", json={"known": {"A": "a0"}, "top_n": 2}).json()
    assert "A" not in body["expectations"]
    for facet, block in body["expectations"].items():
        total = sum(v["probability"] for v in block["values"]) + block["other"]
        assert abs(total - 1.0) < 1e-6
        assert len(block["values"]) <= 2


def test_unknown_facet_gives_422(served):
    client, _ = served
    resp = client.post("/profile", json={"known": {"nope": "x"}})
    assert resp.status_code == 422
    assert "nope" in resp.json()["error"]


def test_unknown_value_gives_422_with_suggestions(served):
    client, _ = served
    resp = client.post("/profile", json={"known": {"A": "a00"}})
    assert resp.status_code == 422
    assert "a0" in resp.json()["error"]


def test_malformed_json_gives_400(served):
    client, _ = served
    resp = client.post(
        "/profile", content=b"{not json", headers={"content-type": "application/json"}
    )
    assert resp.status_code == 400
    assert "errors" in resp.json()


def test_shift_with_empty_added_is_all_zero(served):
    client, _ = served
    body = client.post("/shift", json={"base": {"A": "a0"}, "added": {}}).json()
    for entry in body["shifts"].values():
        assert entry["js_divergence"] == pytest.approx(0.0, abs=1e-12)
        assert not entry["argmax_changed"]


def test_shift_divergences_bounded(served, synthetic):
    client, _ = served
    body = client.post("/shift", json={"base": {}, "added": {"A": "a1"}}).json()
    for entry in body["shifts"].values():
        assert 0.0 <= entry["js_divergence"] <= 1.0


def test_shift_reports_argmax_flip_on_dependent_facet(served, synthetic):
    _, _, mapping = synthetic
    client, _ = served
    # find an A value whose mapped B differs from the empty-query argmax
    base = client.post("/profile", json={}).json()
    prior_top = base["expectations"]["B"]["values"][0]["value"]
    flip_a = next(a for a, b in mapping.items() if b != prior_top)
    body = client.post("/shift", json={"base": {}, "added": {"A": flip_a}}).json()
    entry = body["shifts"]["B"]
    assert entry["argmax_changed"]
    assert entry["top_after"] == mapping[flip_a]


def test_concurrent_identical_requests_identical_bodies(served):
    client, _ = served
    payload = {"known": {"A": "a2"}, "top_n": 5}

    def call(_):
        return client.post("/profile", json=payload).content

    with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
        bodies = list(pool.map(call, range(64)))
    assert len(set(bodies)) == 1


def test_service_never_mutates_checkpoint(served):
    client, path = served
    before = checkpoint_file_hash(path)
    for _ in range(5):
        client.post("/profile", json={"known": {"A": "a0"}})
        client.post("/shift", json={"base": {}, "added": {"A": "a1"}})
    assert checkpoint_file_hash(path) == before


def test_in_memory_model_app(toy_corpus):
    _, table = toy_corpus
    model = NaiveBayesProfiler().fit(table)
    app = create_app(model=model)
    with TestClient(app) as client:
        body = client.post("/profile", json={"known": {"color": "red"}}).json()
        assert body["model"]["checkpoint_hash"] == "in-memory"
        assert "size" in body["expectations"]
