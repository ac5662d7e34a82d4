"""Record live service responses into test/fixtures/recorded.json.

The explorer's tests snapshot every number against these recorded bodies so
the UI provably shows service output verbatim. Re-run after backend changes:

    python3 scripts/record_fixtures.py
"""
import json
from pathlib import Path

from fastapi.testclient import TestClient

from groupprofiler.models import AutoencoderProfiler
from groupprofiler.service import create_app
from groupprofiler.synthetic import deterministic_corpus

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "recorded.json"


def canon(d: dict) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def main() -> None:
    _, table, mapping = deterministic_corpus(n_rows=1000, n_values=8, seed=7)
    model = AutoencoderProfiler(
        embedding_size=16, hidden_units=64, max_epochs=40, seed=5
    ).fit(table)
    client = TestClient(create_app(model=model))

    prior_top = client.post("/profile", json={}).json()["expectations"]["B"][
        "values"
    ][0]["value"]
    flip_a = next(a for a, b in sorted(mapping.items()) if b != prior_top)
    keep_a = next(a for a, b in sorted(mapping.items()) if b == prior_top)

    profiles = {}
    shifts = {}

    def record_profile(known):
        profiles[canon(known)] = client.post("/profile", json={"known": known}).json()

    def record_shift(base, added):
        shifts[canon(base) + "|" + canon(added)] = client.post(
            "/shift", json={"base": base, "added": added}
        ).json()

    record_profile({})
    record_profile({"A": flip_a})
    record_profile({"A": keep_a})
    record_profile({"A": flip_a, "C": "c0"})
    record_shift({}, {})
    record_shift({}, {"A": flip_a})
    record_shift({}, {"A": keep_a})
    record_shift({"A": flip_a}, {"C": "c0"})

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps(
            {
                "schema": client.get("/schema").json(),
                "profiles": profiles,
                "shifts": shifts,
                "scenario": {
                    "flip_facet": "A",
                    "flip_value": flip_a,
                    "keep_value": keep_a,
                    "flipped_target": "B",
                    "prior_top": prior_top,
                    "flipped_top": mapping[flip_a],
                },
            },
            indent=1,
        )
    )
    print(f"wrote {OUT} (flip {flip_a} -> {mapping[flip_a]}, prior top {prior_top})")


if __name__ == "__main__":
    main()
