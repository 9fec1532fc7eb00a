
import pytest
from fastapi.testclient import TestClient

from kgnlq.config import AppConfig
from kgnlq.db import file_fingerprint
from kgnlq.service import create_app

FIXTURE_1HOP_Q = "Which gene/protein nodes are linked to the drug aspirin by drug_protein?"


@pytest.fixture(scope="module")
def client(fixture_db, tmp_path_factory):
    config = AppConfig(
        db_path=str(fixture_db.path),
        dataset_dir=str(tmp_path_factory.mktemp("datasets")),
        default_backend="oracle",
    )
    app = create_app(config)
    with TestClient(app) as c:
        yield c


def test_health(client, fixture_db):
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["db_fingerprint"] == fixture_db.fingerprint()
    assert "oracle" in body["backends"]


class TestSchema:
    def test_fixture_counts(self, client):
        body = client.get("/api/schema").json()
        assert len(body["entity_types"]) == 3
        assert len(body["relations"]) == 3

    def test_repeated_calls_byte_identical(self, client):
        a = client.get("/api/schema").content
        b = client.get("/api/schema").content
        assert a == b


class TestAsk:
    def test_fixture_question_oracle(self, client):
        resp = client.post("/api/ask", json={"question": FIXTURE_1HOP_Q})
        assert resp.status_code == 200
        body = resp.json()
        assert body["answers"] == ["PTGS2"]
        assert len(body["attempts"]) == 1
        assert body["attempts"][0]["outcome"] == "ok"
        assert body["templated_question"].count("[DRUG_0]") == 1
        assert body["bindings"]["[DRUG_0]"]["canonical_name"] == "aspirin"
        assert "total" in body["timings_ms"]

    def test_empty_question_400(self, client):
        assert client.post("/api/ask", json={"question": "  "}).status_code == 400

    def test_unknown_backend_400_names_valid(self, client):
        resp = client.post(
            "/api/ask", json={"question": "x", "options": {"backend": "gpt-99"}}
        )
        assert resp.status_code == 400
        assert "oracle" in resp.json()["error"]

    def test_unknown_option_key_400(self, client):
        resp = client.post(
            "/api/ask", json={"question": "x", "options": {"temperature": 1.0}}
        )
        assert resp.status_code == 400

    def test_malformed_body_400(self, client):
        resp = client.post("/api/ask", json={"nope": True})
        assert resp.status_code == 400

    def test_faulty_backend_trace_has_two_attempts(self, client):
        resp = client.post(
            "/api/ask",
            json={"question": FIXTURE_1HOP_Q, "options": {"backend": "faulty"}},
        )
        body = resp.json()
        assert [a["outcome"] for a in body["attempts"]] == ["validation_error", "ok"]
        assert "unknown column" in body["attempts"][0]["error"]
        assert body["answers"] == ["PTGS2"]

    def test_zero_answer_still_200(self, client):
        resp = client.post("/api/ask", json={"question": "total nonsense question"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["answers"] is None
        assert body["attempts"]

    def test_idempotent_for_deterministic_backend(self, client):
        payloads = [
            client.post("/api/ask", json={"question": FIXTURE_1HOP_Q}).json()
            for _ in range(2)
        ]
        del payloads[0]["timings_ms"], payloads[1]["timings_ms"]
        assert payloads[0] == payloads[1]


class TestDatasets:
    def test_generate_and_fetch(self, client):
        resp = client.post("/api/datasets", json={"n_single": 4, "n_two": 2, "seed": 1})
        assert resp.status_code == 200
        dataset_id = resp.json()["dataset_id"]
        got = client.get(f"/api/datasets/{dataset_id}")
        assert got.status_code == 200
        assert len(got.json()["examples"]) == 6

    def test_content_addressed_id_stable(self, client):
        a = client.post("/api/datasets", json={"n_single": 4, "n_two": 2, "seed": 1}).json()
        b = client.post("/api/datasets", json={"n_single": 4, "n_two": 2, "seed": 1}).json()
        assert a["dataset_id"] == b["dataset_id"]

    def test_unknown_id_404(self, client):
        assert client.get("/api/datasets/bogus").status_code == 404

    def test_over_capacity_422_with_partial(self, client):
        resp = client.post("/api/datasets", json={"n_single": 500, "n_two": 500, "seed": 1})
        assert resp.status_code == 422
        body = resp.json()
        assert "warning" in body
        assert body["manifest"]["actual"]["single"] < 500
        # the partial dataset is persisted and retrievable
        assert client.get(f"/api/datasets/{body['dataset_id']}").status_code == 200


@pytest.fixture(scope="module")
def dataset_id(client):
    return client.post(
        "/api/datasets", json={"n_single": 4, "n_two": 2, "seed": 1}
    ).json()["dataset_id"]


class TestEval:
    def test_oracle_full_setting_scores_one(self, client, dataset_id):
        resp = client.post(
            "/api/eval", json={"dataset_id": dataset_id, "settings": ["full"]}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["reports"][0]["aggregates"]["overall"]["em"] == 1.0

    def test_empty_settings_400(self, client, dataset_id):
        resp = client.post("/api/eval", json={"dataset_id": dataset_id, "settings": []})
        assert resp.status_code == 400

    def test_four_canonical_settings_four_rows(self, client, dataset_id):
        resp = client.post(
            "/api/eval",
            json={
                "dataset_id": dataset_id,
                "settings": ["full", "no-ner", "no-sc", "no-ner-no-sc"],
            },
        )
        table = resp.json()["table"]
        assert [row["label"] for row in table["rows"]] == ["Full", "-NER", "-SC", "-NER-SC"]

    def test_unknown_dataset_404(self, client):
        resp = client.post("/api/eval", json={"dataset_id": "nope", "settings": ["full"]})
        assert resp.status_code == 404

    def test_unknown_setting_400(self, client, dataset_id):
        resp = client.post(
            "/api/eval", json={"dataset_id": dataset_id, "settings": ["bogus"]}
        )
        assert resp.status_code == 400


class TestReadOnly:
    def test_service_never_mutates_database(self, client, fixture_db):
        before = file_fingerprint(fixture_db.path)
        client.post("/api/ask", json={"question": FIXTURE_1HOP_Q})
        client.post("/api/datasets", json={"n_single": 2, "n_two": 1, "seed": 9})
        after = file_fingerprint(fixture_db.path)
        assert before == after

    def test_write_probe_rejected(self, fixture_db):
        import sqlite3

        conn = fixture_db.connect()
        with pytest.raises(sqlite3.OperationalError, match="readonly"):
            conn.execute("UPDATE nodes SET node_name = 'pwned'")
        conn.close()


class TestOracleNerViaApi:
    def test_oracle_ner_with_dataset_context(self, client):
        dataset_id = client.post(
            "/api/datasets", json={"n_single": 4, "n_two": 2, "seed": 1}
        ).json()["dataset_id"]
        examples = client.get(f"/api/datasets/{dataset_id}").json()["examples"]
        question = examples[0]["question"]
        resp = client.post(
            "/api/ask",
            json={
                "question": question,
                "options": {"ner_mode": "oracle", "demo_dataset_id": dataset_id},
            },
        )
        assert resp.status_code == 200
        assert sorted(resp.json()["answers"]) == examples[0]["gold_answers"]

    def test_oracle_ner_without_context_400(self, client):
        resp = client.post(
            "/api/ask",
            json={"question": FIXTURE_1HOP_Q, "options": {"ner_mode": "oracle"}},
        )
        assert resp.status_code == 400


class TestResponseContracts:
    """Live responses stay valid against the published response schemas."""

    def validate(self, payload, schema_name):
        import jsonschema

        from kgnlq.service import RESPONSE_SCHEMAS

        jsonschema.validate(payload, RESPONSE_SCHEMAS[schema_name])

    def test_ask_schema(self, client):
        self.validate(
            client.post("/api/ask", json={"question": FIXTURE_1HOP_Q}).json(), "ask"
        )
        self.validate(
            client.post("/api/ask", json={"question": "nonsense with no answer"}).json(),
            "ask",
        )

    def test_schema_endpoint_schema(self, client):
        self.validate(client.get("/api/schema").json(), "schema")

    def test_health_schema(self, client):
        self.validate(client.get("/api/health").json(), "health")

    def test_dataset_schema(self, client):
        payload = client.post(
            "/api/datasets", json={"n_single": 2, "n_two": 1, "seed": 4}
        ).json()
        self.validate(payload, "dataset_created")

    def test_eval_schema(self, client, dataset_id):
        payload = client.post(
            "/api/eval", json={"dataset_id": dataset_id, "settings": ["full", "no-sc"]}
        ).json()
        self.validate(payload, "eval")
