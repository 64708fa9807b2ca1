import json

import pytest
from fastapi.testclient import TestClient

from squadtrans.dataset import parse_dataset, validate_spans
from squadtrans.review import (
    ReviewSession,
    ReviewVerdict,
    SpanMismatchError,
    UnknownExampleError,
    create_app,
)

from corpus import synthetic_dataset


@pytest.fixture
def session(tmp_path):
    dataset = synthetic_dataset(901, 3, impossible_ratio=0.0)
    return ReviewSession(dataset, str(tmp_path / "verdicts.jsonl"))


def accept(qa_id, reviewer="r1"):
    return ReviewVerdict(qa_id=qa_id, decision="accept", reviewer=reviewer)


class TestQueue:
    def test_fresh_set_serves_first_item(self, session):
        example = session.next_unreviewed()
        assert example is not None
        assert example.index == 0

    def test_verdict_advances_queue(self, session):
        first = session.next_unreviewed()
        session.submit(accept(first.qa_id))
        assert session.next_unreviewed().index == 1

    def test_done_marker_when_all_reviewed(self, session):
        while (example := session.next_unreviewed()) is not None:
            session.submit(accept(example.qa_id))
        assert session.next_unreviewed() is None
        progress = session.progress()
        assert progress["reviewed"] == progress["total"] == 3

    def test_progress_counts_always_total(self, session):
        assert session.progress() == {
            "total": 3,
            "reviewed": 0,
            "remaining": 3,
            "accepted": 0,
            "corrected": 0,
            "rejected": 0,
        }
        session.submit(accept(session.next_unreviewed().qa_id))
        progress = session.progress()
        assert progress["reviewed"] + progress["remaining"] == progress["total"]


class TestSubmit:
    def test_unknown_id(self, session):
        with pytest.raises(UnknownExampleError):
            session.submit(accept("nope"))

    def test_unknown_decision(self, session):
        first = session.next_unreviewed()
        with pytest.raises(ValueError):
            session.submit(ReviewVerdict(qa_id=first.qa_id, decision="maybe"))

    def test_corrected_span_validated(self, session):
        example = session.next_unreviewed()
        with pytest.raises(SpanMismatchError) as err:
            session.submit(
                ReviewVerdict(
                    qa_id=example.qa_id,
                    decision="corrected",
                    corrected_text="definitely not here",
                    corrected_start=0,
                )
            )
        assert err.value.expected == "definitely not here"
        assert err.value.actual == example.context[: len("definitely not here")]

    def test_corrected_span_accepted_when_valid(self, session):
        example = session.next_unreviewed()
        word = example.context.split()[1]
        start = example.context.index(word)
        session.submit(
            ReviewVerdict(
                qa_id=example.qa_id,
                decision="corrected",
                corrected_text=word,
                corrected_start=start,
            )
        )
        assert session.progress()["corrected"] == 1

    def test_resubmission_latest_wins(self, session):
        example = session.next_unreviewed()
        session.submit(accept(example.qa_id))
        session.submit(ReviewVerdict(qa_id=example.qa_id, decision="reject"))
        assert session.progress()["rejected"] == 1
        assert session.progress()["accepted"] == 0
        exported = session.export_gold()
        assert example.qa_id not in {qa.id for _, _, qa in exported.iter_qas()}

    def test_log_is_append_only_and_replayable(self, session, tmp_path):
        a = session.next_unreviewed()
        session.submit(accept(a.qa_id))
        b = session.next_unreviewed()
        session.submit(ReviewVerdict(qa_id=b.qa_id, decision="reject"))
        lines = open(session.log_path, encoding="utf-8").read().splitlines()
        assert len(lines) == 2
        reopened = ReviewSession(session.candidates, session.log_path)
        assert reopened.progress()["reviewed"] == 2
        assert reopened.next_unreviewed().index == 2


class TestExport:
    def test_all_accepted_exports_verbatim(self, session):
        while (example := session.next_unreviewed()) is not None:
            session.submit(accept(example.qa_id))
        assert session.export_gold() == session.candidates

    def test_rejections_excluded(self, session):
        ids = [e.qa_id for e in session._examples]
        session.submit(accept(ids[0]))
        session.submit(ReviewVerdict(qa_id=ids[1], decision="reject"))
        session.submit(accept(ids[2]))
        exported = session.export_gold()
        assert {qa.id for _, _, qa in exported.iter_qas()} == {ids[0], ids[2]}

    def test_corrected_span_exported(self, session):
        example = session.next_unreviewed()
        word = example.context.split()[2]
        start = example.context.index(word)
        session.submit(
            ReviewVerdict(
                qa_id=example.qa_id,
                decision="corrected",
                corrected_text=word,
                corrected_start=start,
            )
        )
        exported = session.export_gold()
        corrected = next(
            qa for _, _, qa in exported.iter_qas() if qa.id == example.qa_id
        )
        assert corrected.answers[0].text == word
        assert corrected.answers[0].answer_start == start
        assert validate_spans(exported) == []

    def test_partial_export_skips_unreviewed(self, session):
        session.submit(accept(session.next_unreviewed().qa_id))
        exported = session.export_gold()
        assert sum(1 for _ in exported.iter_qas()) == 1


class TestHttpApi:
    @pytest.fixture
    def client(self, session):
        return TestClient(create_app(session))

    def test_queue_next_and_progress(self, client):
        body = client.get("/api/queue/next").json()
        assert body["done"] is False
        assert body["example"]["index"] == 0
        assert body["example"]["total"] == 3
        progress = client.get("/api/progress").json()
        assert progress["total"] == 3

    def test_get_example_by_id(self, client):
        example = client.get("/api/queue/next").json()["example"]
        fetched = client.get(f"/api/examples/{example['qa_id']}").json()
        assert fetched["example"] == example
        assert client.get("/api/examples/nope").status_code == 404

    def test_verdict_flow(self, client):
        example = client.get("/api/queue/next").json()["example"]
        response = client.post(
            f"/api/examples/{example['qa_id']}/verdict",
            json={"decision": "accept", "reviewer": "tester"},
        )
        assert response.status_code == 200
        assert response.json()["progress"]["reviewed"] == 1
        following = client.get("/api/queue/next").json()
        assert following["example"]["index"] == 1

    def test_invalid_correction_refused_with_slice_detail(self, client):
        example = client.get("/api/queue/next").json()["example"]
        response = client.post(
            f"/api/examples/{example['qa_id']}/verdict",
            json={
                "decision": "corrected",
                "corrected_text": "wrong text",
                "corrected_start": 0,
            },
        )
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail["error"] == "span_mismatch"
        assert detail["expected"] == "wrong text"
        assert detail["actual"] == example["context"][: len("wrong text")]

    def test_unknown_id_404(self, client):
        response = client.post(
            "/api/examples/ghost/verdict", json={"decision": "accept"}
        )
        assert response.status_code == 404

    def test_export_returns_valid_squad_json(self, client):
        example = client.get("/api/queue/next").json()["example"]
        client.post(
            f"/api/examples/{example['qa_id']}/verdict", json={"decision": "accept"}
        )
        response = client.get("/api/export")
        assert response.status_code == 200
        exported = parse_dataset(json.dumps(response.json()).encode("utf-8"))
        assert sum(1 for _ in exported.iter_qas()) == 1

    def test_done_marker_over_http(self, client, session):
        for example in list(session._examples):
            client.post(
                f"/api/examples/{example.qa_id}/verdict", json={"decision": "accept"}
            )
        body = client.get("/api/queue/next").json()
        assert body == {"done": True, "reviewed": 3, "total": 3}

    def test_pipeline_scores_surface_in_examples(self, tmp_path):
        from squadtrans.pipeline import PipelineConfig, run_pipeline

        translated = run_pipeline(
            synthetic_dataset(903, 4, impossible_ratio=0.0), PipelineConfig()
        ).dataset
        session = ReviewSession(translated, str(tmp_path / "v.jsonl"))
        client = TestClient(create_app(session))
        example = client.get("/api/queue/next").json()["example"]
        assert example["score"] == 1.0
