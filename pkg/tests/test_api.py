import asyncio
import json

import httpx
import pytest

from jitfeedback.api import build_app
from jitfeedback.classifier import ClassificationStrategy
from jitfeedback.domain import ErrorLabel
from jitfeedback.eventlog import EventLog
from jitfeedback.gateway import Gateway, GatewayConfig, ScriptedBackend
from jitfeedback.prompts import KnowledgeLevel, PosthocFeedback
from jitfeedback.service import SessionService
from jitfeedback.simulator import VirtualClock, scripted_sim_rules, synth_essay

ADMIN = {"Authorization": "Bearer secret-token"}


def make_service(tmp_path, quiz, *, backend=None, gateway_config=None, clock=None):
    backend = backend or ScriptedBackend(scripted_sim_rules())
    gateway = Gateway(
        backend,
        gateway_config
        or GatewayConfig(rate_limit_per_s=100_000, burst=100_000, queue_capacity=1000),
    )
    clock = clock or VirtualClock()
    return SessionService(
        quizzes={quiz.quiz_id: quiz},
        bank=[],
        strategy=ClassificationStrategy(few_shot=False, k_per_label=0),
        gateway=gateway,
        log=EventLog(tmp_path / "events.jsonl"),
        hash_key="api-key",
        now_fn=clock.now,
    )


def client_for(service):
    app = build_app(service, admin_token="secret-token")
    transport = httpx.ASGITransport(app=app)
    return httpx.AsyncClient(transport=transport, base_url="http://testserver")


class TestSessionFlow:
    def test_full_flow(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                created = await client.post(
                    "/api/sessions",
                    json={"student_id": "alice", "quiz_id": sample_quiz.quiz_id},
                )
                assert created.status_code == 200
                sid = created.json()["session_id"]

                first = await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.DIRECTION, 60)},
                )
                assert first.status_code == 200
                body = first.json()
                assert body["turn_index"] == 1
                assert body["feedback"]
                assert set(body) == {"turn_index", "feedback", "degraded"}

                second = await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.CORRECT, 72)},
                )
                assert second.json()["turn_index"] == 2

                answer = await client.post(
                    f"/api/sessions/{sid}/answer", json={"option_key": "A"}
                )
                assert answer.status_code == 200
                assert answer.json() == {"answer_correct": True}

                survey = await client.post(
                    f"/api/sessions/{sid}/survey",
                    json={"helpful": True, "reasons": ["confirmation of my idea"]},
                )
                assert survey.status_code == 200

                closed = await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.CORRECT, 60)},
                )
                assert closed.status_code == 409

        asyncio.run(body())

    def test_validation_failure_is_422_with_rules(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                created = await client.post(
                    "/api/sessions",
                    json={"student_id": "alice", "quiz_id": sample_quiz.quiz_id},
                )
                sid = created.json()["session_id"]
                bad = await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": "only a few words with 2 digits"},
                )
                assert bad.status_code == 422
                violations = bad.json()["violations"]
                rules = {v["rule"] for v in violations}
                assert rules == {"too_short", "contains_digits"}

        asyncio.run(body())

    def test_unknown_quiz_404(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                response = await client.post(
                    "/api/sessions", json={"student_id": "a", "quiz_id": "nope"}
                )
                assert response.status_code == 404

        asyncio.run(body())

    def test_busy_maps_to_429_with_retry_after(self, tmp_path, sample_quiz):
        async def body():
            gate = asyncio.Event()

            class Stalled:
                backend_id = "stalled"
                concurrent_safe = True

                async def complete(self, prompt_text, request):
                    await gate.wait()
                    return json.dumps(
                        {
                            "classification": "correct",
                            "confidence": 4,
                            "secondary_classification": "correct",
                            "feedback": "fine work, keep refining your plan",
                        }
                    )

            service = make_service(
                tmp_path,
                sample_quiz,
                backend=Stalled(),
                gateway_config=GatewayConfig(
                    rate_limit_per_s=1000, burst=1000, queue_capacity=1, max_in_flight=1
                ),
            )
            async with client_for(service) as client:
                sids = []
                for student in ("a", "b"):
                    created = await client.post(
                        "/api/sessions",
                        json={"student_id": student, "quiz_id": sample_quiz.quiz_id},
                    )
                    sids.append(created.json()["session_id"])
                first = asyncio.create_task(
                    client.post(
                        f"/api/sessions/{sids[0]}/feedback",
                        json={"text": synth_essay(ErrorLabel.CORRECT, 60)},
                    )
                )
                await asyncio.sleep(0.05)
                second = await client.post(
                    f"/api/sessions/{sids[1]}/feedback",
                    json={"text": synth_essay(ErrorLabel.CORRECT, 60)},
                )
                assert second.status_code == 429
                assert "retry-after" in {k.lower() for k in second.headers.keys()}
                gate.set()
                assert (await first).status_code == 200

        asyncio.run(body())


class TestInformationHiding:
    def test_student_quiz_view_has_no_answers(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                quiz = await client.get(f"/api/quizzes/{sample_quiz.quiz_id}")
                payload = quiz.json()
                assert set(payload) == {"quiz_id", "statement", "options"}
                for option in payload["options"]:
                    assert set(option) == {"key", "text"}

        asyncio.run(body())

    def test_feedback_response_schema_has_no_labels(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                created = await client.post(
                    "/api/sessions",
                    json={"student_id": "alice", "quiz_id": sample_quiz.quiz_id},
                )
                sid = created.json()["session_id"]
                response = await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.POSITION, 60)},
                )
                raw = response.text.lower()
                for forbidden in ("classification", "confidence", "correct_option"):
                    assert forbidden not in raw
                for label in ErrorLabel:
                    assert label.value not in response.json()["feedback"].lower()

        asyncio.run(body())


class TestAdmin:
    def test_requires_bearer_token(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                assert (await client.get("/api/admin/sessions/s00000001")).status_code == 401
                assert (await client.get("/api/admin/report")).status_code == 401
                wrong = await client.get(
                    "/api/admin/report", headers={"Authorization": "Bearer nope"}
                )
                assert wrong.status_code == 401

        asyncio.run(body())

    def test_admin_session_detail_includes_labels(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                created = await client.post(
                    "/api/sessions",
                    json={"student_id": "alice", "quiz_id": sample_quiz.quiz_id},
                )
                sid = created.json()["session_id"]
                await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.DIRECTION, 60)},
                )
                detail = await client.get(f"/api/admin/sessions/{sid}", headers=ADMIN)
                assert detail.status_code == 200
                turn = detail.json()["turns"][0]
                assert turn["response"]["classification"] == "direction"
                assert turn["response"]["confidence"] == 4

        asyncio.run(body())

    def test_admin_report(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                empty = await client.get("/api/admin/report", headers=ADMIN)
                assert empty.status_code == 404
                created = await client.post(
                    "/api/sessions",
                    json={"student_id": "alice", "quiz_id": sample_quiz.quiz_id},
                )
                sid = created.json()["session_id"]
                await client.post(
                    f"/api/sessions/{sid}/feedback",
                    json={"text": synth_essay(ErrorLabel.CORRECT, 60)},
                )
                report = await client.get("/api/admin/report", headers=ADMIN)
                assert report.status_code == 200
                assert report.json()["conv_stats"]["total_instances"] == 1
                text = await client.get(
                    "/api/admin/report", params={"format": "text"}, headers=ADMIN
                )
                assert "Total instances" in text.text

        asyncio.run(body())


class TestPreferenceApi:
    def test_round_trip(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            service.add_posthoc_feedback(
                "a1",
                "bob",
                PosthocFeedback(
                    essay_evaluation="ok",
                    inferred_level=KnowledgeLevel.NOVICE,
                    novice_feedback="N-text",
                    advanced_feedback="A-text",
                ),
            )
            async with client_for(service) as client:
                missing = await client.get("/api/preference/a1", params={"student_id": "zed"})
                assert missing.status_code == 404

                pair = await client.get("/api/preference/a1", params={"student_id": "bob"})
                assert pair.status_code == 200
                payload = pair.json()
                assert {payload["variant_a"], payload["variant_b"]} == {"N-text", "A-text"}
                assert "novice" not in json.dumps(payload).lower()
                assert payload["chosen"] is None

                choice = await client.post(
                    "/api/preference/a1/choice",
                    json={"student_id": "bob", "chosen": "B", "reasons": ["clearer"]},
                )
                assert choice.status_code == 200
                again = await client.get("/api/preference/a1", params={"student_id": "bob"})
                assert again.json()["chosen"] == "B"
                assert again.json()["reasons"] == ["clearer"]

                duplicate = await client.post(
                    "/api/preference/a1/choice",
                    json={"student_id": "bob", "chosen": "A", "reasons": []},
                )
                assert duplicate.status_code == 409

                invalid = await client.post(
                    "/api/preference/a1/choice",
                    json={"student_id": "bob", "chosen": "C", "reasons": []},
                )
                assert invalid.status_code == 422

        asyncio.run(body())


class TestHealth:
    def test_health(self, tmp_path, sample_quiz):
        async def body():
            service = make_service(tmp_path, sample_quiz)
            async with client_for(service) as client:
                response = await client.get("/api/health")
                assert response.json() == {"status": "ok"}

        asyncio.run(body())
