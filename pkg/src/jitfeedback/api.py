"""HTTP/JSON surface over the session service.

Student-facing responses never include predicted labels, confidence values,
or the answer key; full per-turn detail is available only on the
bearer-token-gated admin routes.
"""

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .domain import EssayValidationError, SurveyResponse
from .gateway import BusyError
from .service import (
    AlreadyAnswered,
    DuplicateChoice,
    DuplicateSurvey,
    NotAnswered,
    NotGenerated,
    SessionClosed,
    SessionService,
    UnknownOption,
    UnknownQuiz,
    UnknownSession,
)

_STATUS = {
    UnknownQuiz: 404,
    UnknownSession: 404,
    NotGenerated: 404,
    SessionClosed: 409,
    AlreadyAnswered: 409,
    NotAnswered: 409,
    DuplicateSurvey: 409,
    DuplicateChoice: 409,
    UnknownOption: 422,
}


class CreateSessionBody(BaseModel):
    student_id: str
    quiz_id: str


class FeedbackBody(BaseModel):
    text: str


class AnswerBody(BaseModel):
    option_key: str


class SurveyBody(BaseModel):
    helpful: bool
    reasons: list[str] = []
    free_text: Optional[str] = None
    cluster_label: Optional[int] = None


class ChoiceBody(BaseModel):
    student_id: str
    chosen: str
    reasons: list[str] = []


def build_app(service: SessionService, *, admin_token: str) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        service.close()

    app = FastAPI(title="jitfeedback", lifespan=lifespan)

    @app.exception_handler(EssayValidationError)
    async def validation_error(_: Request, exc: EssayValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "error": "validation_failed",
                "violations": [v.to_dict() for v in exc.violations],
            },
        )

    @app.exception_handler(BusyError)
    async def busy_error(_: Request, exc: BusyError):
        return JSONResponse(
            status_code=429,
            content={"error": "busy", "retry_after_s": exc.retry_after_s},
            headers={"Retry-After": str(int(exc.retry_after_s))},
        )

    for error_type, status in _STATUS.items():

        def _make_handler(status_code: int, name: str):
            async def handler(_: Request, exc: Exception):
                return JSONResponse(status_code=status_code, content={"error": name})

            return handler

        app.exception_handler(error_type)(
            _make_handler(status, _camel_to_snake(error_type.__name__))
        )

    async def require_admin(authorization: Optional[str] = Header(default=None)) -> None:
        if authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=401, detail="admin token required")

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.get("/api/quizzes/{quiz_id}")
    async def get_quiz(quiz_id: str):
        return service.student_quiz_view(quiz_id)

    @app.post("/api/sessions")
    async def create_session(body: CreateSessionBody):
        session_id = await service.create_session(body.student_id, body.quiz_id)
        return {"session_id": session_id}

    @app.post("/api/sessions/{session_id}/feedback")
    async def submit_essay(session_id: str, body: FeedbackBody):
        result = await service.submit_essay(session_id, body.text)
        return {
            "turn_index": result.turn_index,
            "feedback": result.feedback,
            "degraded": result.degraded,
        }

    @app.post("/api/sessions/{session_id}/answer")
    async def record_answer(session_id: str, body: AnswerBody):
        correct = await service.record_answer(session_id, body.option_key)
        return {"answer_correct": correct}

    @app.post("/api/sessions/{session_id}/survey")
    async def record_survey(session_id: str, body: SurveyBody):
        await service.record_survey(
            session_id,
            SurveyResponse(
                helpful=body.helpful,
                reasons=tuple(body.reasons),
                free_text=body.free_text,
                cluster_label=body.cluster_label,
            ),
        )
        return {"ok": True}

    @app.get("/api/preference/{assignment_id}")
    async def get_preference(assignment_id: str, student_id: str):
        pair = service.get_preference_pair(assignment_id, student_id)
        return {
            "assignment_id": pair.assignment_id,
            "variant_a": pair.variant_a,
            "variant_b": pair.variant_b,
            "chosen": pair.chosen,
            "reasons": list(pair.reasons),
        }

    @app.post("/api/preference/{assignment_id}/choice")
    async def record_choice(assignment_id: str, body: ChoiceBody):
        if body.chosen not in ("A", "B"):
            raise HTTPException(status_code=422, detail="chosen must be 'A' or 'B'")
        await service.record_preference_choice(
            assignment_id, body.student_id, body.chosen, body.reasons
        )
        return {"ok": True}

    @app.get("/api/admin/sessions/{session_id}", dependencies=[Depends(require_admin)])
    async def admin_session(session_id: str):
        return service.session_view(session_id).to_dict()

    @app.get("/api/admin/report", dependencies=[Depends(require_admin)])
    async def admin_report(format: str = "json"):
        from . import analytics

        try:
            report = analytics.build_report(service.snapshot())
        except analytics.EmptyLog:
            raise HTTPException(status_code=404, detail="no sessions with turns yet")
        if format == "text":
            return PlainTextResponse(analytics.render_report_text(report))
        return report.to_dict()

    return app


def _camel_to_snake(name: str) -> str:
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i > 0:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)
