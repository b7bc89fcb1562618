"""HTTP assessment API.

POST /v1/assess takes multipart audio plus mode/target fields and returns
the scores with per-word time spans so a client can point at the exact
stretch of signal behind each score.  The loaded model is read-shared;
requests never mutate it.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, File, Form, HTTPException, UploadFile

from .audio import decode_audio_bytes
from .errors import AssessmentUnavailable
from .evaluation import MODE_CLOSED, MODE_OPEN, AssessmentResult
from .pipeline import Assessor

API_VERSION = "v1"


def response_payload(result: AssessmentResult, mode: str, ranges_dict: dict) -> dict:
    words = []
    keyed = result.keyed_transcript
    for i, scores in enumerate(result.scores.word):
        entry: dict = {"scores": scores}
        if keyed is not None and i < len(keyed.words):
            w = keyed.words[i]
            entry.update({"text": w.text, "start": w.start, "end": w.end})
        words.append(entry)
    return {
        "mode": mode,
        "sentence": result.scores.sentence,
        "completeness": result.scores.completeness,
        "words": words,
        "transcripts": {
            "keyed": [w.text for w in keyed.words] if keyed else [],
            "perceived": [w.text for w in result.perceived_transcript.words]
            if result.perceived_transcript
            else [],
        },
        "score_ranges": ranges_dict,
    }


def create_app(assessor_factory) -> FastAPI:
    """assessor_factory() -> Assessor; called once at startup so requests
    after boot hit a warm model.  Returns 503 until loading finishes."""
    state: dict = {"assessor": None, "error": None}

    @asynccontextmanager
    async def lifespan(_app):
        try:
            state["assessor"] = assessor_factory()
        except Exception as exc:  # surface at /healthz instead of crashing
            state["error"] = str(exc)
        yield

    app = FastAPI(title="multipa", version=API_VERSION, lifespan=lifespan)

    @app.get("/healthz")
    @app.get(f"/{API_VERSION}/healthz")
    def healthz():
        return {
            "status": "ok" if state["assessor"] is not None else "loading",
            "error": state["error"],
        }

    @app.post(f"/{API_VERSION}/assess")
    async def assess(
        audio: UploadFile = File(...),
        mode: str = Form(...),
        target_text: str | None = Form(None),
    ):
        assessor: Assessor | None = state["assessor"]
        if assessor is None:
            raise HTTPException(status_code=503, detail=state["error"] or "model is loading")
        if mode not in (MODE_CLOSED, MODE_OPEN):
            raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}")
        if mode == MODE_CLOSED and not target_text:
            raise HTTPException(status_code=400, detail="closed mode requires target_text")
        if mode == MODE_OPEN and target_text:
            raise HTTPException(status_code=400, detail="open mode must not include target_text")
        data = await audio.read()
        try:
            clip = decode_audio_bytes(data, audio.filename or "upload")
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"cannot decode audio: {exc}") from exc
        try:
            result = assessor.assess_clip(clip, target_text, mode)
        except AssessmentUnavailable as exc:
            raise HTTPException(status_code=422, detail=f"cannot assess: {exc}") from exc
        return response_payload(result, mode, assessor.ranges.to_dict())

    return app
