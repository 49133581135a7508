"""FastAPI wiring for the wire protocol."""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .engine import InvalidRequest, LogitEngine


class TopkRequest(BaseModel):
    prompt_token_ids: list[int]
    generated_token_ids: list[int]
    k: int


def build_app(engine: LogitEngine) -> FastAPI:
    """Application serving /v1/topk, /v1/vocab and /healthz.

    Every error leaves the server as JSON {"error": string}: 400 for
    contract violations, 500 for inference failures, and the framework
    defaults (404, 405, body validation) are rewritten to match.
    """
    app = FastAPI(title="logitserve", docs_url=None, redoc_url=None)

    @app.exception_handler(InvalidRequest)
    async def _invalid(request: Request, exc: InvalidRequest) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(StarletteHTTPException)
    async def _http(request: Request, exc: StarletteHTTPException) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(Exception)
    async def _inference(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=500, content={"error": f"inference failure: {exc}"}
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/v1/vocab")
    def vocab() -> dict:
        return {
            "tokens": [{"id": i, "text": t} for i, t in engine.vocab()],
            "eos_texts": engine.eos_texts,
        }

    @app.post("/v1/topk")
    def topk(request: TopkRequest) -> dict:
        candidates = engine.topk(
            request.prompt_token_ids, request.generated_token_ids, request.k
        )
        return {"candidates": [asdict(c) for c in candidates]}

    return app
