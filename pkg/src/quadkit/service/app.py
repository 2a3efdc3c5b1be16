"""FastAPI application exposing the toolkit over HTTP.

Domain errors surface as HTTP 400 with the library error code; malformed
request bodies are rejected by pydantic validation (HTTP 422) before any
handler runs.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import QuadkitError
from . import handlers, schemas

app = FastAPI(title="quadkit", description="Quadrilateral detection toolkit service")


@app.exception_handler(QuadkitError)
def quadkit_error_handler(request: Request, exc: QuadkitError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": exc.code, "detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return handlers.health()


@app.post("/v1/iou", response_model=schemas.IouResponse, responses={400: {"model": schemas.ErrorResponse}})
def iou(req: schemas.IouRequest):
    return handlers.iou(req)


@app.post("/v1/grid", response_model=schemas.GridResponse, responses={400: {"model": schemas.ErrorResponse}})
def grid(req: schemas.GridRequest):
    return handlers.grid(req)


@app.post("/v1/pnms", response_model=schemas.PnmsResponse, responses={400: {"model": schemas.ErrorResponse}})
def run_pnms(req: schemas.PnmsRequest):
    return handlers.run_pnms(req)


@app.post(
    "/v1/targets", response_model=schemas.TargetsResponse, responses={400: {"model": schemas.ErrorResponse}}
)
def build_targets(req: schemas.TargetsRequest):
    return handlers.build_targets(req)


@app.post(
    "/v1/evaluate", response_model=schemas.EvaluateResponse, responses={400: {"model": schemas.ErrorResponse}}
)
def run_evaluate(req: schemas.EvaluateRequest):
    return handlers.run_evaluate(req)


@app.post("/v1/synth", response_model=schemas.SynthResponse, responses={400: {"model": schemas.ErrorResponse}})
def run_synth(req: schemas.SynthRequest):
    return handlers.run_synth(req)
