"""HTTP service exposing the experiment runners.

Every endpoint is synchronous compute over a validated request body and
returns the same RunResponse shape: a summary dict plus named text
artifacts.  Domain errors map to HTTP 400 with a stable `exit_code` field
(2 config, 3 capacity, 4 numeric gate, 5 empty result) that thin clients
translate into process exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import SCHEMA_VERSION, __version__
from .errors import GlassmixError
from .runs import (
    run_certify,
    run_landscape,
    run_simulate,
    run_spectrum,
    run_theory,
)
from .schemas import (
    CertifyConfig,
    ErrorPayload,
    HealthResponse,
    LandscapeConfig,
    RunResponse,
    SimulateConfig,
    SpectrumConfig,
    TheoryConfig,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="glassmix",
        version=__version__,
        description="Exact desk-scale experiments on single-flip dynamics "
                    "over Gaussian spin-glass energy landscapes.",
    )

    @app.exception_handler(GlassmixError)
    async def _domain_error(request: Request, exc: GlassmixError):
        payload = ErrorPayload(error=str(exc), error_type=type(exc).__name__,
                               exit_code=exc.exit_code)
        return JSONResponse(status_code=400, content=payload.model_dump())

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        payload = ErrorPayload(error=str(exc.errors()), error_type="ValidationError",
                               exit_code=2)
        return JSONResponse(status_code=422, content=payload.model_dump())

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__,
                              schema_version=SCHEMA_VERSION)

    @app.post("/v1/simulate", response_model=RunResponse)
    def simulate_endpoint(cfg: SimulateConfig):
        return run_simulate(cfg).to_response()

    @app.post("/v1/spectrum", response_model=RunResponse)
    def spectrum_endpoint(cfg: SpectrumConfig):
        return run_spectrum(cfg).to_response()

    @app.post("/v1/certify", response_model=RunResponse)
    def certify_endpoint(cfg: CertifyConfig):
        return run_certify(cfg).to_response()

    @app.post("/v1/landscape", response_model=RunResponse)
    def landscape_endpoint(cfg: LandscapeConfig):
        return run_landscape(cfg).to_response()

    @app.post("/v1/theory", response_model=RunResponse)
    def theory_endpoint(cfg: TheoryConfig):
        return run_theory(cfg).to_response()

    return app


app = create_app()
