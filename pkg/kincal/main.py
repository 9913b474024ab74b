# kincal/main.py
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from kincal import __version__
from kincal.api.v1.router import api_router
from kincal.core.config import settings
from kincal.core.exceptions import KincalError
from kincal.core.logging import configure_logging
from kincal.schemas.api import HealthResponse
from kincal.schemas.errors import APIError, ErrorDetail

configure_logging()
logger = logging.getLogger(__name__)


def create_app() -> FastAPI:
    app = FastAPI(
        title=settings.PROJECT_NAME,
        version=__version__,
        description="""
        **kincal API** - Diseño de experimentos para calibración cinemática

        Características:
        - Comprobación de validez de kernels sobre poses (S³ × R³)
        - Ejecución síncrona de experimentos BO / random con banco simulado
        - Calibración DH con mínimos cuadrados acotados
        """,
        docs_url="/docs",
        redoc_url="/redoc",
    )

    @app.exception_handler(KincalError)
    async def kincal_error_handler(request: Request, exc: KincalError):
        logger.warning(f"{request.url.path} failed: {exc.code}: {exc.message}")
        body = APIError(
            error=exc.code.lower(),
            message=exc.message,
            details=[
                ErrorDetail(
                    code=exc.code,
                    message=exc.message,
                    field=getattr(exc, "field", None),
                    details=exc.details or None,
                )
            ],
        )
        return JSONResponse(status_code=422, content=body.model_dump(mode="json"))

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(project=settings.PROJECT_NAME, version=__version__)

    # Incluir routers
    app.include_router(api_router, prefix=settings.API_V1_STR)
    return app


app = create_app()


def serve() -> None:
    """Entry point de `kincal-api`"""
    import uvicorn

    uvicorn.run("kincal.main:app", host="0.0.0.0", port=8000, reload=settings.DEBUG)
