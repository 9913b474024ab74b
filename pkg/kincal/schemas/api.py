# kincal/schemas/api.py
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from kincal.schemas.results import ExperimentSummary


class KernelCheckRequest(BaseModel):
    """Request para el kernel check; sin config se usa el experimento por defecto"""
    config: Optional[Dict[str, Any]] = None
    seed: int = Field(default=0, ge=0)


class ExperimentRunResponse(BaseModel):
    """Resúmenes por modo de una ejecución síncrona (no se escribe nada en disco)"""
    summaries: Dict[str, ExperimentSummary]


class HealthResponse(BaseModel):
    status: str = "healthy"
    project: str
    version: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
