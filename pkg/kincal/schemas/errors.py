# kincal/schemas/errors.py
from datetime import datetime, timezone
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ErrorDetail(BaseModel):
    """Detalle de un error"""
    code: str  # "NOT_IDENTIFIABLE", "CONFIG_VALIDATION", ...
    message: str
    field: Optional[str] = None  # Campo que causó el error (ruta con puntos)
    details: Optional[dict] = None


class APIError(BaseModel):
    """Error response estándar"""
    error: str  # Tipo de error general
    message: str
    details: Optional[List[ErrorDetail]] = None
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "error": "config_validation",
                "message": "weights.alpha: weights must sum to 1 (got 0.9)",
                "details": [
                    {
                        "code": "CONFIG_VALIDATION",
                        "message": "weights must sum to 1 (got 0.9)",
                        "field": "weights.alpha",
                    }
                ],
                "timestamp": "2026-01-15T10:30:00Z",
            }
        }
    )
