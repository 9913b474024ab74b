# kincal/api/v1/deps.py
from typing import Any, Dict, Optional

from kincal.core.config import settings
from kincal.schemas.experiment import ExperimentConfig
from kincal.services.experiment_service import load_config, parse_config


def resolve_config(payload: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """Config del body si viene; si no, el experimento por defecto de Settings"""
    if payload is None:
        return load_config(settings.DEFAULT_CONFIG)
    return parse_config(payload)
