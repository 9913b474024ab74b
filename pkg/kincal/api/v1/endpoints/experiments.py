# kincal/api/v1/endpoints/experiments.py
from typing import Any, Dict, Optional

from fastapi import APIRouter, Body, Query

from kincal.api.v1.deps import resolve_config
from kincal.schemas.api import ExperimentRunResponse
from kincal.schemas.results import RunMode
from kincal.services.experiment_service import run_experiment

router = APIRouter()


@router.post("/run", response_model=ExperimentRunResponse)
def run(
    config: Optional[Dict[str, Any]] = Body(default=None),
    mode: RunMode = Query(default=RunMode.BOTH),
    seed: Optional[int] = Query(default=None, ge=0),
):
    """
    Ejecuta el experimento de forma síncrona y devuelve los resúmenes

    Body: JSON de experimento (mismo esquema que configs/wam7_default.json).
    """
    results = run_experiment(resolve_config(config), mode=mode, seed=seed)
    return ExperimentRunResponse(
        summaries={m.value: r.summary for m, r in results.results.items()}
    )
