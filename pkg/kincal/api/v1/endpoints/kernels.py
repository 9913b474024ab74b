# kincal/api/v1/endpoints/kernels.py
from fastapi import APIRouter

from kincal.api.v1.deps import resolve_config
from kincal.schemas.api import KernelCheckRequest
from kincal.schemas.results import KernelCheckReport
from kincal.services.kernel_check_service import run_kernel_check

router = APIRouter()


@router.post("/check", response_model=KernelCheckReport)
def check_kernels(request: KernelCheckRequest):
    """
    Reproduce el contraejemplo del kernel ingenuo y corre las suites PSD

    Los fallos de validez van en el informe (passed=false), no como error HTTP.
    """
    config = resolve_config(request.config)
    return run_kernel_check(config, seed=request.seed)
