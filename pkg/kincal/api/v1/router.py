# kincal/api/v1/router.py
from fastapi import APIRouter

from kincal.api.v1.endpoints import experiments, kernels

api_router = APIRouter()

# Incluir routers de endpoints
api_router.include_router(
    kernels.router,
    prefix="/kernels",
    tags=["Kernels"]
)

api_router.include_router(
    experiments.router,
    prefix="/experiments",
    tags=["Experiments"]
)
