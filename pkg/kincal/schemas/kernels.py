# kincal/schemas/kernels.py
from pydantic import BaseModel, ConfigDict, Field

# Orden de truncamiento por defecto de la serie en S³ (cola < 1e-10 desde κ = 0.1)
DEFAULT_TRUNCATION = 96


class SeKernelParams(BaseModel):
    """Hiperparámetros del kernel cuadrático-exponencial euclídeo"""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(default=0.5, gt=0)
    sigma_f: float = Field(default=1.0, gt=0)
    sigma_n: float = Field(default=0.0, ge=0)  # término de mismo punto (delta de Kronecker)


class S3KernelParams(BaseModel):
    """Hiperparámetros del kernel de serie en S³"""

    model_config = ConfigDict(frozen=True)

    kappa: float = Field(default=0.5, gt=0)
    sigma: float = Field(default=1.0, gt=0)
    truncation: int = Field(default=DEFAULT_TRUNCATION, ge=1)


class ProductKernelParams(BaseModel):
    """k = σ_s² · k_S3(q_i, q_j) · k_SE(p_i, p_j)"""

    model_config = ConfigDict(frozen=True)

    s3: S3KernelParams = Field(default_factory=S3KernelParams)
    se: SeKernelParams = Field(default_factory=SeKernelParams)
    sigma_s: float = Field(default=1.0, gt=0)
