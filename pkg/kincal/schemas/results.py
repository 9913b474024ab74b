# kincal/schemas/results.py
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from kincal.schemas.calibration import Measurement
from kincal.schemas.design import DesignMode, DesignRecord


class RunMode(str, Enum):
    """Modos de `kincal run`"""
    BO = "bo"
    RANDOM = "random"
    BOTH = "both"

    def design_modes(self) -> List[DesignMode]:
        if self == RunMode.BOTH:
            return [DesignMode.BO, DesignMode.RANDOM]
        return [DesignMode(self.value)]


class CalibrationStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    SKIPPED = "skipped"  # medidas insuficientes o no identificables


class ExperimentSummary(BaseModel):
    """Resumen JSON de una ejecución (autodescriptivo: incluye el config usado)"""

    config_echo: Dict[str, Any]
    mode: DesignMode
    seed: int
    final_objective: float
    objectives: List[float]
    recovered_delta: List[float]
    injected_delta: List[float]
    per_param_abs_error: List[float]
    identifiable_mask: List[bool]
    param_names: List[str]
    iterations: int
    calibration_status: CalibrationStatus
    calibration_residual_rms: Optional[float] = None
    wall_time_s: float
    generated_at: datetime


class ModeResult(BaseModel):
    """Historial + resumen de un modo"""
    records: List[DesignRecord]
    summary: ExperimentSummary
    measurements: List[Measurement] = []


class ExperimentResults(BaseModel):
    """Bundle de resultados de run_experiment"""
    results: Dict[DesignMode, ModeResult]
    files: List[str] = []


# ============================================================================
# KERNEL CHECK
# ============================================================================

class EigenvalueCheck(BaseModel):
    """Autovalores del Gram del kernel ingenuo sobre las cuatro poses de referencia"""
    beta: float
    eigenvalues: List[float]
    expected: List[float]
    max_abs_error: float
    passed: bool


class PsdSuiteResult(BaseModel):
    """Mínimo autovalor sobre los conjuntos aleatorios de un kernel y un κ"""
    kernel: str
    kappa: Optional[float] = None
    sets: int
    set_size: int
    min_eigenvalue: float
    passed: bool


class KernelCheckReport(BaseModel):
    example: List[EigenvalueCheck]
    psd_suites: List[PsdSuiteResult]
    naive_min_eigenvalue: float
    naive_failure_detected: bool
    passed: bool
    seed: int


# ============================================================================
# COMPARE
# ============================================================================

class SeedComparison(BaseModel):
    seed: int
    bo_final_objective: float
    random_final_objective: float


class CompareReport(BaseModel):
    """BO vs muestreo aleatorio con semillas emparejadas"""
    seeds: List[SeedComparison]
    bo_median_abs_final: float
    random_median_abs_final: float
    bo_not_worse: bool
    generated_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
