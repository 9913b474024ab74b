# kincal/schemas/calibration.py
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import DhChain


class Measurement(BaseModel):
    """Una medida del banco: variables articulares leídas + pose medida"""

    model_config = ConfigDict(frozen=True)

    theta: List[float]
    pose: Pose


class CalibrationProblem(BaseModel):
    """
    Problema de identificación DH

    Atributos:
        chain: cadena nominal
        params: Ψ de trabajo (4·n_j)
        measurements: pares (θ, pose medida)
        lower / upper: caja de la corrección acumulada; lower <= 0 <= upper
        mask: columnas identificables (True = se estima)
    """

    model_config = ConfigDict(frozen=True)

    chain: DhChain
    params: List[float]
    measurements: List[Measurement] = Field(..., min_length=1)
    lower: List[float]
    upper: List[float]
    mask: List[bool]

    @model_validator(mode="after")
    def check_dimensions(self):
        n = self.chain.n_joints
        for name in ("params", "lower", "upper", "mask"):
            if len(getattr(self, name)) != 4 * n:
                raise ValueError(f"{name} must have length {4 * n}")
        for i, m in enumerate(self.measurements):
            if len(m.theta) != n:
                raise ValueError(f"measurements[{i}].theta must have length {n}")
        lb, ub = np.asarray(self.lower), np.asarray(self.upper)
        if np.any(lb > 0) or np.any(ub < 0):
            raise ValueError("bounds must satisfy lower <= 0 <= upper")
        return self

    def thetas(self) -> np.ndarray:
        return np.array([m.theta for m in self.measurements], dtype=float)

    def measured_poses(self) -> List[Pose]:
        return [m.pose for m in self.measurements]


class CalibrationStep(BaseModel):
    """Una iteración de relinealización"""
    iteration: int
    residual_norm: float
    step_norm: float
    backtracks: int = 0
    active_bounds: int = 0


class CalibrationResult(BaseModel):
    """Ψ* = Ψ + δ con δ la corrección acumulada"""
    params: List[float]
    delta: List[float]
    mask: List[bool]
    converged: bool
    residual_norm: float
    residual_rms: float
    history: List[CalibrationStep] = []
