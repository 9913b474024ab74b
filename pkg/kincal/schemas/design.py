# kincal/schemas/design.py
import math
from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from kincal.schemas.geometry import Pose


class DesignMode(str, Enum):
    """Estrategia de selección de poses"""
    BO = "bo"
    RANDOM = "random"


class UcbMode(str, Enum):
    FIXED = "fixed"
    SRINIVAS = "srinivas"


class ObjectiveWeights(BaseModel):
    """
    Pesos del objetivo f = -(α1·f_p/sup_p + α2·f_q/sup_q)

    Atributos:
        alpha1, alpha2: pesos positivos con α1 + α2 = 1
        sup_p: normalizador de posición (m)
        sup_q: normalizador de orientación (rad), 0 < sup_q <= π
    """

    model_config = ConfigDict(frozen=True)

    alpha1: float = Field(default=0.5, gt=0)
    alpha2: float = Field(default=0.5, gt=0)
    sup_p: float = Field(default=1.0, gt=0)
    sup_q: float = Field(default=math.pi, gt=0, le=math.pi)

    @model_validator(mode="after")
    def check_sum(self):
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise ValueError("alpha1 + alpha2 must equal 1")
        return self


class UcbSchedule(BaseModel):
    """β_k del GP-UCB: fijo o la regla de Srinivas 2·log(|D|·k²·π²/(6δ))"""

    model_config = ConfigDict(frozen=True)

    mode: UcbMode = UcbMode.FIXED
    beta: float = Field(default=4.0, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    candidate_count: int = Field(default=2000, ge=1)


class ObjectiveValue(BaseModel):
    """f y sus términos crudos; clipped si algún término normalizado superó 1"""
    f: float
    f_p: float
    f_q: float
    clipped: bool = False


class DesignRecord(BaseModel):
    """Una iteración del bucle de diseño"""

    iteration: int
    mode: DesignMode
    target: Pose
    measured: Pose
    computed: Pose
    theta: List[float]
    f: float = Field(..., ge=-1.0, le=0.0)
    f_p: float
    f_q: float
    ucb_value: float
    gp_mean: float
    gp_var: float
    calibrated: bool = False
