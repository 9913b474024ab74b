# kincal/schemas/kinematics.py
import math
from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from kincal.schemas.geometry import Pose

PARAM_GROUPS = ("phi", "alpha", "a", "d")


class JointKind(str, Enum):
    """Tipo de articulación"""
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"


class DhJoint(BaseModel):
    """
    Registro DH de una articulación

    Atributos:
        phi: offset del ángulo articular (rad)
        alpha: ángulo de torsión (rad)
        a: longitud del eslabón (m)
        d: offset del eslabón (m)
        limits: intervalo cerrado de la variable articular (rad o m)
    """

    model_config = ConfigDict(frozen=True)

    kind: JointKind = JointKind.REVOLUTE
    phi: float = 0.0
    alpha: float = 0.0
    a: float = 0.0
    d: float = 0.0
    limits: Tuple[float, float] = (-math.pi, math.pi)

    @model_validator(mode="after")
    def check_limits(self):
        lo, hi = self.limits
        if lo > hi:
            raise ValueError(f"joint limits are inverted: {self.limits}")
        if self.kind == JointKind.REVOLUTE and (lo < -2 * math.pi or hi > 2 * math.pi):
            raise ValueError("revolute joint limits must lie within [-2π, 2π]")
        return self


class DhChain(BaseModel):
    """Cadena serial: articulaciones DH ordenadas + transformaciones de base y herramienta"""

    model_config = ConfigDict(frozen=True)

    joints: List[DhJoint] = Field(..., min_length=1)
    base: Pose = Field(default_factory=Pose)
    tool: Pose = Field(default_factory=Pose)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def nominal_params(self) -> np.ndarray:
        """Ψ = [φ̄ ᾱ ā d̄] con longitud 4·n_j"""
        return np.array(
            [getattr(j, group) for group in PARAM_GROUPS for j in self.joints],
            dtype=float,
        )

    def revolute_mask(self) -> np.ndarray:
        return np.array([j.kind == JointKind.REVOLUTE for j in self.joints])

    def joint_limits(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.limits[0] for j in self.joints], dtype=float)
        hi = np.array([j.limits[1] for j in self.joints], dtype=float)
        return lo, hi

    def with_params(self, params: np.ndarray) -> "DhChain":
        """Copia de la cadena con los parámetros DH reemplazados"""
        params = np.asarray(params, dtype=float)
        n = self.n_joints
        joints = [
            j.model_copy(
                update={
                    "phi": float(params[i]),
                    "alpha": float(params[n + i]),
                    "a": float(params[2 * n + i]),
                    "d": float(params[3 * n + i]),
                }
            )
            for i, j in enumerate(self.joints)
        ]
        return self.model_copy(update={"joints": joints})


def param_names(n_joints: int) -> List[str]:
    """Nombres de columna en el orden de Ψ: phi_1..phi_n, alpha_1.., a_1.., d_1.."""
    return [f"{group}_{i + 1}" for group in PARAM_GROUPS for i in range(n_joints)]


class IdentifiabilityReport(BaseModel):
    """Resultado del test de rango sobre J_n"""
    rank: int
    ok: bool
    active_columns: int
    singular_values: List[float] = []
