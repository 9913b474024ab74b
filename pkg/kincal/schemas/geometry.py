# kincal/schemas/geometry.py
import math
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Tolerancia para aceptar un cuaternión "casi unitario" antes de renormalizar
QUAT_INPUT_TOL = 1e-6


class UnitQuaternion(BaseModel):
    """
    Rotación como punto de S³, orden de componentes (w, x, y, z)

    q y -q representan la misma rotación; usar equiv_rotation para
    comparar a nivel de rotación.
    """

    model_config = ConfigDict(frozen=True)

    w: float
    x: float
    y: float
    z: float

    @model_validator(mode="before")
    @classmethod
    def normalize(cls, data):
        if not isinstance(data, dict):
            return data
        comps = [float(data.get(k, math.nan)) for k in ("w", "x", "y", "z")]
        norm = math.sqrt(sum(c * c for c in comps))
        if not math.isfinite(norm) or abs(norm - 1.0) > QUAT_INPUT_TOL:
            raise ValueError(f"quaternion norm {norm} is not unit")
        return dict(zip(("w", "x", "y", "z"), (c / norm for c in comps)))

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(w=1.0, x=0.0, y=0.0, z=0.0)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "UnitQuaternion":
        w, x, y, z = (float(v) for v in values)
        return cls(w=w, x=x, y=y, z=z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def equiv_rotation(self, other: "UnitQuaternion", tol: float = 1e-12) -> bool:
        """Igualdad a nivel de rotación (q ≡ -q)"""
        a, b = self.as_array(), other.as_array()
        return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol


class Pose(BaseModel):
    """Pose del efector final: orientación (cuaternión) + posición en metros"""

    model_config = ConfigDict(frozen=True)

    q: UnitQuaternion = Field(default_factory=UnitQuaternion.identity)
    p: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def from_arrays(cls, q: Sequence[float], p: Sequence[float]) -> "Pose":
        return cls(q=UnitQuaternion.from_array(q), p=tuple(float(v) for v in p))

    @classmethod
    def from_homogeneous(cls, T: np.ndarray) -> "Pose":
        from kincal.services.geometry import homogeneous_to_pose

        return homogeneous_to_pose(T)

    def position(self) -> np.ndarray:
        return np.array(self.p)

    def to_homogeneous(self) -> np.ndarray:
        from kincal.services.geometry import pose_to_homogeneous

        return pose_to_homogeneous(self)


class Se3Metric(BaseModel):
    """Pesos (γ1, γ2) que equilibran traslación y rotación en d_SE(3)"""

    model_config = ConfigDict(frozen=True)

    gamma1: float = Field(default=0.5, gt=0)
    gamma2: float = Field(default=0.5, gt=0)

    @model_validator(mode="after")
    def check_sum(self):
        if abs(self.gamma1 + self.gamma2 - 1.0) > 1e-12:
            raise ValueError("gamma1 + gamma2 must equal 1")
        return self
