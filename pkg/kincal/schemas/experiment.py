# kincal/schemas/experiment.py
"""
Esquema del JSON de experimento

Cada sección se valida por separado; las comprobaciones que cruzan
secciones (longitudes por articulación, nombres de parámetros) se hacen al
final y lanzan ConfigFieldError con la ruta del campo afectado.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from kincal.schemas.design import ObjectiveWeights, UcbMode, UcbSchedule
from kincal.schemas.geometry import Pose, Se3Metric
from kincal.schemas.kernels import DEFAULT_TRUNCATION, ProductKernelParams, S3KernelParams, SeKernelParams
from kincal.schemas.kinematics import PARAM_GROUPS, DhChain, DhJoint, param_names


class ConfigFieldError(ValueError):
    """ValueError que recuerda la ruta del campo (p.ej. 'injected_errors.phi')"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _check_pair(value: Tuple[float, float]) -> Tuple[float, float]:
    first, second = value
    if first <= 0 or second <= 0:
        raise ValueError("weights must be positive")
    if abs(first + second - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 (got {first + second})")
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PoseSpec(_Section):
    """Pose en el JSON: q = [w, x, y, z], p = [x, y, z]"""
    q: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    p: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_pose(self) -> Pose:
        return Pose.from_arrays(self.q, self.p)


class ChainConfig(_Section):
    joints: List[DhJoint] = Field(..., min_length=1)
    base: PoseSpec = Field(default_factory=PoseSpec)
    tool: PoseSpec = Field(default_factory=PoseSpec)

    def build(self) -> DhChain:
        return DhChain(joints=self.joints, base=self.base.to_pose(), tool=self.tool.to_pose())


class InjectedErrors(_Section):
    """Errores DH inyectados en la cadena real; listas vacías = ceros"""
    phi: List[float] = []
    alpha: List[float] = []
    a: List[float] = []
    d: List[float] = []


class WeightsConfig(_Section):
    alpha: Tuple[float, float] = (0.5, 0.5)
    gamma: Tuple[float, float] = (0.5, 0.5)
    sup_p: Optional[float] = Field(default=None, gt=0)  # None -> diámetro de alcance de la cadena
    sup_q: float = Field(default=math.pi, gt=0, le=math.pi)

    @field_validator("alpha", "gamma")
    @classmethod
    def check_pair(cls, v):
        return _check_pair(v)


class KernelConfig(_Section):
    kappa: float = Field(default=0.5, gt=0)
    sigma: float = Field(default=1.0, gt=0)
    truncation: int = Field(default=DEFAULT_TRUNCATION, ge=1)
    beta: float = Field(default=0.5, gt=0)
    sigma_f: float = Field(default=1.0, gt=0)
    sigma_s: float = Field(default=1.0, gt=0)

    def params(self) -> ProductKernelParams:
        return ProductKernelParams(
            s3=S3KernelParams(kappa=self.kappa, sigma=self.sigma, truncation=self.truncation),
            se=SeKernelParams(beta=self.beta, sigma_f=self.sigma_f, sigma_n=0.0),
            sigma_s=self.sigma_s,
        )


class GpConfig(_Section):
    noise: float = Field(default=1e-3, ge=0)
    prior_mean: float = 0.0


class UcbConfig(_Section):
    mode: UcbMode = UcbMode.FIXED
    beta: float = Field(default=4.0, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)


class BoundsConfig(_Section):
    """Caja de la corrección: simétrica por tipo (angle/length) o explícita (lower/upper)"""
    angle: float = Field(default=2.0, ge=0)
    length: float = Field(default=0.3, ge=0)
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_explicit(self):
        if (self.lower is None) != (self.upper is None):
            raise ValueError("lower and upper must be given together")
        if self.lower is not None:
            if any(v > 0 for v in self.lower) or any(v < 0 for v in self.upper):
                raise ValueError("explicit bounds must satisfy lower <= 0 <= upper")
        return self

    def vectors(self, n_joints: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.lower is not None:
            return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        half = np.concatenate([np.full(2 * n_joints, self.angle), np.full(2 * n_joints, self.length)])
        return -half, half


class NoiseModel(_Section):
    """Ruido del banco: posición (m), rotación (rad), encoder (rad o m)"""
    position: float = Field(default=5e-4, ge=0)
    rotation: float = Field(default=math.radians(0.1), ge=0)
    joint: float = Field(default=0.0, ge=0)


class CalibrationConfig(_Section):
    max_iters: int = Field(default=20, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    probe_configurations: int = Field(default=20, ge=1)


class ExperimentConfig(_Section):
    """Descripción completa de un experimento (ver configs/wam7_default.json)"""

    name: str = "experiment"
    seed: int = Field(default=0, ge=0)
    iterations: int = Field(default=20, ge=1)
    candidate_count: int = Field(default=2000, ge=1)
    interleaved_calibration: bool = True
    chain: ChainConfig
    injected_errors: InjectedErrors = Field(default_factory=InjectedErrors)
    encoder_bias: List[float] = []
    known_parameters: List[str] = []
    weights: WeightsConfig = Field(default_factory=WeightsConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    gp: GpConfig = Field(default_factory=GpConfig)
    ucb: UcbConfig = Field(default_factory=UcbConfig)
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)

    @model_validator(mode="after")
    def check_joint_lengths(self):
        n = len(self.chain.joints)
        for group in PARAM_GROUPS:
            values = getattr(self.injected_errors, group)
            if values and len(values) != n:
                raise ConfigFieldError(f"injected_errors.{group}", f"expected {n} values, got {len(values)}")
        if self.encoder_bias and len(self.encoder_bias) != n:
            raise ConfigFieldError("encoder_bias", f"expected {n} values, got {len(self.encoder_bias)}")

        names = set(param_names(n))
        unknown = [p for p in self.known_parameters if p not in names]
        if unknown:
            raise ConfigFieldError("known_parameters", f"unknown parameter names {unknown}")

        if self.bounds.lower is not None:
            for key in ("lower", "upper"):
                if len(getattr(self.bounds, key)) != 4 * n:
                    raise ConfigFieldError(f"bounds.{key}", f"expected {4 * n} values")

        if self.weights.sup_p is None and self.reach_diameter() <= 0:
            raise ConfigFieldError("weights.sup_p", "chain has zero reach; set sup_p explicitly")

        lb, ub = self.bounds.vectors(n)
        delta = self.injected_delta()
        if np.any(delta < lb) or np.any(delta > ub):
            raise ConfigFieldError("injected_errors", "injected errors fall outside the correction bounds")
        return self

    # ------------------------------------------------------------------
    # Constructores de los tipos de dominio
    # ------------------------------------------------------------------

    @property
    def n_joints(self) -> int:
        return len(self.chain.joints)

    def build_chain(self) -> DhChain:
        return self.chain.build()

    def injected_delta(self) -> np.ndarray:
        """δ̄ inyectado en orden Ψ; el sesgo de encoder se suma a los offsets φ"""
        n = self.n_joints
        parts = []
        for group in PARAM_GROUPS:
            values = getattr(self.injected_errors, group)
            parts.append(np.asarray(values, dtype=float) if values else np.zeros(n))
        delta = np.concatenate(parts)
        if self.encoder_bias:
            delta[:n] += np.asarray(self.encoder_bias, dtype=float)
        return delta

    def known_mask(self) -> np.ndarray:
        """True para los parámetros declarados conocidos (no se estiman)"""
        known = set(self.known_parameters)
        return np.array([name in known for name in param_names(self.n_joints)])

    def reach_diameter(self) -> float:
        """2·Σ(|a_i| + |d_i|) de la cadena nominal"""
        return 2.0 * sum(abs(j.a) + abs(j.d) for j in self.chain.joints)

    def objective_weights(self) -> ObjectiveWeights:
        sup_p = self.weights.sup_p if self.weights.sup_p is not None else self.reach_diameter()
        alpha1, alpha2 = self.weights.alpha
        return ObjectiveWeights(alpha1=alpha1, alpha2=alpha2, sup_p=sup_p, sup_q=self.weights.sup_q)

    def metric(self) -> Se3Metric:
        gamma1, gamma2 = self.weights.gamma
        return Se3Metric(gamma1=gamma1, gamma2=gamma2)

    def ucb_schedule(self) -> UcbSchedule:
        return UcbSchedule(
            mode=self.ucb.mode,
            beta=self.ucb.beta,
            delta=self.ucb.delta,
            candidate_count=self.candidate_count,
        )

    def bound_vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.bounds.vectors(self.n_joints)
