# kincal/providers/rig/sim_rig.py
import logging
from typing import Optional, Sequence, Union

import numpy as np

from kincal.core.exceptions import InvalidArgumentError, RigError
from kincal.providers.rig.base import MeasurementRig
from kincal.schemas.calibration import Measurement
from kincal.schemas.experiment import NoiseModel
from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import DhChain
from kincal.services.geometry import axis_angle_quat, canonicalize_quat_batch, quat_multiply
from kincal.services.kinematics import forward_kinematics_arrays

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int], None]


class SimRig(MeasurementRig):
    """
    Banco simulado: la cadena "real" es la nominal con los errores DH inyectados

    Modelo de medida por orden:
        θ = θ_objetivo + N(0, σ_joint), recortado a límites
        p = p_real(θ) + N(0, σ_pos·I)
        q = q_real(θ) ⊗ rot(eje uniforme, |N(0, σ_rot)|)

    Los cuatro sorteos se hacen siempre y en ese orden, con independencia de
    que el sigma correspondiente sea 0, así el flujo aleatorio sólo depende
    de la semilla.
    """

    def __init__(
        self,
        chain: DhChain,
        injected: Optional[Sequence[float]] = None,
        noise: Optional[NoiseModel] = None,
        seed: Seed = None,
    ):
        self.chain = chain
        nominal = chain.nominal_params()
        self.injected = np.zeros_like(nominal) if injected is None else np.asarray(injected, dtype=float)
        if self.injected.shape != nominal.shape:
            raise InvalidArgumentError(f"injected errors must have length {nominal.size}")
        self.true_params = nominal + self.injected
        self.noise = noise or NoiseModel(position=0.0, rotation=0.0, joint=0.0)
        self._rng = np.random.default_rng(seed)
        self._lo, self._hi = chain.joint_limits()

    def get_name(self) -> str:
        return "sim"

    def command(self, target: Pose, theta: Optional[Sequence[float]] = None) -> Measurement:
        if theta is None:
            raise InvalidArgumentError("simulated rig needs the joint vector that generated the target pose")
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.chain.n_joints,):
            raise InvalidArgumentError(f"joint vector must have length {self.chain.n_joints}")

        z_joint = self._rng.standard_normal(self.chain.n_joints)
        z_pos = self._rng.standard_normal(3)
        axis = self._rng.standard_normal(3)
        z_angle = self._rng.standard_normal()

        measured_theta = np.clip(theta + self.noise.joint * z_joint, self._lo, self._hi)
        Q, P = forward_kinematics_arrays(self.chain, self.true_params, measured_theta)
        q = Q[0]
        p = P[0] + self.noise.position * z_pos

        angle = abs(self.noise.rotation * z_angle)
        if angle > 0:
            q = quat_multiply(q, axis_angle_quat(axis, angle))
            q = canonicalize_quat_batch(q / np.linalg.norm(q))[0]

        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise RigError("simulated measurement is not finite")
        return Measurement(theta=measured_theta.tolist(), pose=Pose.from_arrays(q, p))
