# kincal/services/kinematics.py
"""
Cadenas seriales parametrizadas por DH: transformaciones de eslabón,
cinemática directa, jacobiano de identificación y diagnóstico de identificabilidad.

Layout de Ψ (ParamVector): [φ_1..φ_n, α_1..α_n, a_1..a_n, d_1..d_n].
Filas del jacobiano por medida: [q_w, q_x, q_y, q_z, p_x, p_y, p_z].
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from kincal.core.exceptions import InvalidArgumentError, TooFewMeasurementsError
from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import DhChain, DhJoint, IdentifiabilityReport, JointKind
from kincal.services.geometry import align_sign_batch, pose_to_homogeneous, rotmat_to_quat_batch

logger = logging.getLogger(__name__)

JACOBIAN_STEP = 1e-6
RANK_TOL = 1e-8
POSE_DIM = 7

Seed = Union[int, Sequence[int], None]


def _link_transforms(phi, alpha, a, d) -> np.ndarray:
    """Matrices DH Rz(φ)·Tz(d)·Tx(a)·Rx(α) para arrays de cualquier forma -> (..., 4, 4)"""
    phi, alpha, a, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (phi, alpha, a, d)))
    cp, sp = np.cos(phi), np.sin(phi)
    ca, sa = np.cos(alpha), np.sin(alpha)
    T = np.zeros(phi.shape + (4, 4))
    T[..., 0, 0] = cp
    T[..., 0, 1] = -sp * ca
    T[..., 0, 2] = sp * sa
    T[..., 0, 3] = a * cp
    T[..., 1, 0] = sp
    T[..., 1, 1] = cp * ca
    T[..., 1, 2] = -cp * sa
    T[..., 1, 3] = a * sp
    T[..., 2, 1] = sa
    T[..., 2, 2] = ca
    T[..., 2, 3] = d
    T[..., 3, 3] = 1.0
    return T


def dh_link_transform(joint: DhJoint, theta: float) -> np.ndarray:
    """
    Transformación homogénea del eslabón para la variable articular theta

    Revoluta: ángulo φ + θ y offset d. Prismática: ángulo φ y offset d + θ.
    """
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"joint variable must be finite, got {theta}")
    if joint.kind == JointKind.REVOLUTE:
        return _link_transforms(joint.phi + theta, joint.alpha, joint.a, joint.d)
    return _link_transforms(joint.phi, joint.alpha, joint.a, joint.d + theta)


def _as_param_batch(chain: DhChain, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != 4 * chain.n_joints or params.ndim > 2:
        raise InvalidArgumentError(
            f"parameter vector must have length {4 * chain.n_joints}, got shape {params.shape}"
        )
    return np.atleast_2d(params)


def _as_joint_batch(chain: DhChain, thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape[-1:] != (chain.n_joints,) or thetas.ndim > 2:
        raise InvalidArgumentError(
            f"joint vector must have length {chain.n_joints}, got shape {thetas.shape}"
        )
    return np.atleast_2d(thetas)


def forward_kinematics_transforms(chain: DhChain, params, thetas) -> np.ndarray:
    """
    f_B · Π f_i(θ_i) · f_T vectorizado

    Args:
        params: (4n,) o (B, 4n)
        thetas: (n,) o (B, n); se hace broadcast contra params

    Returns:
        Array (B, 4, 4)
    """
    P = _as_param_batch(chain, params)
    TH = _as_joint_batch(chain, thetas)
    batch = max(P.shape[0], TH.shape[0])
    P = np.broadcast_to(P, (batch, P.shape[1]))
    TH = np.broadcast_to(TH, (batch, TH.shape[1]))

    n = chain.n_joints
    rev = chain.revolute_mask()
    phi = P[:, :n] + np.where(rev, TH, 0.0)
    alpha = P[:, n : 2 * n]
    a = P[:, 2 * n : 3 * n]
    d = P[:, 3 * n :] + np.where(rev, 0.0, TH)
    links = _link_transforms(phi, alpha, a, d)

    T = np.broadcast_to(pose_to_homogeneous(chain.base), (batch, 4, 4))
    for i in range(n):
        T = T @ links[:, i]
    return T @ pose_to_homogeneous(chain.tool)


def forward_kinematics_arrays(chain: DhChain, params, thetas) -> Tuple[np.ndarray, np.ndarray]:
    """Cinemática directa vectorizada -> (Q (B, 4) canónicos, P (B, 3))"""
    T = forward_kinematics_transforms(chain, params, thetas)
    return rotmat_to_quat_batch(T[:, :3, :3]), T[:, :3, 3].copy()


def forward_kinematics(chain: DhChain, params, theta) -> Pose:
    """
    Pose del efector final para una configuración articular

    Raises:
        InvalidArgumentError: si las dimensiones de params/theta no cuadran con la cadena
    """
    params = np.asarray(params, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if params.ndim != 1 or theta.ndim != 1:
        raise InvalidArgumentError("forward_kinematics expects a single parameter and joint vector")
    Q, P = forward_kinematics_arrays(chain, params, theta)
    return Pose.from_arrays(Q[0], P[0])


def stacked_jacobian(chain: DhChain, params, thetas, step: float = JACOBIAN_STEP) -> np.ndarray:
    """
    J_n (7n × 4n_j) por diferencias centrales, apilado en el orden de thetas

    Cada cuaternión perturbado se alinea en signo con el de la pose sin
    perturbar antes de diferenciar.
    """
    params = np.asarray(params, dtype=float)
    TH = np.asarray(thetas, dtype=float)
    if TH.ndim == 2 and TH.shape[0] == 0:
        raise InvalidArgumentError("at least one joint configuration is required")
    TH = _as_joint_batch(chain, TH)
    _as_param_batch(chain, params)

    k = params.size
    m = TH.shape[0]
    Q0, _ = forward_kinematics_arrays(chain, params, TH)

    offsets = np.eye(k) * step
    perturbed = np.concatenate([params + offsets, params - offsets])
    Q, P = forward_kinematics_arrays(
        chain,
        np.repeat(perturbed, m, axis=0),
        np.tile(TH, (2 * k, 1)),
    )
    Q = align_sign_batch(np.tile(Q0, (2 * k, 1)), Q)

    poses = np.concatenate([Q, P], axis=1).reshape(2, k, m, POSE_DIM)
    J = (poses[0] - poses[1]) / (2.0 * step)
    return J.transpose(1, 2, 0).reshape(POSE_DIM * m, k)


def identification_jacobian(chain: DhChain, params, theta, step: float = JACOBIAN_STEP) -> np.ndarray:
    """J = ∂f(Ψ)/∂Ψ en una configuración (7 × 4n_j)"""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise InvalidArgumentError("identification_jacobian expects a single joint vector")
    return stacked_jacobian(chain, params, theta[None, :], step=step)


def _as_mask(mask: Optional[Sequence[bool]], n_cols: int) -> np.ndarray:
    if mask is None:
        return np.ones(n_cols, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n_cols,):
        raise InvalidArgumentError(f"column mask must have length {n_cols}, got {mask.shape}")
    return mask


def identifiability_check(Jn: np.ndarray, mask: Optional[Sequence[bool]] = None) -> IdentifiabilityReport:
    """
    Test de rango sobre las columnas activas de J_n

    rank = #σ > τ·σ_max con τ = 1e-8; ok <=> rank == columnas activas.

    Raises:
        TooFewMeasurementsError: si 7n < columnas activas
    """
    Jn = np.asarray(Jn, dtype=float)
    mask = _as_mask(mask, Jn.shape[1])
    active = int(mask.sum())
    if Jn.shape[0] < active:
        required = math.ceil(active / POSE_DIM)
        raise TooFewMeasurementsError(
            f"{Jn.shape[0]} residual rows cannot identify {active} parameters; "
            f"at least {required} measurements are required",
            required=required,
        )
    if active == 0:
        return IdentifiabilityReport(rank=0, ok=True, active_columns=0)

    s = np.linalg.svd(Jn[:, mask], compute_uv=False)
    tol = RANK_TOL * s.max()
    rank = int(np.sum(s > tol))
    return IdentifiabilityReport(
        rank=rank,
        ok=rank == active,
        active_columns=active,
        singular_values=s.tolist(),
    )


def independent_columns(Jn: np.ndarray, candidates: Optional[Sequence[bool]] = None) -> np.ndarray:
    """
    Admisión voraz de columnas: una columna entra si el menor valor singular
    de las columnas ya admitidas más ella sigue por encima de τ·σ_max.
    """
    Jn = np.asarray(Jn, dtype=float)
    candidates = _as_mask(candidates, Jn.shape[1])
    admitted: List[int] = []
    if not candidates.any():
        return np.zeros(Jn.shape[1], dtype=bool)

    tol = RANK_TOL * np.linalg.svd(Jn[:, candidates], compute_uv=False).max()
    for col in np.flatnonzero(candidates):
        trial = admitted + [int(col)]
        if np.linalg.svd(Jn[:, trial], compute_uv=False).min() > tol:
            admitted.append(int(col))

    mask = np.zeros(Jn.shape[1], dtype=bool)
    mask[admitted] = True
    return mask


def sample_joint_vectors(chain: DhChain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Configuraciones uniformes dentro de los límites articulares -> (count, n_j)"""
    lo, hi = chain.joint_limits()
    return rng.uniform(lo, hi, size=(count, chain.n_joints))


def detect_dependent_columns(
    chain: DhChain,
    params,
    n_probe: int,
    seed: Seed = None,
    known: Optional[Sequence[bool]] = None,
) -> np.ndarray:
    """
    Máscara de parámetros identificables (True = se estima)

    Apila J en n_probe configuraciones aleatorias (semilla fija) y admite
    columnas de forma voraz; las rechazadas son los parámetros dependientes.
    Los parámetros conocidos no compiten en la admisión.

    Args:
        known: máscara de parámetros conocidos (True = no se estima)
    """
    n_cols = 4 * chain.n_joints
    candidates = ~_as_mask(known, n_cols) if known is not None else np.ones(n_cols, dtype=bool)
    n_free = int(candidates.sum())
    if n_probe * POSE_DIM < n_free:
        required = math.ceil(n_free / POSE_DIM)
        raise TooFewMeasurementsError(
            f"n_probe={n_probe} is too small for {n_free} parameters", required=required
        )
    rng = np.random.default_rng(seed)
    thetas = sample_joint_vectors(chain, n_probe, rng)
    mask = independent_columns(stacked_jacobian(chain, params, thetas), candidates=candidates)
    logger.info(f"Identifiable parameters: {int(mask.sum())}/{n_cols} ({n_cols - n_free} known)")
    return mask
