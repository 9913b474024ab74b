# kincal/services/geometry.py
"""
Geometría de cuaterniones y desplazamientos rígidos

Convenciones:
- Cuaterniones siempre en orden (w, x, y, z).
- Signo canónico: w >= 0; si w == 0, la primera componente no nula de (x, y, z) es positiva.
- Todas las funciones son puras; las variantes *_batch operan sobre arrays (n, 4) / (n, 3, 3).
"""
import logging
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from kincal.core.exceptions import InvalidArgumentError
from kincal.schemas.geometry import Pose, Se3Metric, UnitQuaternion

logger = logging.getLogger(__name__)

QuaternionLike = Union[UnitQuaternion, Sequence[float], np.ndarray]

UNIT_NORM_TOL = 1e-9
ORTHONORMAL_TOL = 1e-9
# Radicandos por debajo de esto se consideran 0 (rotaciones cercanas a 180°)
RADICAND_FLOOR = 1e-12
SIGN_ZERO_TOL = 1e-12


def as_quat_array(q: QuaternionLike) -> np.ndarray:
    if isinstance(q, UnitQuaternion):
        return q.as_array()
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise InvalidArgumentError(f"quaternion must have 4 components, got shape {arr.shape}")
    norm = np.linalg.norm(arr)
    if not np.isfinite(norm) or abs(norm - 1.0) > UNIT_NORM_TOL:
        raise InvalidArgumentError(f"quaternion is not unit-norm (|q| = {norm})")
    return arr


def quat_to_rotmat_batch(Q: np.ndarray) -> np.ndarray:
    """R = I + 2w[v]x + 2[v]x[v]x para cada fila de Q (n, 4) -> (n, 3, 3)"""
    Q = np.atleast_2d(Q)
    w, x, y, z = Q[:, 0], Q[:, 1], Q[:, 2], Q[:, 3]
    R = np.empty((Q.shape[0], 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def quat_to_rotmat(q: QuaternionLike) -> np.ndarray:
    """
    Matriz de rotación de un cuaternión unitario

    Raises:
        InvalidArgumentError: si q no es unitario dentro de tolerancia
    """
    return quat_to_rotmat_batch(as_quat_array(q)[None, :])[0]


def canonicalize_quat_batch(Q: np.ndarray) -> np.ndarray:
    """Fija el signo canónico de cada fila (w >= 0, desempate por primera componente no nula)"""
    Q = np.atleast_2d(Q)
    sign = np.where(Q[:, 0] < 0, -1.0, 1.0)
    tie = np.abs(Q[:, 0]) <= SIGN_ZERO_TOL
    if np.any(tie):
        vec = Q[tie, 1:]
        first = np.argmax(np.abs(vec) > SIGN_ZERO_TOL, axis=1)
        lead = vec[np.arange(vec.shape[0]), first]
        sign[tie] = np.where(lead < 0, -1.0, 1.0)
    return Q * sign[:, None]


def rotmat_to_quat_batch(R: np.ndarray) -> np.ndarray:
    """
    Extracción cuaternión <- matriz de rotación, vectorizada

    Las magnitudes salen de los cuatro radicandos clásicos
    (1 ± R11 ± R22 ± R33); la componente mayor hace de pivote y el resto
    se obtiene de las sumas/diferencias fuera de la diagonal, lo que
    mantiene los signos relativos también cerca de 180°.
    """
    R = np.asarray(R, dtype=float).reshape(-1, 3, 3)
    r11, r22, r33 = R[:, 0, 0], R[:, 1, 1], R[:, 2, 2]
    radicands = np.stack(
        [
            1 + r11 + r22 + r33,
            1 + r11 - r22 - r33,
            1 - r11 + r22 - r33,
            1 - r11 - r22 + r33,
        ],
        axis=1,
    )
    radicands = np.where(radicands < RADICAND_FLOOR, 0.0, radicands)
    mags = 0.5 * np.sqrt(radicands)
    pivot = np.argmax(mags, axis=1)

    # 4·qi·qj a partir de los términos fuera de la diagonal
    wx = R[:, 2, 1] - R[:, 1, 2]
    wy = R[:, 0, 2] - R[:, 2, 0]
    wz = R[:, 1, 0] - R[:, 0, 1]
    xy = R[:, 0, 1] + R[:, 1, 0]
    xz = R[:, 0, 2] + R[:, 2, 0]
    yz = R[:, 1, 2] + R[:, 2, 1]

    Q = np.empty((R.shape[0], 4))
    for k, others in enumerate(
        (
            (wx, wy, wz),  # pivote w -> x, y, z
            (wx, xy, xz),  # pivote x -> w, y, z
            (wy, xy, yz),  # pivote y -> w, x, z
            (wz, xz, yz),  # pivote z -> w, x, y
        )
    ):
        rows = pivot == k
        if not np.any(rows):
            continue
        m = mags[rows, k]
        slots = [i for i in range(4) if i != k]
        Q[rows, k] = m
        for slot, prod in zip(slots, others):
            Q[rows, slot] = prod[rows] / (4.0 * m)

    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    return canonicalize_quat_batch(Q)


def rotmat_to_quat(R: np.ndarray) -> UnitQuaternion:
    """
    Cuaternión canónico (w >= 0) de una matriz de rotación

    Raises:
        InvalidArgumentError: si R no es ortonormal con det 1
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidArgumentError(f"rotation matrix must be a finite 3x3 array, got shape {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHONORMAL_TOL or abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
        raise InvalidArgumentError("matrix is not a proper rotation (R^T R != I or det(R) != 1)")
    return UnitQuaternion.from_array(rotmat_to_quat_batch(R)[0])


def pairwise_geodesic_s3(Q1: np.ndarray, Q2: np.ndarray) -> np.ndarray:
    """
    Matriz (n, m) de distancias geodésicas 2·acos|<q1, q2>|

    Se evalúa en la forma de medio ángulo 4·atan2(|q1 - s·q2|, |q1 + s·q2|)
    con s = signo del producto interno: mismo valor, pero exacto en q = ±q
    y sin el clamp del arccos.
    """
    Q1 = np.atleast_2d(Q1)
    Q2 = np.atleast_2d(Q2)
    dots = np.einsum("ik,jk->ij", Q1, Q2)
    s = np.where(dots >= 0, 1.0, -1.0)[..., None]
    diff = np.linalg.norm(Q1[:, None, :] - s * Q2[None, :, :], axis=-1)
    summ = np.linalg.norm(Q1[:, None, :] + s * Q2[None, :, :], axis=-1)
    return 4.0 * np.arctan2(diff, summ)


def rowwise_geodesic_s3(Q1: np.ndarray, Q2: np.ndarray) -> np.ndarray:
    """Distancia geodésica fila a fila entre dos arrays (n, 4)"""
    Q1 = np.atleast_2d(Q1)
    Q2 = np.atleast_2d(Q2)
    s = np.where(np.einsum("ik,ik->i", Q1, Q2) >= 0, 1.0, -1.0)[:, None]
    diff = np.linalg.norm(Q1 - s * Q2, axis=1)
    summ = np.linalg.norm(Q1 + s * Q2, axis=1)
    return 4.0 * np.arctan2(diff, summ)


def geodesic_distance_s3(q1: QuaternionLike, q2: QuaternionLike) -> float:
    """Distancia geodésica en S³ con identificación antipodal, en [0, π]"""
    return float(pairwise_geodesic_s3(as_quat_array(q1), as_quat_array(q2))[0, 0])


def align_sign_batch(Q_ref: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Invierte las filas de Q con producto interno negativo respecto a Q_ref"""
    dots = np.einsum("ik,ik->i", np.atleast_2d(Q_ref), np.atleast_2d(Q))
    return np.atleast_2d(Q) * np.where(dots < 0, -1.0, 1.0)[:, None]


def align_sign(q_ref: QuaternionLike, q: QuaternionLike) -> UnitQuaternion:
    """
    Devuelve q o -q, el más cercano a q_ref

    Empate (<q_ref, q> == 0): se conserva el signo de entrada.
    """
    aligned = align_sign_batch(as_quat_array(q_ref)[None, :], as_quat_array(q)[None, :])
    return UnitQuaternion.from_array(aligned[0])


def se3_distance(x1: Pose, x2: Pose, metric: Se3Metric) -> float:
    """d_SE(3) = ‖[γ1‖p1 - p2‖, γ2·d_S3(q1, q2)]‖"""
    dp = float(np.linalg.norm(x1.position() - x2.position()))
    dq = geodesic_distance_s3(x1.q, x2.q)
    return float(np.hypot(metric.gamma1 * dp, metric.gamma2 * dq))


def pose_to_homogeneous(pose: Pose) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = quat_to_rotmat(pose.q)
    T[:3, 3] = pose.p
    return T


def homogeneous_to_pose(T: np.ndarray) -> Pose:
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise InvalidArgumentError(f"homogeneous transform must be 4x4, got shape {T.shape}")
    return Pose(q=rotmat_to_quat(T[:3, :3]), p=tuple(float(v) for v in T[:3, 3]))


def pack_poses(poses: Iterable[Pose]) -> Tuple[np.ndarray, np.ndarray]:
    """Lista de Pose -> (Q (n, 4), P (n, 3)) para los kernels vectorizados"""
    poses = list(poses)
    Q = np.array([x.q.as_array() for x in poses]).reshape(-1, 4)
    P = np.array([x.p for x in poses], dtype=float).reshape(-1, 3)
    return Q, P


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Producto de Hamilton q1 ⊗ q2 (ambos (w, x, y, z))"""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def axis_angle_quat(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def random_unit_quaternions(rng: np.random.Generator, count: int) -> np.ndarray:
    """Cuaterniones uniformes en S³ (gaussiana 4D normalizada)"""
    Q = rng.standard_normal((count, 4))
    return Q / np.linalg.norm(Q, axis=1, keepdims=True)
