# kincal/services/kernels.py
"""
Kernels sobre poses

- k_se:          cuadrático-exponencial euclídeo (posiciones)
- k_naive_se3:   SE con la distancia d_SE(3); NO es definido positivo, sólo
                 se conserva como contraejemplo (marcado con @known_invalid)
- k_s3:          serie de calor truncada en S³ con polinomios de Gegenbauer C_n^(1)
- k_product:     σ_s² · k_S3 · k_SE, el kernel que usa el GP

Las variantes *_matrix trabajan sobre arrays (n, 4) / (n, 3) y son las que
usa el GP; las escalares delegan en ellas para que ambos caminos coincidan.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, Sequence, Tuple, TypeVar

import numpy as np

from kincal.core.exceptions import InvalidArgumentError
from kincal.schemas.geometry import Pose, Se3Metric
from kincal.schemas.kernels import ProductKernelParams, S3KernelParams, SeKernelParams
from kincal.services.geometry import QuaternionLike, as_quat_array, pairwise_geodesic_s3, se3_distance

logger = logging.getLogger(__name__)

GEGENBAUER_DOMAIN_TOL = 1e-12
# Por debajo de esto sin(θ) se considera 0 y se usa la recurrencia
SIN_RECURRENCE_THRESHOLD = 1e-6

KNOWN_INVALID_ATTR = "known_invalid"

F = TypeVar("F", bound=Callable)


def known_invalid(fn: F) -> F:
    """Marca un kernel que no es definido positivo (sólo para fixtures)"""
    setattr(fn, KNOWN_INVALID_ATTR, True)
    return fn


def is_known_invalid(kernel: Callable) -> bool:
    return bool(getattr(kernel, KNOWN_INVALID_ATTR, False))


# ============================================================================
# EUCLÍDEO
# ============================================================================

def se_kernel_matrix(P1: np.ndarray, P2: np.ndarray, params: SeKernelParams) -> np.ndarray:
    """K[i, j] = σ_f² exp(-‖p_i - p_j‖² / 2β²) + σ_n² [p_i ≡ p_j]"""
    P1 = np.atleast_2d(np.asarray(P1, dtype=float))
    P2 = np.atleast_2d(np.asarray(P2, dtype=float))
    if P1.shape[1] != P2.shape[1]:
        raise InvalidArgumentError(f"dimension mismatch: {P1.shape[1]} vs {P2.shape[1]}")
    diff = P1[:, None, :] - P2[None, :, :]
    sq = np.sum(diff * diff, axis=-1)
    K = params.sigma_f**2 * np.exp(-sq / (2.0 * params.beta**2))
    if params.sigma_n > 0:
        same = np.all(diff == 0.0, axis=-1)
        K = K + params.sigma_n**2 * same
    return K


def k_se(p1: Sequence[float], p2: Sequence[float], params: SeKernelParams) -> float:
    p1 = np.asarray(p1, dtype=float).ravel()
    p2 = np.asarray(p2, dtype=float).ravel()
    if p1.shape != p2.shape:
        raise InvalidArgumentError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    return float(se_kernel_matrix(p1[None, :], p2[None, :], params)[0, 0])


@known_invalid
def k_naive_se3(x1: Pose, x2: Pose, beta: float, metric: Se3Metric) -> float:
    """exp(-d²_SE(3) / 2β²) con σ_f = 1. No es un kernel válido."""
    if beta <= 0:
        raise InvalidArgumentError(f"beta must be positive, got {beta}")
    d = se3_distance(x1, x2, metric)
    return float(np.exp(-(d * d) / (2.0 * beta**2)))


# ============================================================================
# S³
# ============================================================================

def _chebyshev_u_recurrence(n: int, t: float) -> float:
    u_prev, u = 1.0, 2.0 * t
    if n == 0:
        return u_prev
    for _ in range(n - 1):
        u_prev, u = u, 2.0 * t * u - u_prev
    return u


def gegenbauer_c1(n: int, t: float) -> float:
    """
    C_n^(1)(cos θ) = sin((n+1)θ) / sin θ

    Forma cerrada salvo cerca de θ = 0 o π (|sin θ| < 1e-6), donde se usa la
    recurrencia C_{k+1} = 2t·C_k - C_{k-1}, que da los límites n+1 y (n+1)(-1)^n.

    Raises:
        InvalidArgumentError: n < 0 o |t| > 1 fuera de tolerancia
    """
    if n < 0:
        raise InvalidArgumentError(f"Gegenbauer order must be >= 0, got {n}")
    if not math.isfinite(t) or abs(t) > 1.0 + GEGENBAUER_DOMAIN_TOL:
        raise InvalidArgumentError(f"Gegenbauer argument must lie in [-1, 1], got {t}")
    t = min(1.0, max(-1.0, t))
    theta = math.acos(t)
    s = math.sin(theta)
    if abs(s) < SIN_RECURRENCE_THRESHOLD:
        return _chebyshev_u_recurrence(n, t)
    return math.sin((n + 1) * theta) / s


def _series_sum(weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Σ w_n C_n^(1)(t) por recurrencia, elemento a elemento"""
    u_prev = np.ones_like(t)
    acc = weights[0] * u_prev
    if weights.size == 1:
        return acc
    u = 2.0 * t
    acc = acc + weights[1] * u
    for w in weights[2:]:
        u_prev, u = u, 2.0 * t * u - u_prev
        acc = acc + w * u
    return acc


@lru_cache(maxsize=64)
def series_weights(kappa: float, truncation: int) -> Tuple[np.ndarray, float]:
    """
    Pesos a_n = c_{n,3}·exp(-κ² n(n+2)/2) con c_{n,3} = n+1, y la constante C_∞

    C_∞ es la suma truncada en d = 0, evaluada por el mismo camino que la
    serie, de modo que k_S3(q, q) = σ² exactamente.
    """
    n = np.arange(truncation + 1, dtype=float)
    weights = (n + 1.0) * np.exp(-(kappa**2) * n * (n + 2.0) / 2.0)
    weights.setflags(write=False)
    c_inf = float(_series_sum(weights, np.ones(1))[0])
    return weights, c_inf


def s3_kernel_from_distance(d: np.ndarray, params: S3KernelParams) -> np.ndarray:
    """k_S3 como función de la distancia geodésica (array de cualquier forma)"""
    weights, c_inf = series_weights(params.kappa, params.truncation)
    t = np.cos(np.asarray(d, dtype=float))
    return params.sigma**2 * (_series_sum(weights, t) / c_inf)


def s3_kernel_matrix(Q1: np.ndarray, Q2: np.ndarray, params: S3KernelParams) -> np.ndarray:
    return s3_kernel_from_distance(pairwise_geodesic_s3(Q1, Q2), params)


def k_s3(q1: QuaternionLike, q2: QuaternionLike, params: S3KernelParams) -> float:
    Q1 = as_quat_array(q1)[None, :]
    Q2 = as_quat_array(q2)[None, :]
    return float(s3_kernel_matrix(Q1, Q2, params)[0, 0])


# ============================================================================
# PRODUCTO S³ × R³
# ============================================================================

def _noiseless(se: SeKernelParams) -> SeKernelParams:
    if se.sigma_n == 0:
        return se
    return se.model_copy(update={"sigma_n": 0.0})


def product_kernel_matrix(
    Q1: np.ndarray,
    P1: np.ndarray,
    Q2: np.ndarray,
    P2: np.ndarray,
    params: ProductKernelParams,
) -> np.ndarray:
    """σ_s² · K_S3 ∘ K_SE; el ruido de observación lo añade el GP, no el kernel"""
    K_q = s3_kernel_matrix(Q1, Q2, params.s3)
    K_p = se_kernel_matrix(P1, P2, _noiseless(params.se))
    return params.sigma_s**2 * K_q * K_p


def k_product(x1: Pose, x2: Pose, params: ProductKernelParams) -> float:
    return float(
        product_kernel_matrix(
            x1.q.as_array()[None, :],
            x1.position()[None, :],
            x2.q.as_array()[None, :],
            x2.position()[None, :],
            params,
        )[0, 0]
    )


# ============================================================================
# GRAM
# ============================================================================

def gram(points: Sequence, kernel: Callable) -> np.ndarray:
    """
    K[i, j] = kernel(x_i, x_j)

    Se evalúa el triángulo superior y se refleja, así K es simétrica bit a bit.
    """
    points = list(points)
    n = len(points)
    if n == 0:
        raise InvalidArgumentError("gram requires at least one point")
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = kernel(points[i], points[j])
    return K


def min_eigenvalue(K: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(K).min())
