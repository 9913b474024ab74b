# kincal/services/gaussian_process.py
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from kincal.core.exceptions import IllConditionedModelError, InvalidArgumentError
from kincal.schemas.geometry import Pose
from kincal.schemas.kernels import ProductKernelParams
from kincal.services.geometry import pack_poses
from kincal.services.kernels import k_product, product_kernel_matrix

logger = logging.getLogger(__name__)

JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
# Varianzas negativas hasta este valor son ruido de redondeo
BENIGN_CLAMP = 1e-8


class GpModel:
    """
    Regresión GP exacta sobre poses con el kernel producto S³ × R³

    Inmutable: add_observation devuelve un modelo nuevo con la factorización
    de K̃ = K + σ_ε² I recalculada desde cero. Las consultas concurrentes
    sobre un mismo modelo son seguras.
    """

    def __init__(
        self,
        kernel: ProductKernelParams,
        noise: float = 0.0,
        prior_mean: float = 0.0,
        poses: Sequence[Pose] = (),
        values: Sequence[float] = (),
    ):
        if noise < 0 or not math.isfinite(noise):
            raise InvalidArgumentError(f"observation noise must be >= 0, got {noise}")
        if not math.isfinite(prior_mean):
            raise InvalidArgumentError("prior mean must be finite")
        poses = tuple(poses)
        values = np.asarray(values, dtype=float).ravel()
        if len(poses) != values.size:
            raise InvalidArgumentError(f"{len(poses)} poses but {values.size} observed values")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("observed values must be finite")

        self._kernel = kernel
        self._noise = float(noise)
        self._prior_mean = float(prior_mean)
        self._poses = poses
        self._values = values
        self._values.setflags(write=False)
        self._Q, self._P = pack_poses(poses)
        self._prior_var = k_product(Pose(), Pose(), kernel)

        self.jitter = 0.0
        self._chol: Optional[Tuple[np.ndarray, bool]] = None
        self._weights: Optional[np.ndarray] = None
        if poses:
            self._chol = self._factorize()
            self._weights = cho_solve(self._chol, values - self._prior_mean)

    # ------------------------------------------------------------------
    # Propiedades
    # ------------------------------------------------------------------

    @property
    def kernel(self) -> ProductKernelParams:
        return self._kernel

    @property
    def noise(self) -> float:
        return self._noise

    @property
    def prior_mean(self) -> float:
        return self._prior_mean

    @property
    def size(self) -> int:
        return len(self._poses)

    @property
    def observations(self) -> List[Tuple[Pose, float]]:
        return [(x, float(y)) for x, y in zip(self._poses, self._values)]

    # ------------------------------------------------------------------
    # Factorización
    # ------------------------------------------------------------------

    def _factorize(self) -> Tuple[np.ndarray, bool]:
        """
        Cholesky de K̃ con jitter escalonado 1e-10, 1e-9, ..., 1e-6

        Raises:
            IllConditionedModelError: si ni con el máximo jitter es definida positiva
        """
        n = self.size
        K = product_kernel_matrix(self._Q, self._P, self._Q, self._P, self._kernel)
        K[np.diag_indices(n)] += self._noise**2

        try:
            return cho_factor(K, lower=True)
        except np.linalg.LinAlgError:
            pass

        for jitter in JITTER_LADDER:
            logger.warning(f"Covariance not positive definite with n={n}; retrying with jitter {jitter:g}")
            try:
                factor = cho_factor(K + jitter * np.eye(n), lower=True)
            except np.linalg.LinAlgError:
                continue
            self.jitter = jitter
            return factor

        raise IllConditionedModelError(
            f"Covariance of {n} observations is not positive definite even with jitter {JITTER_LADDER[-1]:g}",
            {"observations": n},
        )

    # ------------------------------------------------------------------
    # Operaciones
    # ------------------------------------------------------------------

    def add_observation(self, x: Pose, y: float) -> "GpModel":
        """
        Nuevo modelo con (x, y) añadido

        Raises:
            InvalidArgumentError: y no finito
        """
        if not math.isfinite(y):
            raise InvalidArgumentError(f"observed value must be finite, got {y}")
        return GpModel(
            self._kernel,
            noise=self._noise,
            prior_mean=self._prior_mean,
            poses=self._poses + (x,),
            values=np.append(self._values, float(y)),
        )

    def posterior_arrays(self, Q: np.ndarray, P: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Media y varianza posteriores en m puntos (Q (m, 4), P (m, 3))

        μ* = μ + K(x*, X) K̃⁻¹ (Y - μ)
        σ*² = k(x*, x*) - K(x*, X) K̃⁻¹ K(X, x*), acotada por debajo en 0
        """
        Q = np.atleast_2d(Q)
        P = np.atleast_2d(P)
        m = Q.shape[0]
        prior_var = np.full(m, self._prior_var)
        if self._chol is None:
            return np.full(m, self._prior_mean), prior_var

        Ks = product_kernel_matrix(Q, P, self._Q, self._P, self._kernel)
        mean = self._prior_mean + Ks @ self._weights
        L, lower = self._chol
        V = solve_triangular(L, Ks.T, lower=lower)
        var = prior_var - np.sum(V * V, axis=0)

        lowest = float(var.min())
        if lowest < 0:
            if lowest < -BENIGN_CLAMP:
                logger.warning(f"Posterior variance clamped from {lowest:.3e} to 0")
            else:
                logger.debug(f"Posterior variance clamped from {lowest:.3e} to 0")
            var = np.maximum(var, 0.0)
        return mean, var

    def posterior(self, x: Pose) -> Tuple[float, float]:
        mean, var = self.posterior_arrays(x.q.as_array()[None, :], x.position()[None, :])
        return float(mean[0]), float(var[0])
