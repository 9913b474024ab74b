# kincal/services/kernel_check_service.py
"""
Comprobación de validez de kernels

1. Contraejemplo: Gram del kernel SE sobre d_SE(3) en cuatro poses fijas
   (γ = (0.1, 0.9)); con β = 12 aparece un autovalor negativo.
2. Suite aleatoria: 100 conjuntos de 10 poses por κ para k_S3 y el
   kernel producto; el mínimo autovalor debe ser >= -1e-8.
"""
import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from kincal.schemas.experiment import ExperimentConfig
from kincal.schemas.geometry import Pose, Se3Metric
from kincal.schemas.kernels import S3KernelParams
from kincal.schemas.results import EigenvalueCheck, KernelCheckReport, PsdSuiteResult
from kincal.services.geometry import random_unit_quaternions
from kincal.services.kernels import gram, k_naive_se3, min_eigenvalue, product_kernel_matrix, s3_kernel_matrix

logger = logging.getLogger(__name__)

EXAMPLE_GAMMA = (0.1, 0.9)
EXAMPLE_EIGENVALUES: Dict[float, Tuple[float, ...]] = {
    12.0: (-0.0001, 0.0083, 0.0355, 3.9561),
    1.0: (0.4725, 0.6940, 1.1404, 1.6929),
}
EIGENVALUE_TOL = 1e-3
PSD_TOL = 1e-8
PSD_KAPPAS = (0.1, 0.5, 1.0, 2.0)
PSD_SETS = 100
PSD_SET_SIZE = 10
# Semilla propia de la suite: no depende de la semilla del experimento
SUITE_STREAM = 5


def example_poses() -> List[Pose]:
    """Posición en el origen y cuatro orientaciones distintas"""
    h = 1.0 / math.sqrt(2.0)
    quats = [(1.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0), (h, h, 0.0, 0.0), (h, 0.0, h, 0.0)]
    return [Pose.from_arrays(q, (0.0, 0.0, 0.0)) for q in quats]


def naive_gram_eigenvalues(beta: float, metric: Se3Metric) -> np.ndarray:
    K = gram(example_poses(), lambda x1, x2: k_naive_se3(x1, x2, beta, metric))
    return np.sort(np.linalg.eigvalsh(K))


def random_pose_arrays(rng: np.random.Generator, count: int, scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Cuaterniones uniformes en S³ y posiciones uniformes en [-scale, scale]³"""
    Q = random_unit_quaternions(rng, count)
    P = rng.uniform(-scale, scale, size=(count, 3))
    return Q, P


def _suite(name: str, kappa, gram_of: Callable[[np.ndarray, np.ndarray], np.ndarray], seed: int) -> PsdSuiteResult:
    rng = np.random.default_rng([seed, SUITE_STREAM])
    lowest = math.inf
    for _ in range(PSD_SETS):
        Q, P = random_pose_arrays(rng, PSD_SET_SIZE)
        lowest = min(lowest, min_eigenvalue(gram_of(Q, P)))
    return PsdSuiteResult(
        kernel=name,
        kappa=kappa,
        sets=PSD_SETS,
        set_size=PSD_SET_SIZE,
        min_eigenvalue=lowest,
        passed=lowest >= -PSD_TOL,
    )


def run_kernel_check(config: ExperimentConfig, seed: int = 0) -> KernelCheckReport:
    """
    Reproduce la tabla del contraejemplo y corre las suites de validez

    Los fallos son contenido del informe, no excepciones.
    """
    metric = Se3Metric(gamma1=EXAMPLE_GAMMA[0], gamma2=EXAMPLE_GAMMA[1])

    # 1. Contraejemplo
    example = []
    for beta, expected in EXAMPLE_EIGENVALUES.items():
        eig = naive_gram_eigenvalues(beta, metric)
        error = float(np.max(np.abs(eig - np.asarray(expected))))
        example.append(
            EigenvalueCheck(
                beta=beta,
                eigenvalues=eig.tolist(),
                expected=list(expected),
                max_abs_error=error,
                passed=error <= EIGENVALUE_TOL,
            )
        )
        logger.info(f"Naive SE(3) kernel, beta={beta:g}: eigenvalues {np.round(eig, 4).tolist()}")

    # 2. Suites aleatorias por κ
    base = config.kernel.params()
    suites = []
    for kappa in PSD_KAPPAS:
        s3 = S3KernelParams(kappa=kappa, sigma=base.s3.sigma, truncation=base.s3.truncation)
        product = base.model_copy(update={"s3": s3})
        suites.append(_suite("s3", kappa, lambda Q, P, s3=s3: s3_kernel_matrix(Q, Q, s3), seed))
        suites.append(
            _suite("product", kappa, lambda Q, P, product=product: product_kernel_matrix(Q, P, Q, P, product), seed)
        )

    # 3. La misma suite tiene que detectar el kernel ingenuo (incluye el contraejemplo)
    naive_beta = max(EXAMPLE_EIGENVALUES)
    rng = np.random.default_rng([seed, SUITE_STREAM])
    naive_min = float(naive_gram_eigenvalues(naive_beta, metric)[0])
    for _ in range(PSD_SETS):
        Q, P = random_pose_arrays(rng, PSD_SET_SIZE)
        poses = [Pose.from_arrays(q, p) for q, p in zip(Q, P)]
        K = gram(poses, lambda x1, x2: k_naive_se3(x1, x2, naive_beta, metric))
        naive_min = min(naive_min, min_eigenvalue(K))
    naive_detected = naive_min < -PSD_TOL

    passed = all(c.passed for c in example) and all(s.passed for s in suites) and naive_detected
    logger.info(f"Kernel check {'passed' if passed else 'FAILED'} (naive min eigenvalue {naive_min:.3e})")
    return KernelCheckReport(
        example=example,
        psd_suites=suites,
        naive_min_eigenvalue=naive_min,
        naive_failure_detected=naive_detected,
        passed=passed,
        seed=seed,
    )
