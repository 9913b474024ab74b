# kincal/services/bayesopt.py
"""
Diseño de experimentos de calibración con GP-UCB

Bucle por iteración k:
    1. candidatos alcanzables (θ uniforme en límites -> FK nominal)
    2. x* = argmax μ_{k-1}(x) + √β_k σ_{k-1}(x)   (o uniforme en modo random)
    3. el banco mide (θ, pose)
    4. x̃ = FK con el Ψ de trabajo en las θ medidas
    5. f = -(α1 f_p/sup_p + α2 f_q/sup_q)
    6. GP <- (x*, f); opcionalmente recalibración intercalada
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from kincal.core.exceptions import InvalidArgumentError, KincalError, RigError
from kincal.providers.rig.base import MeasurementRig
from kincal.schemas.calibration import CalibrationProblem, Measurement
from kincal.schemas.design import DesignMode, DesignRecord, ObjectiveValue, ObjectiveWeights, UcbMode, UcbSchedule
from kincal.schemas.experiment import ExperimentConfig
from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import DhChain
from kincal.services.calibration import calibrate
from kincal.services.gaussian_process import GpModel
from kincal.services.geometry import geodesic_distance_s3
from kincal.services.kinematics import (
    detect_dependent_columns,
    forward_kinematics,
    forward_kinematics_arrays,
    identifiability_check,
    sample_joint_vectors,
    stacked_jacobian,
)

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int], None]

# Sub-flujos de la semilla del experimento
SELECTION_STREAM = 1
CANDIDATE_STREAM = 2
RIG_STREAM = 3
PROBE_STREAM = 4


# ============================================================================
# OBJETIVO Y ADQUISICIÓN
# ============================================================================

def objective_terms(measured: Pose, computed: Pose) -> Tuple[float, float]:
    """(f_p, f_q) = (‖p - p̃‖, d_S3(q, q̃))"""
    f_p = float(np.linalg.norm(measured.position() - computed.position()))
    f_q = geodesic_distance_s3(measured.q, computed.q)
    return f_p, f_q


def evaluate_objective(measured: Pose, computed: Pose, weights: ObjectiveWeights) -> ObjectiveValue:
    """
    f = -(α1·min(f_p/sup_p, 1) + α2·min(f_q/sup_q, 1)) ∈ [-1, 0]

    Un término normalizado mayor que 1 se recorta y se marca como clipped.
    """
    f_p, f_q = objective_terms(measured, computed)
    norm_p = f_p / weights.sup_p
    norm_q = f_q / weights.sup_q
    clipped = norm_p > 1.0 or norm_q > 1.0
    if clipped:
        logger.warning(f"Objective term clipped (f_p/sup_p={norm_p:.3f}, f_q/sup_q={norm_q:.3f})")
    f = 0.0 - (weights.alpha1 * min(norm_p, 1.0) + weights.alpha2 * min(norm_q, 1.0))
    return ObjectiveValue(f=max(f, -1.0), f_p=f_p, f_q=f_q, clipped=clipped)


def objective(measured: Pose, computed: Pose, weights: ObjectiveWeights) -> float:
    return evaluate_objective(measured, computed, weights).f


def beta_k(k: int, schedule: UcbSchedule) -> float:
    """β_k fijo o 2·log(|D|·k²·π²/(6δ))"""
    if schedule.mode == UcbMode.FIXED:
        return schedule.beta
    if k < 1:
        raise InvalidArgumentError(f"iteration index must be >= 1, got {k}")
    return 2.0 * math.log(schedule.candidate_count * k**2 * math.pi**2 / (6.0 * schedule.delta))


def ucb(mean: float, variance: float, k: int, schedule: UcbSchedule) -> float:
    if variance < 0:
        raise InvalidArgumentError(f"variance must be >= 0, got {variance}")
    return mean + math.sqrt(beta_k(k, schedule)) * math.sqrt(variance)


# ============================================================================
# CANDIDATOS
# ============================================================================

@dataclass(frozen=True)
class CandidateSet:
    """
    Conjunto finito de poses alcanzables con la θ que las genera

    Se comporta como una secuencia de (Pose, θ); los arrays Q/P alimentan
    directamente al GP.
    """

    thetas: np.ndarray
    Q: np.ndarray
    P: np.ndarray

    def __len__(self) -> int:
        return self.thetas.shape[0]

    def __getitem__(self, index: int) -> Tuple[Pose, np.ndarray]:
        if not -len(self) <= index < len(self):
            raise IndexError(index)
        return self.pose(index), self.thetas[index].copy()

    def pose(self, index: int) -> Pose:
        return Pose.from_arrays(self.Q[index], self.P[index])

    def permuted(self, order: Sequence[int]) -> "CandidateSet":
        order = np.asarray(order)
        return CandidateSet(thetas=self.thetas[order], Q=self.Q[order], P=self.P[order])


def generate_candidates(chain: DhChain, params, count: int, seed: Seed = None) -> CandidateSet:
    """θ uniformes en límites (semilla fija) mapeadas por la FK con params"""
    if count < 1:
        raise InvalidArgumentError(f"candidate count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    thetas = sample_joint_vectors(chain, count, rng)
    Q, P = forward_kinematics_arrays(chain, params, thetas)
    return CandidateSet(thetas=thetas, Q=Q, P=P)


def ucb_scores(
    model: GpModel, candidates: CandidateSet, k: int, schedule: UcbSchedule
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(V_k, μ, σ²) en todos los candidatos"""
    means, variances = model.posterior_arrays(candidates.Q, candidates.P)
    scores = means + math.sqrt(beta_k(k, schedule)) * np.sqrt(variances)
    return scores, means, variances


def select_next(model: GpModel, candidates: CandidateSet, k: int, schedule: UcbSchedule) -> int:
    """Índice del máximo UCB; en empate gana el menor índice"""
    if len(candidates) == 0:
        raise InvalidArgumentError("candidate set is empty")
    scores, _, _ = ucb_scores(model, candidates, k, schedule)
    return int(np.argmax(scores))


# ============================================================================
# BUCLE DE DISEÑO
# ============================================================================

class DesignRunner:
    """
    Ejecuta el bucle de diseño (BO o aleatorio) contra un banco de medida

    Tras run() quedan disponibles el GP final, el Ψ de trabajo, la máscara de
    identificabilidad y las medidas acumuladas.
    """

    def __init__(
        self,
        rig: MeasurementRig,
        chain: DhChain,
        params,
        config: ExperimentConfig,
        mode: DesignMode = DesignMode.BO,
        seed: Optional[int] = None,
    ):
        self.rig = rig
        self.chain = chain
        self.params = np.asarray(params, dtype=float)
        self.config = config
        self.mode = DesignMode(mode)
        self.seed = config.seed if seed is None else seed

        self.weights = config.objective_weights()
        self.schedule = config.ucb_schedule()
        self.lower, self.upper = config.bound_vectors()
        self.model = GpModel(config.kernel.params(), noise=config.gp.noise, prior_mean=config.gp.prior_mean)
        self.correction = np.zeros_like(self.params)
        self.measurements: List[Measurement] = []
        self.records: List[DesignRecord] = []
        self._selection_rng = np.random.default_rng([self.seed, SELECTION_STREAM])

        self.mask = detect_dependent_columns(
            chain,
            self.params,
            config.calibration.probe_configurations,
            seed=[self.seed, PROBE_STREAM],
            known=config.known_mask(),
        )

    @property
    def working_params(self) -> np.ndarray:
        return self.params + self.correction

    def run(self, iterations: Optional[int] = None) -> List[DesignRecord]:
        iterations = self.config.iterations if iterations is None else iterations
        if iterations < 1:
            raise InvalidArgumentError(f"iterations must be >= 1, got {iterations}")

        logger.info(f"Starting {self.mode.value} design run: {iterations} iterations, seed {self.seed}")
        for k in range(1, iterations + 1):
            self.records.append(self._step(k))
        return self.records

    def _step(self, k: int) -> DesignRecord:
        # 1. Candidatos (mismo conjunto para BO y random con la misma semilla)
        candidates = generate_candidates(
            self.chain, self.params, self.config.candidate_count, seed=[self.seed, CANDIDATE_STREAM, k]
        )

        # 2. Selección
        scores, means, variances = ucb_scores(self.model, candidates, k, self.schedule)
        if self.mode == DesignMode.BO:
            index = int(np.argmax(scores))
        else:
            index = int(self._selection_rng.integers(len(candidates)))
        target, theta = candidates[index]

        # 3. Medida
        try:
            measurement = self.rig.command(target, theta)
        except RigError as e:
            raise RigError(f"rig failed at iteration {k}: {e.message}", iteration=k) from e

        # 4-5. Pose calculada y objetivo
        computed = forward_kinematics(self.chain, self.working_params, measurement.theta)
        value = evaluate_objective(measurement.pose, computed, self.weights)

        record = DesignRecord(
            iteration=k,
            mode=self.mode,
            target=target,
            measured=measurement.pose,
            computed=computed,
            theta=measurement.theta,
            f=value.f,
            f_p=value.f_p,
            f_q=value.f_q,
            ucb_value=float(scores[index]),
            gp_mean=float(means[index]),
            gp_var=float(variances[index]),
        )

        # 6. Actualización del GP y recalibración
        self.model = self.model.add_observation(target, value.f)
        self.measurements.append(measurement)
        if self.config.interleaved_calibration:
            record = record.model_copy(update={"calibrated": self._recalibrate(k)})

        logger.info(f"[{self.mode.value}] iter {k}: f={value.f:.6f} (f_p={value.f_p:.3e} m, f_q={value.f_q:.3e} rad)")
        return record

    def _recalibrate(self, k: int) -> bool:
        """Re-resuelve el QP con las medidas acumuladas; False si aún no es identificable"""
        thetas = np.array([m.theta for m in self.measurements])
        if 7 * len(thetas) < int(self.mask.sum()):
            return False
        report = identifiability_check(stacked_jacobian(self.chain, self.working_params, thetas), self.mask)
        if not report.ok:
            logger.debug(f"iter {k}: rank {report.rank}/{report.active_columns}, calibration deferred")
            return False

        problem = CalibrationProblem(
            chain=self.chain,
            params=self.params.tolist(),
            measurements=self.measurements,
            lower=self.lower.tolist(),
            upper=self.upper.tolist(),
            mask=self.mask.tolist(),
        )
        try:
            result = calibrate(
                problem,
                max_iters=self.config.calibration.max_iters,
                tol=self.config.calibration.tol,
                initial=self.correction,
            )
        except KincalError as e:
            logger.warning(f"iter {k}: interleaved calibration failed ({e.code}): {e.message}")
            return False

        self.correction = np.asarray(result.delta)
        return True


def run_design(
    rig: MeasurementRig,
    chain: DhChain,
    params,
    iterations: int,
    config: ExperimentConfig,
    seed: Optional[int] = None,
) -> List[DesignRecord]:
    """Algoritmo de diseño GP-UCB; devuelve el historial completo"""
    return DesignRunner(rig, chain, params, config, mode=DesignMode.BO, seed=seed).run(iterations)


def run_random_baseline(
    rig: MeasurementRig,
    chain: DhChain,
    params,
    iterations: int,
    seed: int,
    config: ExperimentConfig,
) -> List[DesignRecord]:
    """Mismo bucle con selección uniforme entre candidatos"""
    return DesignRunner(rig, chain, params, config, mode=DesignMode.RANDOM, seed=seed).run(iterations)
