# kincal/services/calibration.py
"""
Recuperación de errores DH

    Δ_n = [I_n] - [F_n]                    (residuo apilado, 7 filas por medida)
    δ* = argmin ‖Δ_n - J_n δ‖²  s.a.  lb <= δ <= ub
    Ψ <- Ψ + δ*, relinealizando hasta que ‖δ*‖ <= tol
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import lsq_linear

from kincal.core.exceptions import InvalidArgumentError, NonConvergenceError, NotIdentifiableError
from kincal.schemas.calibration import CalibrationProblem, CalibrationResult, CalibrationStep
from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import param_names
from kincal.services.geometry import align_sign_batch, pack_poses
from kincal.services.kinematics import (
    POSE_DIM,
    forward_kinematics_arrays,
    identifiability_check,
    independent_columns,
    stacked_jacobian,
)

logger = logging.getLogger(__name__)

SOLVER_TOL = 1e-10
MAX_BACKTRACKS = 5
MAX_CONSECUTIVE_INCREASES = 3
# Holgura relativa para decidir que el residuo ha crecido
RESIDUAL_SLACK = 1e-12


def residual_from_arrays(Qm: np.ndarray, Pm: np.ndarray, Qc: np.ndarray, Pc: np.ndarray) -> np.ndarray:
    """Bloques [Δq_w, Δq_x, Δq_y, Δq_z, Δp_x, Δp_y, Δp_z] con q medido alineado al calculado"""
    Qm = align_sign_batch(Qc, Qm)
    return np.concatenate([Qm - Qc, Pm - Pc], axis=1).ravel()


def build_residual(measured: Sequence[Pose], computed: Sequence[Pose]) -> np.ndarray:
    """
    Residuo Δ_n ∈ R^{7n} entre poses medidas y calculadas

    Raises:
        InvalidArgumentError: listas vacías o de distinta longitud
    """
    measured, computed = list(measured), list(computed)
    if not measured or len(measured) != len(computed):
        raise InvalidArgumentError(
            f"residual needs equal, nonzero lengths (got {len(measured)} measured, {len(computed)} computed)"
        )
    Qm, Pm = pack_poses(measured)
    Qc, Pc = pack_poses(computed)
    return residual_from_arrays(Qm, Pm, Qc, Pc)


def solve_box_ls(
    Jn: np.ndarray,
    residual: np.ndarray,
    lower: Sequence[float],
    upper: Sequence[float],
    mask: Optional[Sequence[bool]] = None,
    names: Optional[Sequence[str]] = None,
) -> np.ndarray:
    """
    δ* = argmin ‖Δ - J δ‖² con lower <= δ <= upper sobre las columnas activas

    Las columnas fuera de la máscara (y las de caja degenerada lower == upper)
    quedan a 0. El problema acotado se resuelve con BVLS (conjunto activo).

    Raises:
        InvalidArgumentError: dimensiones incoherentes o caja que no contiene el 0
        NotIdentifiableError: las columnas activas no tienen rango completo
    """
    J = np.asarray(Jn, dtype=float)
    r = np.asarray(residual, dtype=float).ravel()
    lb = np.asarray(lower, dtype=float)
    ub = np.asarray(upper, dtype=float)
    n_cols = J.shape[1]
    if r.size != J.shape[0]:
        raise InvalidArgumentError(f"residual has {r.size} rows, Jacobian has {J.shape[0]}")
    if lb.shape != (n_cols,) or ub.shape != (n_cols,):
        raise InvalidArgumentError(f"bounds must have length {n_cols}")
    if np.any(lb > 0) or np.any(ub < 0):
        raise InvalidArgumentError("bounds must satisfy lower <= 0 <= upper")
    mask = np.ones(n_cols, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)

    report = identifiability_check(J, mask)
    if not report.ok:
        deficient = np.flatnonzero(mask & ~independent_columns(J, mask))
        labels = list(names) if names is not None else [f"col_{i}" for i in range(n_cols)]
        raise NotIdentifiableError(
            f"masked Jacobian has rank {report.rank} < {report.active_columns}",
            deficient_columns=[labels[i] for i in deficient],
        )

    delta = np.zeros(n_cols)
    free = mask & (lb < ub)
    if not free.any():
        return delta

    result = lsq_linear(
        J[:, free],
        r,
        bounds=(lb[free], ub[free]),
        method="bvls",
        tol=SOLVER_TOL,
    )
    delta[free] = np.clip(result.x, lb[free], ub[free])
    logger.debug(f"BVLS: status={result.status}, active bounds={int(np.count_nonzero(result.active_mask))}")
    return delta


def _active_bounds(delta: np.ndarray, lb: np.ndarray, ub: np.ndarray, mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask & ((delta <= lb) | (delta >= ub)) & (lb < ub)))


def calibrate(
    problem: CalibrationProblem,
    max_iters: int = 20,
    tol: float = 1e-10,
    initial: Optional[Sequence[float]] = None,
) -> CalibrationResult:
    """
    Gauss-Newton acotado sobre la corrección acumulada δ

    En cada iteración la caja se desplaza por lo ya consumido, de modo que
    Ψ + δ nunca sale de la caja original. Si el residuo crece, el paso se
    divide a la mitad (hasta 5 veces).

    Args:
        problem: medidas, Ψ de trabajo, caja y máscara
        max_iters: número máximo de relinealizaciones
        tol: parada cuando ‖δ*‖ <= tol
        initial: corrección acumulada de partida (debe estar dentro de la caja)

    Returns:
        CalibrationResult con Ψ*, δ acumulado e historial por iteración

    Raises:
        TooFewMeasurementsError / NotIdentifiableError: propagados del test de rango
        NonConvergenceError: el residuo crece 3 iteraciones seguidas
    """
    if max_iters < 1:
        raise InvalidArgumentError(f"max_iters must be >= 1, got {max_iters}")

    chain = problem.chain
    psi = np.asarray(problem.params, dtype=float)
    thetas = problem.thetas()
    Qm, Pm = pack_poses(problem.measured_poses())
    lb = np.asarray(problem.lower, dtype=float)
    ub = np.asarray(problem.upper, dtype=float)
    mask = np.asarray(problem.mask, dtype=bool)
    names = param_names(chain.n_joints)

    cum = np.zeros_like(psi) if initial is None else np.asarray(initial, dtype=float)
    if cum.shape != psi.shape or np.any(cum < lb) or np.any(cum > ub):
        raise InvalidArgumentError("initial correction must lie inside the bounds")
    cum = np.where(mask, cum, 0.0)

    def residual_at(delta: np.ndarray) -> np.ndarray:
        Qc, Pc = forward_kinematics_arrays(chain, psi + delta, thetas)
        return residual_from_arrays(Qm, Pm, Qc, Pc)

    r = residual_at(cum)
    r_norm = float(np.linalg.norm(r))
    history: List[CalibrationStep] = []
    increases = 0
    converged = False
    logger.info(
        f"Calibrating {int(mask.sum())}/{psi.size} parameters from {thetas.shape[0]} measurements "
        f"(initial residual {r_norm:.3e})"
    )

    for iteration in range(1, max_iters + 1):
        J = stacked_jacobian(chain, psi + cum, thetas)
        step_lb = np.minimum(lb - cum, 0.0)
        step_ub = np.maximum(ub - cum, 0.0)
        step = solve_box_ls(J, r, step_lb, step_ub, mask, names)
        step_norm = float(np.linalg.norm(step))

        if step_norm <= tol:
            history.append(CalibrationStep(iteration=iteration, residual_norm=r_norm, step_norm=step_norm))
            converged = True
            break

        scale = 1.0
        backtracks = 0
        trial = cum + step
        r_trial = residual_at(trial)
        trial_norm = float(np.linalg.norm(r_trial))
        while trial_norm > r_norm * (1.0 + RESIDUAL_SLACK) and backtracks < MAX_BACKTRACKS:
            scale *= 0.5
            backtracks += 1
            trial = cum + scale * step
            r_trial = residual_at(trial)
            trial_norm = float(np.linalg.norm(r_trial))

        increases = increases + 1 if trial_norm > r_norm * (1.0 + RESIDUAL_SLACK) else 0
        cum, r, r_norm = trial, r_trial, trial_norm
        history.append(
            CalibrationStep(
                iteration=iteration,
                residual_norm=r_norm,
                step_norm=scale * step_norm,
                backtracks=backtracks,
                active_bounds=_active_bounds(cum, lb, ub, mask),
            )
        )
        logger.debug(f"Calibration iter {iteration}: residual={r_norm:.3e}, step={scale * step_norm:.3e}")

        if increases >= MAX_CONSECUTIVE_INCREASES:
            raise NonConvergenceError(
                f"residual increased for {increases} consecutive iterations",
                history=history,
            )

    n_rows = POSE_DIM * thetas.shape[0]
    logger.info(
        f"Calibration {'converged' if converged else 'stopped'} after {len(history)} iterations "
        f"(residual {r_norm:.3e})"
    )
    return CalibrationResult(
        params=(psi + cum).tolist(),
        delta=cum.tolist(),
        mask=mask.tolist(),
        converged=converged,
        residual_norm=r_norm,
        residual_rms=r_norm / math.sqrt(n_rows),
        history=history,
    )
