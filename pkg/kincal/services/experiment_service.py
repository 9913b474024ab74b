# kincal/services/experiment_service.py
import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from kincal.core.config import get_settings
from kincal.core.exceptions import (
    ConfigValidationError,
    InvalidArgumentError,
    NotIdentifiableError,
    TooFewMeasurementsError,
)
from kincal.providers.rig.factory import get_measurement_rig
from kincal.schemas.calibration import CalibrationProblem, CalibrationResult, Measurement
from kincal.schemas.design import DesignMode
from kincal.schemas.experiment import ExperimentConfig
from kincal.schemas.kinematics import param_names
from kincal.schemas.results import (
    CalibrationStatus,
    CompareReport,
    ExperimentResults,
    ExperimentSummary,
    ModeResult,
    RunMode,
    SeedComparison,
)
from kincal.services.bayesopt import PROBE_STREAM, RIG_STREAM, DesignRunner
from kincal.services.calibration import calibrate
from kincal.services.kinematics import detect_dependent_columns
from kincal.services.results_writer import write_history_csv, write_json, write_measurements_csv

logger = logging.getLogger(__name__)


# ============================================================================
# CONFIG
# ============================================================================

def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Valida un dict contra ExperimentConfig

    Raises:
        ConfigValidationError: con la ruta del primer campo inválido (p.ej. 'weights.alpha')
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        cause = (first.get("ctx") or {}).get("error")
        field = getattr(cause, "field", None) or ".".join(str(p) for p in first["loc"]) or None
        message = str(cause) if cause is not None else first["msg"]
        if field and not message.startswith(f"{field}:"):
            message = f"{field}: {message}"
        raise ConfigValidationError(message, field=field) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Lee y valida el JSON de experimento"""
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError(f"config file not found: {path}")
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"{path.name} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigValidationError(f"{path.name} must contain a JSON object")
    config = parse_config(data)
    logger.info(f"Loaded config '{config.name}' from {path} ({config.n_joints} joints)")
    return config


def resolve_seed(config: ExperimentConfig, cli_seed: Optional[int] = None) -> int:
    """
    --seed > KINCAL_SEED > seed del config

    Raises:
        InvalidArgumentError: si la semilla elegida es negativa
    """
    seed = cli_seed if cli_seed is not None else get_settings().SEED
    if seed is None:
        return config.seed
    if seed < 0:
        raise InvalidArgumentError(f"seed must be non-negative, got {seed}")
    return seed


# ============================================================================
# EXPERIMENTOS
# ============================================================================

class ExperimentService:
    """
    Orquesta banco simulado + bucle de diseño + calibración final

    No escribe nada por sí mismo; write_results persiste un ExperimentResults.
    """

    def __init__(self, config: ExperimentConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = resolve_seed(config, seed)
        self.chain = config.build_chain()
        self.params = self.chain.nominal_params()

    def run(self, mode: Union[RunMode, str] = RunMode.BOTH) -> ExperimentResults:
        results = {m: self.run_mode(m) for m in RunMode(mode).design_modes()}
        return ExperimentResults(results=results)

    def run_mode(self, mode: DesignMode) -> ModeResult:
        started = time.perf_counter()
        # Mismo flujo de ruido del banco para BO y random
        rig = get_measurement_rig(self.config, seed=[self.seed, RIG_STREAM])
        runner = DesignRunner(rig, self.chain, self.params, self.config, mode=mode, seed=self.seed)
        records = runner.run()

        calibration = self._final_calibration(runner.measurements, runner.mask, runner.correction)
        if calibration is None:
            status = CalibrationStatus.SKIPPED
            delta = runner.correction
            rms = None
        else:
            status = CalibrationStatus.CONVERGED if calibration.converged else CalibrationStatus.MAX_ITERS
            delta = np.asarray(calibration.delta)
            rms = calibration.residual_rms

        injected = self.config.injected_delta()
        echo = self.config.model_dump(mode="json")
        echo["seed"] = self.seed
        summary = ExperimentSummary(
            config_echo=echo,
            mode=mode,
            seed=self.seed,
            final_objective=records[-1].f,
            objectives=[r.f for r in records],
            recovered_delta=delta.tolist(),
            injected_delta=injected.tolist(),
            per_param_abs_error=np.abs(delta - injected).tolist(),
            identifiable_mask=runner.mask.tolist(),
            param_names=param_names(self.chain.n_joints),
            iterations=len(records),
            calibration_status=status,
            calibration_residual_rms=rms,
            wall_time_s=time.perf_counter() - started,
            generated_at=datetime.now(timezone.utc),
        )
        return ModeResult(records=records, summary=summary, measurements=runner.measurements)

    def _final_calibration(
        self, measurements: List[Measurement], mask: np.ndarray, initial: np.ndarray
    ) -> Optional[CalibrationResult]:
        """Calibración con todas las medidas; None si todavía no son suficientes"""
        lower, upper = self.config.bound_vectors()
        problem = CalibrationProblem(
            chain=self.chain,
            params=self.params.tolist(),
            measurements=measurements,
            lower=lower.tolist(),
            upper=upper.tolist(),
            mask=mask.tolist(),
        )
        try:
            return calibrate(
                problem,
                max_iters=self.config.calibration.max_iters,
                tol=self.config.calibration.tol,
                initial=initial,
            )
        except (TooFewMeasurementsError, NotIdentifiableError) as e:
            logger.warning(f"Final calibration skipped: {e.message}")
            return None

    def calibrate_measurements(self, measurements: Sequence[Measurement]) -> CalibrationResult:
        """Calibración offline desde medidas grabadas (no captura errores de identificabilidad)"""
        mask = detect_dependent_columns(
            self.chain,
            self.params,
            self.config.calibration.probe_configurations,
            seed=[self.seed, PROBE_STREAM],
            known=self.config.known_mask(),
        )
        lower, upper = self.config.bound_vectors()
        problem = CalibrationProblem(
            chain=self.chain,
            params=self.params.tolist(),
            measurements=list(measurements),
            lower=lower.tolist(),
            upper=upper.tolist(),
            mask=mask.tolist(),
        )
        return calibrate(problem, max_iters=self.config.calibration.max_iters, tol=self.config.calibration.tol)


def write_results(results: ExperimentResults, out_dir: Union[str, Path], n_joints: int) -> List[Path]:
    """history_<modo>.csv + summary_<modo>.json + measurements_<modo>.csv por modo"""
    out_dir = Path(out_dir)
    files = []
    for mode, result in results.results.items():
        generated_at = result.summary.generated_at
        files.append(write_history_csv(out_dir / f"history_{mode.value}.csv", result.records, n_joints, generated_at))
        files.append(write_json(out_dir / f"summary_{mode.value}.json", result.summary))
        files.append(write_measurements_csv(out_dir / f"measurements_{mode.value}.csv", result.measurements, n_joints))
    return files


def run_experiment(
    config: ExperimentConfig,
    mode: Union[RunMode, str] = RunMode.BOTH,
    out_dir: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
) -> ExperimentResults:
    """Ejecuta los modos pedidos y, si hay out_dir, escribe CSV/JSON"""
    results = ExperimentService(config, seed=seed).run(mode)
    if out_dir is not None:
        files = write_results(results, out_dir, config.n_joints)
        results = results.model_copy(update={"files": [str(p) for p in files]})
    return results


def compare(
    config: ExperimentConfig,
    seeds: Union[int, Sequence[int]] = 10,
    out_dir: Optional[Union[str, Path]] = None,
) -> CompareReport:
    """
    BO vs random sobre semillas emparejadas

    Args:
        seeds: número de semillas (config.seed, config.seed + 1, ...) o lista explícita
    """
    if isinstance(seeds, int):
        base = resolve_seed(config)
        seeds = [base + i for i in range(seeds)]

    rows = []
    for seed in seeds:
        results = ExperimentService(config, seed=seed).run(RunMode.BOTH).results
        rows.append(
            SeedComparison(
                seed=seed,
                bo_final_objective=results[DesignMode.BO].summary.final_objective,
                random_final_objective=results[DesignMode.RANDOM].summary.final_objective,
            )
        )
        logger.info(f"Seed {seed}: bo={rows[-1].bo_final_objective:.6f}, random={rows[-1].random_final_objective:.6f}")

    bo_median = float(np.median([abs(r.bo_final_objective) for r in rows]))
    random_median = float(np.median([abs(r.random_final_objective) for r in rows]))
    report = CompareReport(
        seeds=rows,
        bo_median_abs_final=bo_median,
        random_median_abs_final=random_median,
        bo_not_worse=bo_median <= random_median,
    )
    if out_dir is not None:
        write_json(Path(out_dir) / "compare.json", report)
    return report
