# kincal/services/results_writer.py
"""
Persistencia de resultados

- history_<modo>.csv:      una fila por iteración; la primera línea es un comentario
                           con la marca de tiempo (excluida de la comprobación de determinismo)
- summary_<modo>.json:     ExperimentSummary
- measurements_<modo>.csv: θ + pose medida, reutilizable por `kincal calibrate`
"""
import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Iterable, List, Sequence

from pydantic import BaseModel

from kincal.core.exceptions import InvalidArgumentError
from kincal.schemas.calibration import Measurement
from kincal.schemas.design import DesignRecord
from kincal.schemas.geometry import Pose

logger = logging.getLogger(__name__)

TIMESTAMP_PREFIX = "# generated_at="
POSE_COLUMNS = ["qw", "qx", "qy", "qz", "px", "py", "pz"]


def theta_columns(n_joints: int) -> List[str]:
    return [f"theta_{i + 1}" for i in range(n_joints)]


def history_columns(n_joints: int) -> List[str]:
    return (
        ["iter", "mode", "f", "f_p_m", "f_q_rad"]
        + POSE_COLUMNS
        + theta_columns(n_joints)
        + ["ucb_value", "gp_mean", "gp_var"]
    )


def measurement_columns(n_joints: int) -> List[str]:
    return theta_columns(n_joints) + POSE_COLUMNS


def _pose_values(pose: Pose) -> List[float]:
    return [pose.q.w, pose.q.x, pose.q.y, pose.q.z, *pose.p]


def write_history_csv(path: Path, records: Sequence[DesignRecord], n_joints: int, generated_at: datetime) -> Path:
    """Historial por iteración; la pose registrada es la medida"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"{TIMESTAMP_PREFIX}{generated_at.isoformat()}\n")
        writer = csv.writer(f)
        writer.writerow(history_columns(n_joints))
        for r in records:
            writer.writerow(
                [r.iteration, r.mode.value, r.f, r.f_p, r.f_q]
                + _pose_values(r.measured)
                + list(r.theta)
                + [r.ucb_value, r.gp_mean, r.gp_var]
            )
    logger.info(f"Wrote {len(records)} rows to {path}")
    return path


def write_measurements_csv(path: Path, measurements: Iterable[Measurement], n_joints: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(measurement_columns(n_joints))
        for m in measurements:
            writer.writerow(list(m.theta) + _pose_values(m.pose))
    return path


def read_measurements_csv(path: Path, n_joints: int) -> List[Measurement]:
    """
    Lee un CSV de medidas (theta_1..theta_n, qw..qz, px..pz)

    Raises:
        InvalidArgumentError: fichero inexistente, columnas que faltan o filas no numéricas
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidArgumentError(f"measurement file not found: {path}")

    columns = measurement_columns(n_joints)
    measurements = []
    with open(path, newline="") as f:
        # números de línea físicos de las filas que no son comentario
        numbered = [(i, line) for i, line in enumerate(f, start=1) if not line.startswith("#")]
        reader = csv.DictReader(line for _, line in numbered)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise InvalidArgumentError(f"{path.name}: missing columns {missing}")
        for row in reader:
            line_no = numbered[reader.line_num - 1][0]
            try:
                values = [float(row[c]) for c in columns]
                pose = Pose.from_arrays(values[n_joints : n_joints + 4], values[n_joints + 4 :])
            except (TypeError, ValueError) as e:
                raise InvalidArgumentError(f"{path.name}, line {line_no}: {e}") from e
            measurements.append(Measurement(theta=values[:n_joints], pose=pose))

    if not measurements:
        raise InvalidArgumentError(f"{path.name}: no measurements")
    logger.info(f"Read {len(measurements)} measurements from {path}")
    return measurements


def write_json(path: Path, payload: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload.model_dump(mode="json"), f, indent=2)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path
