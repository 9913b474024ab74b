# kincal/providers/rig/factory.py
from typing import Optional, Sequence, Union

from kincal.core.config import settings
from kincal.core.exceptions import ConfigValidationError
from kincal.providers.rig.base import MeasurementRig
from kincal.providers.rig.sim_rig import SimRig
from kincal.schemas.experiment import ExperimentConfig


def get_measurement_rig(
    config: ExperimentConfig,
    seed: Union[int, Sequence[int], None] = None,
    backend: Optional[str] = None,
) -> MeasurementRig:
    """
    Factory del banco de medida configurado
    Cambia backend editando .env (KINCAL_RIG_BACKEND); hoy sólo existe 'sim'
    """
    backend = backend or settings.RIG_BACKEND

    if backend == "sim":
        return SimRig(
            chain=config.build_chain(),
            injected=config.injected_delta(),
            noise=config.noise,
            seed=seed,
        )

    raise ConfigValidationError(f"Unknown rig backend: {backend}. Use 'sim'", field="RIG_BACKEND")
