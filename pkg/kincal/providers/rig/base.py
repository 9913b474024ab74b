# kincal/providers/rig/base.py
from abc import ABC, abstractmethod
from typing import Optional, Sequence

from kincal.schemas.calibration import Measurement
from kincal.schemas.geometry import Pose


class MeasurementRig(ABC):
    """Puerto abstracto del banco de medida: ordenar una pose y leer articulaciones + pose medida"""

    @abstractmethod
    def command(self, target: Pose, theta: Optional[Sequence[float]] = None) -> Measurement:
        """
        Lleva el efector final a target y mide

        Args:
            target: pose objetivo (salida de generate_candidates)
            theta: variables articulares que generaron target

        Returns:
            Measurement con las articulaciones leídas y la pose medida

        Raises:
            InvalidArgumentError: target sin articulaciones asociadas
            RigError: fallo del banco
        """
        pass

    @abstractmethod
    def get_name(self) -> str:
        """Nombre del backend"""
        pass
