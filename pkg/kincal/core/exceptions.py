# kincal/core/exceptions.py
"""
Jerarquía de errores de kincal

Todos heredan de KincalError para que la CLI y la API los traduzcan
a un código de salida / respuesta JSON uniforme.
"""
from typing import Any, Optional, Sequence


class KincalError(Exception):
    """Error base con mensaje y detalles opcionales"""

    code = "KINCAL_ERROR"

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class InvalidArgumentError(KincalError, ValueError):
    code = "INVALID_ARGUMENT"


class TooFewMeasurementsError(KincalError):
    """Menos filas que columnas identificables (7n < parámetros activos)"""

    code = "TOO_FEW_MEASUREMENTS"

    def __init__(self, message: str, required: int):
        self.required = required
        super().__init__(message, {"required_measurements": required})


class NotIdentifiableError(KincalError):
    code = "NOT_IDENTIFIABLE"

    def __init__(self, message: str, deficient_columns: Sequence[str]):
        self.deficient_columns = list(deficient_columns)
        super().__init__(message, {"deficient_columns": self.deficient_columns})


class IllConditionedModelError(KincalError):
    code = "ILL_CONDITIONED_MODEL"


class NonConvergenceError(KincalError):
    code = "NON_CONVERGENCE"

    def __init__(self, message: str, history: Sequence[Any]):
        self.history = list(history)
        super().__init__(message, {"iterations": len(self.history)})


class RigError(KincalError):
    """Fallo del banco de medida; iteration se rellena desde el bucle de diseño"""

    code = "RIG_ERROR"

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        super().__init__(message, {"iteration": iteration} if iteration is not None else None)


class ConfigValidationError(KincalError):
    code = "CONFIG_VALIDATION"

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message, {"field": field} if field else None)
