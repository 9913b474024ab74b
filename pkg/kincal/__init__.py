"""kincal: diseño experimental bayesiano para calibración cinemática de manipuladores seriales."""

__version__ = "1.0.0"
