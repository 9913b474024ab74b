# kincal/core/config.py
from pathlib import Path
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

PACKAGE_DIR = Path(__file__).resolve().parent.parent
SHIPPED_CONFIG = PACKAGE_DIR / "configs" / "wam7_default.json"


class Settings(BaseSettings):
    """
    Configuración del proceso (no del experimento)

    El experimento en sí se describe con un JSON validado por ExperimentConfig;
    aquí sólo viven los overrides de entorno (KINCAL_*).
    """

    PROJECT_NAME: str = "kincal"
    API_V1_STR: str = "/api/v1"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Override de la semilla del experimento (--seed gana sobre esto)
    SEED: Optional[int] = None

    # Backend del banco de medida (providers/rig/factory.py)
    RIG_BACKEND: str = "sim"

    OUTPUT_DIR: Path = Path("results")
    DEFAULT_CONFIG: Path = SHIPPED_CONFIG

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Invalid log level: {v}")
        return level

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="KINCAL_",
        case_sensitive=True,
        extra="ignore",
    )


def get_settings() -> Settings:
    """Relee el entorno (los tests cambian KINCAL_SEED en caliente)"""
    return Settings()


# Singleton global
settings = Settings()
