# tests/conftest.py
import json
import math

import numpy as np
import pytest

from kincal.core.config import SHIPPED_CONFIG
from kincal.schemas.experiment import ExperimentConfig
from kincal.schemas.kinematics import DhChain, DhJoint
from kincal.services.experiment_service import load_config, parse_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def planar_2r() -> DhChain:
    """Brazo plano 2R con a1 = a2 = 1"""
    limits = (-math.pi, math.pi)
    return DhChain(joints=[DhJoint(a=1.0, limits=limits), DhJoint(a=1.0, limits=limits)])


@pytest.fixture
def shipped_data() -> dict:
    with open(SHIPPED_CONFIG) as f:
        return json.load(f)


@pytest.fixture
def wam_config() -> ExperimentConfig:
    return load_config(SHIPPED_CONFIG)


@pytest.fixture
def wam_chain(wam_config) -> DhChain:
    return wam_config.build_chain()


def make_config(data: dict, **overrides) -> ExperimentConfig:
    """Copia del JSON con overrides por sección (dicts se fusionan)"""
    data = json.loads(json.dumps(data))
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    return parse_config(data)


@pytest.fixture
def fast_config(shipped_data) -> ExperimentConfig:
    """Escenario por defecto recortado para tests rápidos"""
    return make_config(shipped_data, iterations=8, candidate_count=200)


@pytest.fixture
def exact_config(shipped_data) -> ExperimentConfig:
    """Sin errores inyectados, sin ruido de banco ni de GP"""
    return make_config(
        shipped_data,
        iterations=6,
        candidate_count=150,
        injected_errors={"phi": [], "alpha": [], "a": [], "d": []},
        noise={"position": 0.0, "rotation": 0.0, "joint": 0.0},
        gp={"noise": 0.0},
    )


@pytest.fixture
def planar_data(shipped_data) -> dict:
    """Escenario por defecto con el brazo plano 2R y sin errores inyectados"""
    data = json.loads(json.dumps(shipped_data))
    joint = {"kind": "revolute", "phi": 0.0, "alpha": 0.0, "a": 1.0, "d": 0.0, "limits": [-math.pi, math.pi]}
    data["chain"]["joints"] = [dict(joint), dict(joint)]
    data["injected_errors"] = {"phi": [], "alpha": [], "a": [], "d": []}
    data["iterations"] = 4
    data["candidate_count"] = 100
    return data
