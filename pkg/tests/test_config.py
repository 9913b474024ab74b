# tests/test_config.py
import json
import math

import numpy as np
import pytest

from kincal.core.config import SHIPPED_CONFIG, get_settings
from kincal.core.exceptions import ConfigValidationError, InvalidArgumentError
from kincal.services.experiment_service import load_config, resolve_seed
from tests.conftest import make_config


def test_shipped_config_loads(wam_config):
    assert wam_config.n_joints == 7
    assert wam_config.kernel.truncation == 96
    assert wam_config.injected_delta()[6] == pytest.approx(1.3)
    # sup_p = null -> 2·Σ(|a| + |d|)
    assert wam_config.objective_weights().sup_p == pytest.approx(2.0)
    assert wam_config.objective_weights().sup_q == pytest.approx(math.pi)


def test_weights_must_sum_to_one(shipped_data):
    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, weights={"alpha": [0.5, 0.4]})
    assert exc.value.field == "weights.alpha"


def test_negative_kappa_rejected(shipped_data):
    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, kernel={"kappa": -0.5})
    assert exc.value.field == "kernel.kappa"


def test_injected_errors_length(shipped_data):
    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, injected_errors={"phi": [0.1, 0.2]})
    assert exc.value.field == "injected_errors.phi"


def test_injected_errors_must_fit_bounds(shipped_data):
    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, bounds={"angle": 1.0})
    assert exc.value.field == "injected_errors"


def test_unknown_keys_are_rejected(shipped_data):
    with pytest.raises(ConfigValidationError):
        make_config(shipped_data, kernal={"kappa": 1.0})


def test_unknown_known_parameter(shipped_data):
    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, known_parameters=["theta_9"])
    assert exc.value.field == "known_parameters"


def test_known_parameters_and_encoder_bias(shipped_data):
    config = make_config(shipped_data, known_parameters=["d_7"], encoder_bias=[0.01] + [0.0] * 6)
    mask = config.known_mask()
    assert mask.sum() == 1 and mask[27]
    assert config.injected_delta()[0] == pytest.approx(0.01)
    assert config.injected_delta()[6] == pytest.approx(1.3)


def test_explicit_bounds(shipped_data):
    config = make_config(shipped_data, bounds={"lower": [-2.0] * 28, "upper": [2.0] * 28})
    lb, ub = config.bound_vectors()
    assert np.array_equal(lb, -2.0 * np.ones(28))

    with pytest.raises(ConfigValidationError) as exc:
        make_config(shipped_data, bounds={"lower": [-2.0] * 27, "upper": [2.0] * 27})
    assert exc.value.field == "bounds.lower"


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigValidationError):
        load_config(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigValidationError):
        load_config(broken)

    listed = tmp_path / "list.json"
    listed.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ConfigValidationError):
        load_config(listed)


def test_seed_precedence(wam_config, monkeypatch):
    """--seed > KINCAL_SEED > seed del JSON"""
    monkeypatch.delenv("KINCAL_SEED", raising=False)
    assert resolve_seed(wam_config) == 7

    monkeypatch.setenv("KINCAL_SEED", "11")
    assert get_settings().SEED == 11
    assert resolve_seed(wam_config) == 11
    assert resolve_seed(wam_config, 3) == 3


def test_negative_seed_rejected(wam_config, monkeypatch):
    monkeypatch.delenv("KINCAL_SEED", raising=False)
    with pytest.raises(InvalidArgumentError):
        resolve_seed(wam_config, -1)

    monkeypatch.setenv("KINCAL_SEED", "-5")
    with pytest.raises(InvalidArgumentError):
        resolve_seed(wam_config)


def test_shipped_config_path_exists():
    assert SHIPPED_CONFIG.is_file()
