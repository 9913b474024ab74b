# tests/test_bayesopt.py
import logging
import math

import numpy as np
import pytest

from kincal.core.exceptions import RigError
from kincal.providers.rig.factory import get_measurement_rig
from kincal.schemas.design import DesignMode, ObjectiveWeights, UcbMode, UcbSchedule
from kincal.schemas.geometry import Pose
from kincal.schemas.kinematics import param_names
from kincal.services.bayesopt import (
    RIG_STREAM,
    DesignRunner,
    beta_k,
    evaluate_objective,
    generate_candidates,
    objective,
    run_design,
    run_random_baseline,
    select_next,
    ucb,
)
from kincal.services.gaussian_process import GpModel
from kincal.services.kinematics import forward_kinematics
from tests.conftest import make_config

H = 1.0 / math.sqrt(2.0)
WEIGHTS = ObjectiveWeights(alpha1=0.5, alpha2=0.5, sup_p=1.0, sup_q=math.pi)


# ============================================================================
# OBJETIVO
# ============================================================================

def test_objective_examples():
    x = Pose.from_arrays((1, 0, 0, 0), (0.2, 0.0, 0.0))
    assert objective(x, x, WEIGHTS) == 0.0
    assert objective(x, Pose.from_arrays((-1, 0, 0, 0), (0.2, 0.0, 0.0)), WEIGHTS) == 0.0

    saturated = Pose.from_arrays((0, 1, 0, 0), (1.2, 0.0, 0.0))
    assert objective(x, saturated, WEIGHTS) == pytest.approx(-1.0, abs=1e-12)

    quarter = Pose.from_arrays((H, H, 0, 0), (0.3, 0.0, 0.0))
    assert objective(x, quarter, WEIGHTS) == pytest.approx(-0.30, abs=1e-12)


def test_objective_clips_large_terms(caplog):
    x = Pose()
    far = Pose.from_arrays((1, 0, 0, 0), (5.0, 0.0, 0.0))
    with caplog.at_level(logging.WARNING):
        value = evaluate_objective(x, far, WEIGHTS)
    assert value.clipped
    assert value.f == pytest.approx(-0.5)
    assert value.f_p == pytest.approx(5.0)
    assert "clipped" in caplog.text


def test_ucb_examples():
    fixed = UcbSchedule(mode=UcbMode.FIXED, beta=4.0)
    assert ucb(-0.3, 0.0, 1, fixed) == -0.3
    assert ucb(0.0, 1.0, 1, fixed) == pytest.approx(2.0)

    srinivas = UcbSchedule(mode=UcbMode.SRINIVAS, delta=0.1, candidate_count=1000)
    assert beta_k(1, srinivas) == pytest.approx(19.42, abs=5e-3)
    assert beta_k(2, srinivas) > beta_k(1, srinivas)


def test_ucb_rejects_negative_variance():
    with pytest.raises(ValueError):
        ucb(0.0, -1.0, 1, UcbSchedule())


# ============================================================================
# CANDIDATOS Y SELECCIÓN
# ============================================================================

def test_generate_candidates(wam_chain):
    params = wam_chain.nominal_params()
    candidates = generate_candidates(wam_chain, params, 100, seed=[1, 2])
    assert len(candidates) == 100

    lo, hi = wam_chain.joint_limits()
    assert np.all(candidates.thetas >= lo) and np.all(candidates.thetas <= hi)

    again = generate_candidates(wam_chain, params, 100, seed=[1, 2])
    assert np.array_equal(candidates.Q, again.Q) and np.array_equal(candidates.thetas, again.thetas)

    for i in range(0, 100, 10):
        pose, theta = candidates[i]
        fk = forward_kinematics(wam_chain, params, theta)
        assert np.allclose(pose.position(), fk.position(), atol=1e-12)
        assert pose.q.equiv_rotation(fk.q, tol=1e-12)


def test_select_next_on_prior_picks_first(wam_config, wam_chain):
    """Con el prior todas las varianzas empatan -> índice 0"""
    model = GpModel(wam_config.kernel.params())
    candidates = generate_candidates(wam_chain, wam_chain.nominal_params(), 50, seed=0)
    assert select_next(model, candidates, 1, wam_config.ucb_schedule()) == 0


def test_select_next_single_candidate(wam_config, wam_chain):
    model = GpModel(wam_config.kernel.params())
    candidates = generate_candidates(wam_chain, wam_chain.nominal_params(), 1, seed=0)
    assert select_next(model, candidates, 1, wam_config.ucb_schedule()) == 0


def _trained_model(wam_config, candidates, offset=0.0):
    model = GpModel(wam_config.kernel.params(), noise=1e-3, prior_mean=offset)
    for i, f in zip(range(0, 40, 8), (-0.1, -0.4, -0.2, -0.05, -0.3)):
        model = model.add_observation(candidates.pose(i), f + offset)
    return model


def test_select_next_is_permutation_equivariant(wam_config, wam_chain, rng):
    schedule = wam_config.ucb_schedule()
    candidates = generate_candidates(wam_chain, wam_chain.nominal_params(), 200, seed=5)
    model = _trained_model(wam_config, candidates)
    index = select_next(model, candidates, 6, schedule)

    order = rng.permutation(len(candidates))
    permuted_index = select_next(model, candidates.permuted(order), 6, schedule)
    assert order[permuted_index] == index


def test_select_next_invariant_to_constant_shift(wam_config, wam_chain):
    """Desplazar observaciones y media a priori por c no cambia el argmax"""
    schedule = wam_config.ucb_schedule()
    candidates = generate_candidates(wam_chain, wam_chain.nominal_params(), 200, seed=5)
    base = select_next(_trained_model(wam_config, candidates), candidates, 6, schedule)
    shifted = select_next(_trained_model(wam_config, candidates, offset=-0.5), candidates, 6, schedule)
    assert base == shifted


# ============================================================================
# BUCLE DE DISEÑO
# ============================================================================

def test_design_mask_estimates_parameters_freed_by_known_ones(planar_data):
    config = make_config(planar_data, known_parameters=["d_1"])
    chain = config.build_chain()
    rig = get_measurement_rig(config, seed=[config.seed, RIG_STREAM])
    runner = DesignRunner(rig, chain, chain.nominal_params(), config, mode=DesignMode.BO)

    selected = [n for n, keep in zip(param_names(2), runner.mask) if keep]
    assert selected == ["phi_1", "phi_2", "alpha_1", "alpha_2", "a_1", "a_2", "d_2"]


def test_run_design_without_errors_is_exact(exact_config):
    chain = exact_config.build_chain()
    rig = get_measurement_rig(exact_config, seed=[exact_config.seed, RIG_STREAM])
    runner = DesignRunner(rig, chain, chain.nominal_params(), exact_config, mode=DesignMode.BO)
    records = runner.run()

    assert len(records) == exact_config.iterations
    assert all(r.f == 0.0 for r in records)

    candidates = generate_candidates(chain, chain.nominal_params(), 100, seed=99)
    mean, _ = runner.model.posterior_arrays(candidates.Q, candidates.P)
    assert np.all(np.abs(mean) <= 1e-10)


def test_random_baseline_without_errors_is_exact(exact_config):
    chain = exact_config.build_chain()
    rig = get_measurement_rig(exact_config, seed=[exact_config.seed, RIG_STREAM])
    records = run_random_baseline(rig, chain, chain.nominal_params(), 5, exact_config.seed, exact_config)
    assert len(records) == 5
    assert all(r.f == 0.0 and r.mode == DesignMode.RANDOM for r in records)


def _history(config, mode):
    chain = config.build_chain()
    rig = get_measurement_rig(config, seed=[config.seed, RIG_STREAM])
    runner = DesignRunner(rig, chain, chain.nominal_params(), config, mode=mode)
    return [r.model_dump() for r in runner.run()]


@pytest.mark.parametrize("mode", [DesignMode.BO, DesignMode.RANDOM])
def test_design_history_is_deterministic(fast_config, mode):
    assert _history(fast_config, mode) == _history(fast_config, mode)


def test_run_design_objectives_stay_in_range(fast_config):
    chain = fast_config.build_chain()
    rig = get_measurement_rig(fast_config, seed=[fast_config.seed, RIG_STREAM])
    records = run_design(rig, chain, chain.nominal_params(), fast_config.iterations, fast_config)
    assert [r.iteration for r in records] == list(range(1, fast_config.iterations + 1))
    assert all(-1.0 <= r.f <= 0.0 for r in records)
    # Los errores inyectados se notan antes de recalibrar
    assert records[0].f < 0.0


def test_interleaved_calibration_drives_objective_to_zero(shipped_data):
    """Sin ruido, la recalibración intercalada acaba con el mejor objetivo del run"""
    config = make_config(
        shipped_data,
        iterations=20,
        candidate_count=300,
        noise={"position": 0.0, "rotation": 0.0, "joint": 0.0},
    )
    chain = config.build_chain()
    rig = get_measurement_rig(config, seed=[config.seed, RIG_STREAM])
    records = run_design(rig, chain, chain.nominal_params(), config.iterations, config)

    assert any(r.calibrated for r in records)
    final = abs(records[-1].f)
    assert final <= 1e-6
    assert final <= min(abs(r.f) for r in records) + 1e-9
    assert final < abs(records[0].f)


def test_rig_failure_reports_iteration(fast_config, mocker):
    chain = fast_config.build_chain()
    rig = get_measurement_rig(fast_config, seed=0)
    real_command = rig.command
    calls = {"n": 0}

    def flaky(target, theta=None):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RigError("encoder read timeout")
        return real_command(target, theta)

    mocker.patch.object(rig, "command", side_effect=flaky)
    with pytest.raises(RigError) as exc:
        run_design(rig, chain, chain.nominal_params(), 5, fast_config)
    assert exc.value.iteration == 3
    assert "encoder read timeout" in exc.value.message
