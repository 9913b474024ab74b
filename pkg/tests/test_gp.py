# tests/test_gp.py
import logging
import math

import numpy as np
import pytest

from kincal.core.exceptions import IllConditionedModelError, InvalidArgumentError
from kincal.schemas.geometry import Pose
from kincal.schemas.kernels import ProductKernelParams
from kincal.services.geometry import pack_poses, random_unit_quaternions
from kincal.services.gaussian_process import GpModel
from kincal.services.kernels import product_kernel_matrix

KERNEL = ProductKernelParams()


def random_poses(rng, count):
    Q = random_unit_quaternions(rng, count)
    P = rng.uniform(-1.0, 1.0, size=(count, 3))
    return [Pose.from_arrays(q, p) for q, p in zip(Q, P)]


def fit(poses, values, noise=0.0, prior_mean=0.0):
    model = GpModel(KERNEL, noise=noise, prior_mean=prior_mean)
    for x, y in zip(poses, values):
        model = model.add_observation(x, y)
    return model


def test_empty_model_returns_prior(rng):
    model = GpModel(KERNEL, prior_mean=-0.2)
    for x in random_poses(rng, 5):
        mean, var = model.posterior(x)
        assert mean == -0.2
        assert var == pytest.approx(1.0)


def test_interpolates_training_points_without_noise(rng):
    poses = random_poses(rng, 10)
    values = rng.uniform(-1.0, 0.0, size=10)
    model = fit(poses, values)
    for x, y in zip(poses, values):
        mean, var = model.posterior(x)
        assert mean == pytest.approx(y, abs=1e-8)
        assert var <= 1e-8


def test_matches_dense_solve(rng):
    """Oráculo: K̃⁻¹ por resolución densa"""
    noise, prior_mean = 0.1, -0.3
    poses = random_poses(rng, 10)
    values = rng.uniform(-1.0, 0.0, size=10)
    model = fit(poses, values, noise=noise, prior_mean=prior_mean)

    Q, P = pack_poses(poses)
    Qs, Ps = pack_poses(random_poses(rng, 20))
    K = product_kernel_matrix(Q, P, Q, P, KERNEL) + noise**2 * np.eye(10)
    Ks = product_kernel_matrix(Qs, Ps, Q, P, KERNEL)
    mean = prior_mean + Ks @ np.linalg.solve(K, values - prior_mean)
    var = 1.0 - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))

    got_mean, got_var = model.posterior_arrays(Qs, Ps)
    assert np.allclose(got_mean, mean, atol=1e-10)
    assert np.allclose(got_var, var, atol=1e-10)


def test_observation_order_does_not_matter(rng):
    poses = random_poses(rng, 8)
    values = rng.uniform(-1.0, 0.0, size=8)
    order = rng.permutation(8)
    m1 = fit(poses, values, noise=0.05)
    m2 = fit([poses[i] for i in order], values[order], noise=0.05)

    Qs, Ps = pack_poses(random_poses(rng, 20))
    mean1, var1 = m1.posterior_arrays(Qs, Ps)
    mean2, var2 = m2.posterior_arrays(Qs, Ps)
    assert np.allclose(mean1, mean2, atol=1e-10)
    assert np.allclose(var1, var2, atol=1e-10)


def test_duplicate_pose_with_noise(rng):
    x = random_poses(rng, 1)[0]
    model = fit([x, x], [-0.1, -0.3], noise=0.1)
    mean, var = model.posterior(x)
    assert math.isfinite(mean) and math.isfinite(var)
    assert model.jitter == 0.0


def test_duplicate_pose_without_noise_escalates_jitter(rng, caplog):
    x = random_poses(rng, 1)[0]
    with caplog.at_level(logging.WARNING):
        model = fit([x, x], [-0.2, -0.2])
    assert model.jitter == 1e-10
    assert "jitter" in caplog.text
    mean, _ = model.posterior(x)
    assert mean == pytest.approx(-0.2, abs=1e-6)


def test_factorization_failure_raises(rng, mocker):
    mocker.patch(
        "kincal.services.gaussian_process.cho_factor",
        side_effect=np.linalg.LinAlgError("not positive definite"),
    )
    with pytest.raises(IllConditionedModelError):
        GpModel(KERNEL).add_observation(random_poses(rng, 1)[0], 0.0)


def test_variance_bounded_and_non_increasing(rng):
    Qs, Ps = pack_poses(random_poses(rng, 20))
    model = GpModel(KERNEL, noise=0.01)
    _, previous = model.posterior_arrays(Qs, Ps)
    for x in random_poses(rng, 10):
        model = model.add_observation(x, float(rng.uniform(-1.0, 0.0)))
        _, var = model.posterior_arrays(Qs, Ps)
        assert np.all(var <= 1.0 + 1e-10)
        assert np.all(var <= previous + 1e-10)
        previous = var


def test_constant_data_with_matching_prior_mean(rng):
    model = fit(random_poses(rng, 6), [-0.4] * 6, noise=0.01, prior_mean=-0.4)
    Qs, Ps = pack_poses(random_poses(rng, 20))
    mean, _ = model.posterior_arrays(Qs, Ps)
    assert np.allclose(mean, -0.4, atol=1e-10)


def test_add_observation_rejects_non_finite(rng):
    with pytest.raises(InvalidArgumentError):
        GpModel(KERNEL).add_observation(random_poses(rng, 1)[0], math.nan)


def test_add_observation_returns_new_model(rng):
    model = GpModel(KERNEL)
    updated = model.add_observation(random_poses(rng, 1)[0], -0.1)
    assert model.size == 0
    assert updated.size == 1
    assert updated.observations[0][1] == -0.1
