# tests/test_kinematics.py
import math

import numpy as np
import pytest

from kincal.core.exceptions import InvalidArgumentError, TooFewMeasurementsError
from kincal.schemas.kinematics import DhChain, DhJoint, JointKind, param_names
from kincal.services.geometry import align_sign, pose_to_homogeneous, quat_to_rotmat
from kincal.services.kinematics import (
    JACOBIAN_STEP,
    RANK_TOL,
    detect_dependent_columns,
    dh_link_transform,
    forward_kinematics,
    identifiability_check,
    identification_jacobian,
    independent_columns,
    sample_joint_vectors,
    stacked_jacobian,
)


# ============================================================================
# TRANSFORMACIONES
# ============================================================================

def test_dh_link_identity():
    """Parámetros nulos con θ = 0 -> identidad"""
    assert np.allclose(dh_link_transform(DhJoint(), 0.0), np.eye(4))


def test_dh_link_pure_rotation_and_offset():
    T = dh_link_transform(DhJoint(a=1.0), math.pi / 2)
    assert np.allclose(T[:3, 3], [0.0, 1.0, 0.0], atol=1e-15)

    T = dh_link_transform(DhJoint(kind=JointKind.PRISMATIC, d=0.2), 0.3)
    assert np.allclose(T[:3, 3], [0.0, 0.0, 0.5])
    assert np.allclose(T[:3, :3], np.eye(3))


def test_dh_link_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        dh_link_transform(DhJoint(), math.nan)


# ============================================================================
# CINEMÁTICA DIRECTA
# ============================================================================

def test_planar_2r_examples(planar_2r):
    params = planar_2r.nominal_params()
    pose = forward_kinematics(planar_2r, params, [0.0, 0.0])
    assert np.allclose(pose.position(), [2.0, 0.0, 0.0], atol=1e-12)
    assert pose.q.equiv_rotation(pose.q.identity(), tol=1e-12)

    pose = forward_kinematics(planar_2r, params, [math.pi / 2, -math.pi / 2])
    assert np.allclose(pose.position(), [1.0, 1.0, 0.0], atol=1e-12)


def test_fk_matches_matrix_chain(wam_chain, rng):
    """Producto explícito f_B · Π f_i · f_T como oráculo"""
    params = wam_chain.nominal_params() + rng.normal(0, 0.01, size=4 * wam_chain.n_joints)
    true_chain = wam_chain.with_params(params)
    for theta in sample_joint_vectors(wam_chain, 20, rng):
        T = pose_to_homogeneous(wam_chain.base)
        for joint, t in zip(true_chain.joints, theta):
            T = T @ dh_link_transform(joint, t)
        T = T @ pose_to_homogeneous(wam_chain.tool)

        pose = forward_kinematics(wam_chain, params, theta)
        assert np.allclose(pose.position(), T[:3, 3], atol=1e-12)
        assert np.allclose(quat_to_rotmat(pose.q), T[:3, :3], atol=1e-12)


def test_fk_dimension_mismatch(planar_2r):
    with pytest.raises(InvalidArgumentError):
        forward_kinematics(planar_2r, planar_2r.nominal_params(), [0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        forward_kinematics(planar_2r, np.zeros(7), [0.0, 0.0])


# ============================================================================
# JACOBIANO
# ============================================================================

def test_single_joint_analytic_columns():
    """p = (a cos φ, a sin φ, d): ∂p/∂a = (1, 0, 0) y ∂p/∂d = (0, 0, 1) en φ = 0"""
    chain = DhChain(joints=[DhJoint()])
    J = identification_jacobian(chain, chain.nominal_params(), [0.0])
    assert J.shape == (7, 4)
    assert np.allclose(J[4:, 2], [1.0, 0.0, 0.0], atol=1e-9)
    assert np.allclose(J[4:, 3], [0.0, 0.0, 1.0], atol=1e-9)


def test_jacobian_step_halving(wam_chain, rng):
    params = wam_chain.nominal_params()
    thetas = sample_joint_vectors(wam_chain, 3, rng)
    J1 = stacked_jacobian(wam_chain, params, thetas, step=1e-6)
    J2 = stacked_jacobian(wam_chain, params, thetas, step=5e-7)
    assert np.allclose(J1, J2, rtol=1e-6, atol=1e-6)


def _rebuilt_chain_jacobian(chain, params, theta, h=JACOBIAN_STEP):
    """Columna k = [f(Ψ + h·e_k) - f(Ψ - h·e_k)] / 2h, reconstruyendo la cadena"""
    nominal = forward_kinematics(chain, params, theta)
    columns = []
    for k in range(params.size):
        offset = np.zeros(params.size)
        offset[k] = h
        rows = []
        for sign in (1.0, -1.0):
            shifted = chain.with_params(params + sign * offset)
            x = forward_kinematics(shifted, shifted.nominal_params(), theta)
            q = align_sign(nominal.q, x.q).as_array()
            rows.append(np.concatenate([q, x.position()]))
        columns.append((rows[0] - rows[1]) / (2.0 * h))
    return np.column_stack(columns)


def test_jacobian_matches_rebuilt_chain_wam(wam_chain, rng):
    params = wam_chain.nominal_params() + rng.uniform(-0.01, 0.01, size=28)
    for theta in sample_joint_vectors(wam_chain, 3, rng):
        J = identification_jacobian(wam_chain, params, theta)
        assert np.allclose(J, _rebuilt_chain_jacobian(wam_chain, params, theta), rtol=0.0, atol=1e-9)


def test_jacobian_matches_rebuilt_chain_planar_2r(planar_2r, rng):
    params = planar_2r.nominal_params()
    for theta in sample_joint_vectors(planar_2r, 5, rng):
        J = identification_jacobian(planar_2r, params, theta)
        assert np.allclose(J, _rebuilt_chain_jacobian(planar_2r, params, theta), rtol=0.0, atol=1e-9)


def test_stacked_jacobian_shape_and_order(wam_chain, rng):
    params = wam_chain.nominal_params()
    thetas = sample_joint_vectors(wam_chain, 4, rng)
    Jn = stacked_jacobian(wam_chain, params, thetas)
    assert Jn.shape == (28, 28)
    for i, theta in enumerate(thetas):
        assert np.allclose(Jn[7 * i : 7 * (i + 1)], identification_jacobian(wam_chain, params, theta), atol=1e-8)


def test_stacked_jacobian_duplicates(planar_2r):
    """Configuraciones repetidas dan bloques repetidos"""
    Jn = stacked_jacobian(planar_2r, planar_2r.nominal_params(), [[0.3, 0.4], [0.3, 0.4]])
    assert np.allclose(Jn[:7], Jn[7:], atol=1e-10)


def test_stacked_jacobian_requires_configurations(planar_2r):
    with pytest.raises(InvalidArgumentError):
        stacked_jacobian(planar_2r, planar_2r.nominal_params(), np.zeros((0, 2)))


# ============================================================================
# IDENTIFICABILIDAD
# ============================================================================

def test_rank_check_planar_2r_is_deficient(planar_2r, rng):
    """d_1 y d_2 son indistinguibles en el brazo plano"""
    thetas = sample_joint_vectors(planar_2r, 5, rng)
    report = identifiability_check(stacked_jacobian(planar_2r, planar_2r.nominal_params(), thetas))
    assert not report.ok
    assert report.rank < 8


def test_rank_check_full_rank(rng):
    Jn = rng.standard_normal((14, 8))
    report = identifiability_check(Jn)
    assert report.ok
    assert report.rank == 8


def test_rank_check_zero_matrix():
    report = identifiability_check(np.zeros((14, 8)))
    assert report.rank == 0
    assert not report.ok


def test_rank_check_too_few_rows():
    with pytest.raises(TooFewMeasurementsError) as exc:
        identifiability_check(np.ones((7, 8)))
    assert exc.value.required == 2


def test_detect_dependent_columns_planar_2r(planar_2r):
    mask = detect_dependent_columns(planar_2r, planar_2r.nominal_params(), 10, seed=0)
    names = param_names(2)
    excluded = [n for n, keep in zip(names, mask) if not keep]
    assert excluded == ["d_2"]


def test_detect_dependent_columns_skips_known_parameters(planar_2r):
    """Con d_1 conocido, d_2 deja de depender de él y se estima"""
    names = param_names(2)
    known = np.array([n == "d_1" for n in names])
    mask = detect_dependent_columns(planar_2r, planar_2r.nominal_params(), 10, seed=0, known=known)

    excluded = [n for n, keep in zip(names, mask) if not keep]
    assert excluded == ["d_1"]

    thetas = sample_joint_vectors(planar_2r, 10, np.random.default_rng(0))
    assert identifiability_check(stacked_jacobian(planar_2r, planar_2r.nominal_params(), thetas), mask).ok


def test_detect_dependent_columns_all_known(planar_2r):
    known = np.ones(8, dtype=bool)
    mask = detect_dependent_columns(planar_2r, planar_2r.nominal_params(), 1, seed=0, known=known)
    assert not mask.any()


def test_detect_dependent_columns_is_deterministic(wam_chain):
    params = wam_chain.nominal_params()
    m1 = detect_dependent_columns(wam_chain, params, 10, seed=[3, 4])
    m2 = detect_dependent_columns(wam_chain, params, 10, seed=[3, 4])
    assert np.array_equal(m1, m2)


def test_detect_dependent_columns_single_joint_matches_rank():
    chain = DhChain(joints=[DhJoint(a=0.5, d=0.1)])
    params = chain.nominal_params()
    mask = detect_dependent_columns(chain, params, 5, seed=1)
    thetas = sample_joint_vectors(chain, 5, np.random.default_rng(1))
    s = np.linalg.svd(stacked_jacobian(chain, params, thetas), compute_uv=False)
    assert mask.sum() == np.sum(s > RANK_TOL * s.max())


def test_detect_dependent_columns_needs_enough_probes(wam_chain):
    with pytest.raises(TooFewMeasurementsError):
        detect_dependent_columns(wam_chain, wam_chain.nominal_params(), 3, seed=0)


def test_masked_jacobian_is_well_conditioned(wam_chain, rng):
    """Con la máscara detectada el test de rango pasa y cond(J) < 1/τ"""
    params = wam_chain.nominal_params()
    mask = detect_dependent_columns(wam_chain, params, 20, seed=2)
    Jn = stacked_jacobian(wam_chain, params, sample_joint_vectors(wam_chain, 20, rng))
    report = identifiability_check(Jn, mask)
    assert report.ok
    assert np.linalg.cond(Jn[:, mask]) < 1.0 / RANK_TOL


def test_independent_columns_rejects_duplicates(rng):
    base = rng.standard_normal((10, 3))
    Jn = np.column_stack([base, base[:, 1]])
    assert independent_columns(Jn).tolist() == [True, True, True, False]
