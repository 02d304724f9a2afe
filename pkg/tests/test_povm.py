from __future__ import annotations

import numpy as np
import pytest

from incompat.linalg import ValidationError, eigvalsh
from incompat.povm import (
    DeformationMatrix,
    NoiseParams,
    apply_channel,
    bloch,
    deform_depolarize,
    deform_noise,
    dephasing_kraus,
    depolarizing_kraus,
    effect,
    effect_from_bloch,
    joint_from_free_block,
    product_joint,
    qubit_projector,
)

from conftest import random_effect


def test_effect_bounds():
    effect(np.diag([0.0, 1.0]))
    with pytest.raises(ValidationError):
        effect(np.diag([-0.1, 0.5]))
    with pytest.raises(ValidationError):
        effect(np.diag([0.5, 1.1]))


def test_deformation_matrix():
    a = DeformationMatrix.from_bias(0.4)
    assert a.total == pytest.approx(1.0)
    assert a.bias == pytest.approx(0.4)
    assert a.flipped().bias == pytest.approx(-0.4)
    assert DeformationMatrix(0.2, 0.1, 0.3)[1, 0] == 0.1
    assert DeformationMatrix(0, 0, 0).is_zero
    with pytest.raises(ValidationError):
        DeformationMatrix(-1, 0, 1)
    with pytest.raises(ValidationError):
        DeformationMatrix.from_matrix([[1, 0.2], [0.1, 1]])
    with pytest.raises(ValidationError):
        DeformationMatrix.from_bias(1.5)


def test_noise_params():
    assert NoiseParams(0.3, -1.0).probabilities == (0.0, 1.0)
    with pytest.raises(ValidationError):
        NoiseParams(1.2)


def test_deform_noise_endpoints():
    m = qubit_projector(0.7)
    assert np.allclose(deform_noise(m, NoiseParams(0.0, 0.5)), m)
    assert np.allclose(deform_noise(m, NoiseParams(1.0, 0.5)), 0.75 * np.eye(2))


def test_depolarize_matches_channel(rng):
    m = random_effect(3, rng)
    for lam in (0.0, 0.3, 1.0):
        via_kraus = apply_channel(depolarizing_kraus(3, lam), m)
        assert np.allclose(via_kraus, deform_depolarize(m, lam), atol=1e-12)


def test_dephasing_keeps_diagonal(rng):
    m = random_effect(4, rng)
    out = apply_channel(dephasing_kraus(4), m)
    assert np.allclose(out, np.diag(np.diag(m)))


def test_channel_rejects_non_unital():
    with pytest.raises(ValidationError):
        apply_channel([np.diag([1.0, 0.5])], np.eye(2) * 0.5)


def test_joint_blocks_satisfy_marginals(rng):
    m, n = random_effect(3, rng), random_effect(3, rng)
    j = joint_from_free_block(0.1 * m, m, n)
    assert j.marginal_residual(m, n) < 1e-14


def test_product_joint_for_commuting_pair():
    m, n = np.diag([1.0, 1.0, 0.0]), np.diag([1.0, 0.0, 0.0])
    j = product_joint(m, n)
    assert min(j.min_eigs().values()) >= -1e-14


def test_bloch_round_trip():
    e = effect_from_bloch(0.8, [0.1, -0.2, 0.3])
    alpha, vec = bloch(e)
    assert alpha == pytest.approx(0.8)
    assert np.allclose(vec, [0.1, -0.2, 0.3])
    with pytest.raises(ValidationError):
        effect_from_bloch(0.2, [0.5, 0, 0])


def test_qubit_projector():
    p = qubit_projector(1.1)
    assert np.allclose(p @ p, p)
    assert np.allclose(eigvalsh(p), [0, 1], atol=1e-14)
