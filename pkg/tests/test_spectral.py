from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incompat.linalg import ValidationError, direct_sum, random_unitary
from incompat.povm import qubit_projector
from incompat.qubit import imax, inoise_qubit
from incompat.spectral import (
    AngleSpectrum,
    angle_spectrum,
    centered_dft,
    fidelity_angle,
    grid_points,
    inoise_from_angles,
    inoise_projective,
    max_deficit,
    qp_binarization,
)

from conftest import random_projection


@settings(max_examples=30, deadline=None)
@given(angles=st.lists(st.floats(0.05, math.pi - 0.05), min_size=1, max_size=5),
       seed=st.integers(0, 2**32 - 1))
def test_block_angles_recovered(angles, seed):
    m = direct_sum(*[qubit_projector(0.0)] * len(angles))
    n = direct_sum(*[qubit_projector(t) for t in angles])
    u = random_unitary(m.shape[0], np.random.default_rng(seed))
    spec = angle_spectrum(u @ m @ u.conj().T, u @ n @ u.conj().T)
    assert np.allclose(spec.angles, sorted(angles), atol=1e-7)


def test_commuting_blocks_drop_out():
    m = direct_sum(qubit_projector(0.0), np.diag([1.0, 0.0]))
    n = direct_sum(qubit_projector(1.0), np.diag([1.0, 1.0]))
    spec = angle_spectrum(m, n)
    assert np.allclose(spec.angles, [1.0])
    assert angle_spectrum(np.diag([1.0, 0]), np.diag([0, 1.0])).empty


def test_matches_product_spectrum():
    rng = np.random.default_rng(8)
    m, n = random_projection(7, 3, rng), random_projection(7, 4, rng)
    spec = angle_spectrum(m, n)
    w = np.linalg.eigvalsh(m @ n @ m)
    inner = np.sort(w[(w > 1e-9) & (w < 1 - 1e-9)])
    assert np.allclose(np.sort(np.cos(spec.angles / 2) ** 2), inner, atol=1e-8)


def test_jacobi_and_lapack_agree():
    rng = np.random.default_rng(9)
    m, n = random_projection(6, 3, rng), random_projection(6, 2, rng)
    a = angle_spectrum(m, n).angles
    b = angle_spectrum(m, n, method="lapack").angles
    assert np.allclose(a, b, atol=1e-10)


def test_rejects_non_projection():
    with pytest.raises(ValidationError):
        angle_spectrum(0.5 * np.eye(2), qubit_projector(1.0))


def test_inoise_from_angles():
    spec = AngleSpectrum(np.array([0.4, 1.5]))
    assert inoise_from_angles(spec, 0.2) == pytest.approx(max(inoise_qubit(0.4, 0.2), inoise_qubit(1.5, 0.2)))
    assert inoise_from_angles(AngleSpectrum(np.array([])), 0.3) == 0.0
    assert inoise_projective(qubit_projector(0), qubit_projector(math.pi / 2), 0.0) == pytest.approx(
        1 - 1 / math.sqrt(2), abs=1e-9)


def test_distinct_and_gap():
    spec = AngleSpectrum(np.array([1.0, 1.0 + 1e-12, 2.0]))
    vals, mult = spec.distinct()
    assert np.allclose(vals, [1.0, 2.0]) and list(mult) == [2, 1]
    assert spec.max_gap() == pytest.approx(math.pi - 2.0)
    with pytest.raises(ValidationError):
        AngleSpectrum(np.array([0.0]))


def test_max_deficit_zero_at_optimal_angle():
    spec = AngleSpectrum(np.array([math.pi / 2]))
    deficit, arg = max_deficit(spec, [0.0])
    assert deficit == pytest.approx(0.0, abs=1e-9) and arg == 0.0
    assert max_deficit(spec, [0.0, 0.9])[0] == pytest.approx(imax(0.9) - inoise_qubit(math.pi / 2, 0.9))


def test_fidelity_angle():
    assert fidelity_angle([1, 0], [1, 0]) is None
    assert fidelity_angle([1, 0], [0, 1]) is None
    v = np.array([1, 1]) / math.sqrt(2)
    assert fidelity_angle([1, 0], v) == pytest.approx(math.pi / 2)
    with pytest.raises(ValidationError):
        fidelity_angle([1, 0], [1, 1])


def test_dft_and_grid():
    f = centered_dft(16)
    assert np.allclose(f.conj().T @ f, np.eye(16), atol=1e-12)
    x = grid_points(16)
    assert np.allclose(np.diff(x), 0.25) and x.sum() == pytest.approx(0.0)


def test_qp_binarization():
    q, p = qp_binarization(8)
    assert np.allclose(p @ p, p, atol=1e-12)
    assert np.trace(q).real == pytest.approx(4) and np.trace(p).real == pytest.approx(4)
    for bad in (0, 3, 7):
        with pytest.raises(ValidationError):
            qp_binarization(bad)


def test_qp_refinement_regression():
    # frozen from a reference run; the gap shrinks only slowly with the grid
    gaps, deficits = [], []
    b_values = np.linspace(-1, 1, 81)
    for size in (32, 64, 128):
        spec = angle_spectrum(*qp_binarization(size), method="lapack")
        gaps.append(spec.max_gap())
        deficits.append(max_deficit(spec, b_values)[0])
    assert gaps[2] == pytest.approx(0.7614528765, abs=1e-8)
    assert deficits == pytest.approx([0.02108557479198797, 0.016323056921584145, 0.01300846922652571],
                                     abs=1e-9)
    assert gaps[0] > gaps[1] > gaps[2]
