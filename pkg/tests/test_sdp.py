from __future__ import annotations

import math

import numpy as np
import pytest

from incompat.linalg import ValidationError, direct_sum, random_unitary
from incompat.povm import DeformationMatrix, apply_channel, qubit_projector
from incompat.qubit import LinkFunction, f_a, f_a_inv, inoise_qubit
from incompat.sdp import (
    IncompatProgram,
    certify,
    feasible_at,
    inoise_direct,
    inoise_sdp,
    max_margin,
    solve_incompat,
    solve_steer,
)
from incompat.spectral import angle_spectrum

from conftest import random_effect, random_projection, unsharp_projection

TOL = 1e-7
A = DeformationMatrix(0.3, 0.1, 0.5)


def value(m, n, a=A):
    return solve_incompat(IncompatProgram(m, n, a, TOL), dual=False).mu_star


def qubit_value(theta, a):
    lam = inoise_qubit(theta, a.bias, xtol=1e-14)
    return f_a_inv(lam, LinkFunction.of(a))


def test_unbiased_qubit_value():
    a = DeformationMatrix.from_bias(0.0)
    res = solve_incompat(IncompatProgram(qubit_projector(0), qubit_projector(math.pi / 2), a))
    assert res.mu_star == pytest.approx(math.sqrt(2) - 1, abs=1e-6)
    assert res.status == "optimal"
    assert certify(res, IncompatProgram(qubit_projector(0), qubit_projector(math.pi / 2), a)).ok


@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
@pytest.mark.parametrize("b", [-1.0, -0.4, 0.0, 0.7, 1.0])
def test_qubit_matches_analytic(theta, b):
    a = DeformationMatrix.from_bias(b)
    mu = value(qubit_projector(0), qubit_projector(theta), a)
    assert f_a(mu, LinkFunction.of(a)) == pytest.approx(inoise_qubit(theta, b), abs=1e-6)


def test_commuting_pair_is_zero():
    m, n = np.diag([1.0, 0.0, 1.0]), np.diag([1.0, 1.0, 0.0])
    res = solve_incompat(IncompatProgram(m, n, A))
    assert res.mu_star == 0.0 and res.status == "optimal"


def test_zero_deformation_rejected():
    with pytest.raises(ValidationError):
        solve_incompat(IncompatProgram(qubit_projector(0), qubit_projector(1), DeformationMatrix(0, 0, 0)))


def test_feasibility_is_monotone():
    prog = IncompatProgram(qubit_projector(0), qubit_projector(1.0), A)
    mu = value(prog.m, prog.n)
    flags = [feasible_at(x, prog).feasible for x in np.linspace(0, 2 * mu, 9)]
    first = flags.index(True)
    assert all(flags[first:]) and not any(flags[:first])
    witness = feasible_at(1.5 * mu, prog).joint
    assert min(witness.min_eigs(1.5 * mu, A).values()) >= -1e-9
    assert not feasible_at(0.5 * mu, prog).feasible
    assert feasible_at(0.5 * mu, prog).margin > 0


def test_inner_margin_bracket():
    prog = IncompatProgram(qubit_projector(0), qubit_projector(1.0), A)
    res = max_margin(prog, 0.2, decide=False)
    assert res.t <= res.t_upper + 1e-12
    assert res.gap < 1e-9


def test_symmetry_and_unitary_invariance(rng):
    m, n = unsharp_projection(3, rng), unsharp_projection(3, rng)
    v = value(m, n)
    assert v > 0
    assert value(n, m) == pytest.approx(v, abs=2 * TOL)
    u = random_unitary(3, rng)
    assert value(u.conj().T @ m @ u, u.conj().T @ n @ u) == pytest.approx(v, abs=2 * TOL)


def test_channel_monotone(rng):
    m, n = random_projection(3, 1, rng), random_projection(3, 2, rng)
    w = rng.dirichlet(np.ones(3))
    kraus = [math.sqrt(p) * random_unitary(3, rng) for p in w]
    assert value(apply_channel(kraus, m), apply_channel(kraus, n)) <= value(m, n) + 2 * TOL


def test_convexity_first_argument(rng):
    n = random_projection(2, 1, rng)
    m1, m2 = random_projection(2, 1, rng), random_projection(2, 1, rng)
    mix = 0.3 * m1 + 0.7 * m2
    assert max(value(m1, n), value(m2, n)) > 0
    assert value(mix, n) <= max(value(m1, n), value(m2, n)) + 2 * TOL


def test_direct_sum_is_max():
    blocks = [(0.5, A), (1.4, A)]
    vals = [value(qubit_projector(0), qubit_projector(t)) for t, _ in blocks]
    m = direct_sum(qubit_projector(0), qubit_projector(0))
    n = direct_sum(qubit_projector(0.5), qubit_projector(1.4))
    assert value(m, n) == pytest.approx(max(vals), abs=2 * TOL)


def test_isometry_compression(rng):
    # pair on K embedded in a larger space with a trivial part on the complement
    mk, nk = unsharp_projection(2, rng), unsharp_projection(2, rng)
    v = random_unitary(4, rng)[:, :2]
    rest = np.eye(4) - v @ v.conj().T
    m = v @ mk @ v.conj().T + rest
    n = v @ nk @ v.conj().T
    assert np.allclose(v.conj().T @ m @ v, mk)
    assert value(mk, nk) > 0
    assert value(m, n) == pytest.approx(value(mk, nk), abs=2 * TOL)


def test_complement_flips_deformation(rng):
    m, n = unsharp_projection(2, rng), unsharp_projection(2, rng)
    eye = np.eye(2)
    assert value(m, n, A.flipped()) > 0
    assert value(eye - m, eye - n) == pytest.approx(value(m, n, A.flipped()), abs=2 * TOL)


def test_spectral_reduction(rng):
    m, n = random_projection(4, 2, rng), random_projection(4, 2, rng)
    a = DeformationMatrix.from_bias(0.3)
    expected = max(qubit_value(t, a) for t in angle_spectrum(m, n).angles)
    assert value(m, n, a) == pytest.approx(expected, abs=2 * TOL)


def test_inoise_routes_agree():
    m, n = qubit_projector(0), qubit_projector(0.9)
    ref = inoise_qubit(0.9, 0.5)
    assert inoise_sdp(m, n, 0.5, dual=False) == pytest.approx(ref, abs=1e-6)
    assert inoise_direct(m, n, 0.5) == pytest.approx(ref, abs=1e-6)


def test_steer_rank_one_qubit():
    for theta in (0.4, math.pi / 2, 2.2):
        s = solve_steer(qubit_projector(0), qubit_projector(theta))
        assert s == pytest.approx(inoise_qubit(theta, 0.0), abs=1e-5)
        assert s <= 0.5


def test_certificate_flags_bad_gap():
    prog = IncompatProgram(qubit_projector(0), qubit_projector(1.0), A)
    res = solve_incompat(prog, dual=False)
    report = certify(res, prog)
    assert not report.ok and "no dual bound" in report.violations


def test_compatible_pair_with_boundary_slack():
    # this pair drove a slack block to numerical singularity before convergence
    rng = np.random.default_rng(20240611)
    m, n = random_effect(2, rng), random_effect(2, rng)
    assert value(m, n, DeformationMatrix(0.5, 0.1, 0.3)) == 0.0
