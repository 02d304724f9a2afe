"""Projective pairs reduced to their angle spectrum.

Two projections decompose the space into one- and two-dimensional invariant
blocks; on each two-dimensional block they act like ``(P_0, P_theta)``.
The angles are read off the spectrum of ``I - (M - N)^2``, whose interior
eigenvalue ``x`` on such a block is ``cos^2(theta/2)`` with multiplicity two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ValidationError, _same_dim, eig_hermitian, hermitian, is_projection
from .qubit import imax, inoise_qubit

INTERIOR_EPS = 1e-9


@dataclass(frozen=True)
class AngleSpectrum:
    """Multiset of angles in ``(0, pi)``, ascending, one entry per block."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.sort(np.asarray(self.angles, dtype=float))
        if a.size and (a[0] <= 0 or a[-1] >= math.pi):
            raise ValidationError("angles must lie strictly inside (0, pi)")
        object.__setattr__(self, "angles", a)

    def __len__(self) -> int:
        return self.angles.size

    @property
    def empty(self) -> bool:
        return self.angles.size == 0

    def distinct(self, atol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
        """Grouped angles and their multiplicities."""
        vals: list[float] = []
        mult: list[int] = []
        for t in self.angles:
            if vals and t - vals[-1] <= atol:
                mult[-1] += 1
            else:
                vals.append(float(t))
                mult.append(1)
        return np.array(vals), np.array(mult, dtype=int)

    def max_gap(self) -> float:
        """Largest gap between consecutive points of ``{0} + angles + {pi}``."""
        pts = np.concatenate([[0.0], self.angles, [math.pi]])
        return float(np.max(np.diff(pts)))


def _projection(p, name: str) -> np.ndarray:
    p = hermitian(p)
    if not is_projection(p):
        raise ValidationError(f"{name} is not a projection; use the SDP path for general effects")
    return p


def angle_spectrum(m, n, eps: float = INTERIOR_EPS, method: str = "jacobi") -> AngleSpectrum:
    """Angles ``theta`` with ``cos^2(theta/2)`` in the interior spectrum of ``I - (M - N)^2``.

    Interior eigenvalues come in equal pairs (one pair per two-dimensional
    block); each pair contributes one angle.
    """
    m, n = _projection(m, "M"), _projection(n, "N")
    d = _same_dim(m, n)
    diff = m - n
    x = eig_hermitian(np.eye(d) - diff @ diff, method=method).eigenvalues
    inner = x[(x > eps) & (x < 1 - eps)]
    if inner.size % 2:
        # a pair split by the eps band; the product MNM has each value once
        w = eig_hermitian(m @ n @ m, method=method).eigenvalues
        vals = w[(w > eps) & (w < 1 - eps)]
    else:
        vals = 0.5 * (inner[0::2] + inner[1::2])
    return AngleSpectrum(np.arccos(np.clip(2 * vals - 1, -1.0, 1.0)))


def inoise_from_angles(spec: AngleSpectrum, b: float) -> float:
    if spec.empty:
        return 0.0
    return max(inoise_qubit(float(t), b) for t in spec.distinct()[0])


def inoise_projective(m, n, b: float) -> float:
    """``I_b^noise`` of a projective pair as the largest value over its angles."""
    return inoise_from_angles(angle_spectrum(m, n), b)


def max_deficit(spec: AngleSpectrum, b_values) -> tuple[float, float]:
    """``sup_b [imax(b) - I_b^noise]`` over ``b_values`` and the maximizing ``b``."""
    best, arg = -math.inf, float("nan")
    for b in b_values:
        v = imax(b) - inoise_from_angles(spec, b)
        if v > best:
            best, arg = v, float(b)
    return best, arg


def fidelity_angle(phi, psi) -> float | None:
    """``arccos(2F^2 - 1)`` for unit vectors; ``None`` when ``F`` is 0 or 1.

    The rank-one projections onto ``phi`` and ``psi`` are compatible in
    those cases, so there is no angle.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if phi.shape != psi.shape:
        raise ValidationError("vectors must have the same length")
    for v in (phi, psi):
        nv = np.linalg.norm(v)
        if nv == 0:
            raise ValidationError("zero vector")
        if abs(nv - 1) > 1e-10:
            raise ValidationError(f"vector not normalized (norm {nv:.12g})")
    f2 = abs(np.vdot(psi, phi)) ** 2
    if f2 <= INTERIOR_EPS or f2 >= 1 - INTERIOR_EPS:
        return None
    return math.acos(2 * f2 - 1)


def centered_dft(n: int) -> np.ndarray:
    """Unitary DFT on the half-integer grid ``u_j = j - (n - 1)/2``."""
    u = np.arange(n) - 0.5 * (n - 1)
    return np.exp(-2j * np.pi * np.outer(u, u) / n) / math.sqrt(n)


def grid_points(grid_size: int) -> np.ndarray:
    """Positions of the centered grid with spacing ``1/sqrt(grid_size)``."""
    return (np.arange(grid_size) - 0.5 * (grid_size - 1)) / math.sqrt(grid_size)


def qp_binarization(grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-line projections for position and momentum on a finite grid.

    ``Q+`` projects onto grid points with positive coordinate and
    ``P+ = F^H Q+ F``. The grid spacing only rescales coordinates and drops
    out of the projections.
    """
    if grid_size < 2 or grid_size % 2:
        raise ValidationError(f"grid size must be an even integer >= 2, got {grid_size}")
    q = np.diag((grid_points(grid_size) > 0).astype(float)).astype(complex)
    f = centered_dft(grid_size)
    p = f.conj().T @ q @ f
    return q, 0.5 * (p + p.conj().T)
