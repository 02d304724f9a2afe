"""Projective pairs with a prescribed angle spectrum from n-qubit circuits.

The pair is ``M_0 = I^{(n-1)} (x) |1><1|`` and ``W^H M_0 W`` where ``W`` is a
product of gates ``W_i(theta_i)``, one per control pattern ``i`` of the first
``n - 1`` qubits. Each gate acts as the y-rotation ``U_theta`` on the block
``span{|i0>, |i1>}`` and trivially elsewhere, so the pair splits into
qubit pairs with angles ``theta_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .linalg import PAULI_X, ValidationError
from .qubit import inoise_qubit
from .spectral import INTERIOR_EPS, AngleSpectrum, angle_spectrum, fidelity_angle, inoise_from_angles

CONSISTENCY_ATOL = 1e-8


class ConsistencyError(RuntimeError):
    """Two independent routes to the same number disagree."""


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    thetas: tuple

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"qubit count must be a positive integer, got {self.n}")
        th = tuple(float(t) for t in self.thetas)
        if len(th) != 2 ** (self.n - 1):
            raise ValidationError(f"need {2 ** (self.n - 1)} angles for n={self.n}, got {len(th)}")
        for t in th:
            if not 0.0 <= t <= math.pi / 2 + 1e-12:
                raise ValidationError(f"angles must lie in [0, pi/2], got {t}")
        object.__setattr__(self, "thetas", th)

    @property
    def dim(self) -> int:
        return 2 ** self.n

    @classmethod
    def uniform(cls, n: int) -> "CircuitSpec":
        """Angles ``k (pi/2) / K`` for ``k = 1..K`` with ``K = 2^(n-1)``."""
        k = 2 ** (n - 1)
        return cls(n, tuple((j + 1) * (math.pi / 2) / k for j in range(k)))


def u_theta(theta: float) -> np.ndarray:
    """``exp(-i theta sigma_y / 2)``, the real rotation ``[[c, -s], [s, c]]``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _on_qubit(op: np.ndarray, k: int, n: int) -> np.ndarray:
    ops = [np.eye(2)] * n
    ops[k] = op
    return reduce(np.kron, ops)


def controlled_u(u: np.ndarray, n: int) -> np.ndarray:
    """Apply ``u`` to the last qubit when the first ``n - 1`` qubits are all ``|1>``."""
    d = 2 ** n
    out = np.eye(d, dtype=complex)
    out[d - 2:, d - 2:] = u
    return out


def flip_pattern(i: int, n: int) -> np.ndarray:
    """``X`` on every control qubit whose bit in ``i`` is 0 (first qubit is the high bit)."""
    out = np.eye(2 ** n, dtype=complex)
    for k in range(n - 1):
        if not (i >> (n - 2 - k)) & 1:
            out = out @ _on_qubit(PAULI_X, k, n)
    return out


def gate_w(i: int, theta: float, n: int) -> np.ndarray:
    """``X(i) CU_theta X(i)``: ``U_theta`` on ``span{|i0>, |i1>}``, identity elsewhere."""
    x = flip_pattern(i, n)
    return x @ controlled_u(u_theta(theta), n) @ x


def circuit_unitary(spec: CircuitSpec) -> np.ndarray:
    """Ordered product ``W_0 W_1 ... W_{K-1}`` of the pattern gates."""
    w = np.eye(spec.dim, dtype=complex)
    for i, t in enumerate(spec.thetas):
        g = gate_w(i, t, spec.n)
        # each gate differs from the identity on a closed set of coordinates
        cols = np.flatnonzero(np.any(np.abs(g - np.eye(spec.dim)) > 0, axis=0))
        if cols.size:
            w[:, cols] = w[:, cols] @ g[np.ix_(cols, cols)]
    return w


def target_projection(n: int) -> np.ndarray:
    """``M_0 = I^(n-1) (x) |1><1|``."""
    return _on_qubit(np.diag([0.0, 1.0]).astype(complex), n - 1, n)


def build_measurement_pair(spec: CircuitSpec) -> tuple[np.ndarray, np.ndarray]:
    m0 = target_projection(spec.n)
    w = circuit_unitary(spec)
    n0 = w.conj().T @ m0 @ w
    return m0, 0.5 * (n0 + n0.conj().T)


def _qubit_angles(spec: CircuitSpec) -> list[float]:
    # blocks with cos^2(theta/2) inside the interior band commute numerically
    return [t for t in spec.thetas if math.sin(t / 2) ** 2 > INTERIOR_EPS]


def circuit_incompat(spec: CircuitSpec, b: float, detail: bool = False):
    """``I_b^noise`` of the circuit pair via its spectrum and via the qubit blocks.

    Raises :class:`ConsistencyError` if the two routes differ by more than
    ``1e-8``. With ``detail=True`` returns ``(value, spectral, blockwise)``.
    """
    m0, n0 = build_measurement_pair(spec)
    spectral = inoise_from_angles(angle_spectrum(m0, n0, method="lapack"), b)
    blockwise = max((inoise_qubit(t, b) for t in _qubit_angles(spec)), default=0.0)
    if abs(spectral - blockwise) > CONSISTENCY_ATOL:
        raise ConsistencyError(
            f"spectral value {spectral:.12g} vs blockwise {blockwise:.12g} for b={b}")
    return (spectral, spectral, blockwise) if detail else spectral


def circuit_spectrum(spec: CircuitSpec) -> AngleSpectrum:
    m0, n0 = build_measurement_pair(spec)
    return angle_spectrum(m0, n0, method="lapack")


def maximal_bias_points(spec: CircuitSpec) -> list[float]:
    """For each nonzero angle, the ``b >= 0`` at which the pair is maximally incompatible.

    Inverting ``cos(theta) = (1 - imax(b))^-2 / 2 - 1`` gives
    ``b = sqrt(cos theta) / (r - 1)`` with ``r = sqrt(2 (1 + cos theta))``,
    which avoids the cancellation in ``imax_inverse`` near ``b = 0``.
    """
    out = []
    for t in spec.thetas:
        if t <= 0:
            continue
        c = math.cos(t)
        if abs(c) < 1e-15:
            c = 0.0
        r = math.sqrt(2 * (1 + c))
        out.append(min(1.0, math.sqrt(max(c, 0.0)) / (r - 1)))
    return out


def all_qubits_angle(spec: CircuitSpec) -> float | None:
    """Angle of the rank-one pair ``|1..1><1..1|`` and its image under ``W``."""
    d = spec.dim
    e = np.zeros(d, dtype=complex)
    e[-1] = 1.0
    return fidelity_angle(e, circuit_unitary(spec) @ e)
