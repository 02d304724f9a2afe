"""Binary observables, noise deformations, channels and joint-POVM blocks.

A binary observable is represented by its outcome-1 effect ``M`` (a complex
Hermitian array with ``0 <= M <= I``); the outcome-0 effect ``I - M`` is
implicit throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import PAULIS, ValidationError, _same_dim, eigvalsh, hermitian

EFFECT_ATOL = 1e-10


def effect(m, atol: float = EFFECT_ATOL) -> np.ndarray:
    """Validate an effect ``0 <= M <= I``.

    Eigenvalues outside ``[0, 1]`` by at most ``atol`` are clamped back into
    range; larger violations raise :class:`ValidationError`.
    """
    m = hermitian(m)
    w, v = np.linalg.eigh(m)
    if w[0] < -atol or w[-1] > 1 + atol:
        raise ValidationError(
            f"not an effect: spectrum [{w[0]:.3g}, {w[-1]:.3g}] outside [0, 1]"
        )
    if w[0] < 0 or w[-1] > 1:
        m = (v * np.clip(w, 0.0, 1.0)) @ v.conj().T
        m = 0.5 * (m + m.conj().T)
    return m


@dataclass(frozen=True)
class NoiseParams:
    lam: float
    bias: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"noise magnitude must lie in [0, 1], got {self.lam}")
        if not -1.0 <= self.bias <= 1.0:
            raise ValidationError(f"bias must lie in [-1, 1], got {self.bias}")

    @property
    def probabilities(self) -> tuple[float, float]:
        """Trivial-outcome distribution ``(p_1, p_0)``."""
        return 0.5 * (1 + self.bias), 0.5 * (1 - self.bias)


@dataclass(frozen=True)
class DeformationMatrix:
    """Symmetric nonnegative 2x2 matrix ``(a_ij)`` deforming the joint constraints.

    Only the independent entries are stored; ``a10 == a01``.
    """

    a00: float
    a01: float
    a11: float

    def __post_init__(self):
        for name in ("a00", "a01", "a11"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be finite and nonnegative, got {v}")

    @classmethod
    def from_matrix(cls, a) -> "DeformationMatrix":
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2) or abs(a[0, 1] - a[1, 0]) > 1e-12:
            raise ValidationError("deformation matrix must be a symmetric 2x2 array")
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 1]))

    @classmethod
    def from_bias(cls, b: float) -> "DeformationMatrix":
        """Diagonal representative ``diag((1-b)/2, (1+b)/2)`` with total weight 1."""
        if not -1.0 <= b <= 1.0:
            raise ValidationError(f"bias must lie in [-1, 1], got {b}")
        return cls(0.5 * (1 - b), 0.0, 0.5 * (1 + b))

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        if i == 1 and j == 1:
            return self.a11
        if i == 0 and j == 0:
            return self.a00
        return self.a01

    def as_array(self) -> np.ndarray:
        return np.array([[self.a00, self.a01], [self.a01, self.a11]])

    @property
    def total(self) -> float:
        return self.a00 + 2 * self.a01 + self.a11

    @property
    def bias(self) -> float:
        return 2 * (self.a11 + self.a01) / self.total - 1

    @property
    def is_zero(self) -> bool:
        return self.total == 0

    def flipped(self) -> "DeformationMatrix":
        """Relabel both outcomes: ``a~_ij = a_{i+1, j+1}`` (mod 2)."""
        return DeformationMatrix(self.a11, self.a01, self.a00)


def deform_noise(m, noise: NoiseParams) -> np.ndarray:
    """Mix with a trivial observable: ``(1 - lam) M + lam (1 + b)/2 I``."""
    m = effect(m)
    p1 = noise.probabilities[0]
    return (1 - noise.lam) * m + noise.lam * p1 * np.eye(m.shape[0])


def deform_depolarize(m, lam: float) -> np.ndarray:
    """Heisenberg-picture mixture with the completely depolarizing channel."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"noise magnitude must lie in [0, 1], got {lam}")
    m = effect(m)
    d = m.shape[0]
    return (1 - lam) * m + lam * (np.trace(m).real / d) * np.eye(d)


def apply_channel(kraus, m, atol: float = 1e-9) -> np.ndarray:
    """Heisenberg-picture action ``sum_i K_i^H M K_i`` of a unital channel."""
    m = effect(m)
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise ValidationError("empty Kraus set")
    d = m.shape[0]
    total = np.zeros((d, d), dtype=complex)
    for k in ks:
        if k.shape != (d, d):
            raise ValidationError(f"Kraus operator shape {k.shape} does not match dim {d}")
        total += k.conj().T @ k
    if np.max(np.abs(total - np.eye(d))) > atol:
        raise ValidationError("Kraus operators do not satisfy sum K^H K = I")
    out = sum(k.conj().T @ m @ k for k in ks)
    return effect(out)


def depolarizing_kraus(d: int, lam: float) -> list[np.ndarray]:
    """Kraus operators of ``(1 - lam) id + lam * depolarize`` on dimension ``d``.

    Built from the Weyl (clock and shift) operators, whose uniform twirl is
    the completely depolarizing channel.
    """
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    weyl = [np.linalg.matrix_power(shift, x) @ np.linalg.matrix_power(clock, z)
            for x in range(d) for z in range(d)]
    ks = [np.sqrt(1 - lam) * np.eye(d, dtype=complex)]
    ks += [np.sqrt(lam) / d * w for w in weyl]
    return ks


def dephasing_kraus(d: int) -> list[np.ndarray]:
    """Completely dephasing channel in the computational basis."""
    out = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    return out


@dataclass(frozen=True)
class JointCandidate:
    """Four joint-POVM blocks ``G_11, G_10, G_01, G_00``."""

    g11: np.ndarray
    g10: np.ndarray
    g01: np.ndarray
    g00: np.ndarray

    def __getitem__(self, ij: tuple[int, int]) -> np.ndarray:
        return {(1, 1): self.g11, (1, 0): self.g10, (0, 1): self.g01, (0, 0): self.g00}[ij]

    def blocks(self) -> dict[tuple[int, int], np.ndarray]:
        return {(1, 1): self.g11, (1, 0): self.g10, (0, 1): self.g01, (0, 0): self.g00}

    def marginal_residual(self, m, n) -> float:
        """Largest entrywise violation of the marginal and normalization constraints."""
        d = self.g11.shape[0]
        r1 = self.g11 + self.g10 - m
        r2 = self.g11 + self.g01 - n
        r3 = self.g11 + self.g10 + self.g01 + self.g00 - np.eye(d)
        return float(max(np.max(np.abs(r)) for r in (r1, r2, r3)))

    def min_eigs(self, mu: float = 0.0, a: DeformationMatrix | None = None) -> dict:
        """Minimum eigenvalue of each ``G_ij + mu a_ij I``."""
        d = self.g11.shape[0]
        out = {}
        for ij, g in self.blocks().items():
            shift = mu * a[ij] if a is not None else 0.0
            out[ij] = float(eigvalsh(g + shift * np.eye(d))[0])
        return out


def joint_from_free_block(g, m, n) -> JointCandidate:
    """All four blocks from ``G_11 = G``; the equality constraints hold exactly."""
    g, m, n = hermitian(g), hermitian(m), hermitian(n)
    d = _same_dim(g, m, n)
    return JointCandidate(g, m - g, n - g, np.eye(d) - m - n + g)


def product_joint(m, n) -> JointCandidate:
    """Joint blocks with ``G_11 = (MN + NM)/2``; a valid joint when ``[M, N] = 0``."""
    m, n = hermitian(m), hermitian(n)
    return joint_from_free_block(0.5 * (m @ n + n @ m), m, n)


def qubit_projector(theta: float) -> np.ndarray:
    """Rank-one projection ``(I + sin(theta) X + cos(theta) Z) / 2``."""
    x, _, z = PAULIS
    return 0.5 * (np.eye(2) + np.sin(theta) * x + np.cos(theta) * z)


def effect_from_bloch(alpha: float, m) -> np.ndarray:
    """Qubit effect ``(alpha I + m . sigma) / 2``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValidationError("Bloch vector must have three components")
    r = float(np.linalg.norm(m))
    if r > min(alpha, 2 - alpha) + EFFECT_ATOL:
        raise ValidationError(f"|m| = {r:.6g} exceeds min(alpha, 2 - alpha) for alpha = {alpha}")
    op = 0.5 * (alpha * np.eye(2) + sum(c * p for c, p in zip(m, PAULIS)))
    return effect(op)


def bloch(e) -> tuple[float, np.ndarray]:
    """Bloch decomposition ``(alpha, m)`` with ``alpha = tr E`` and ``m_k = tr(E sigma_k)``."""
    e = hermitian(e)
    if e.shape != (2, 2):
        raise ValidationError(f"expected a qubit operator, got shape {e.shape}")
    alpha = float(np.trace(e).real)
    m = np.array([np.trace(e @ p).real for p in PAULIS])
    return alpha, m
