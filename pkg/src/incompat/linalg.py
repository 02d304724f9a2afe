"""Dense complex Hermitian linear algebra.

Operators are plain ``complex128`` numpy arrays. :func:`hermitian` is the
validating constructor used at every module boundary; the remaining helpers
assume their inputs already passed through it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-10


class ValidationError(ValueError):
    """Raised when an operator or parameter violates its contract."""


def hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return ``(a + a^H) / 2`` as a complex array, rejecting non-Hermitian input.

    The symmetrization absorbs rounding from file round-trips; a correction
    larger than ``atol`` (entrywise) means the input was not Hermitian.
    """
    h = np.array(a, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValidationError("matrix has non-finite entries")
    sym = 0.5 * (h + h.conj().T)
    if np.max(np.abs(h - sym)) > atol:
        raise ValidationError("matrix is not Hermitian")
    return sym


def _same_dim(*ops: np.ndarray) -> int:
    d = ops[0].shape[0]
    for op in ops[1:]:
        if op.shape != (d, d):
            raise ValidationError(f"dimension mismatch: {ops[0].shape} vs {op.shape}")
    return d


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _jacobi_sweeps(a: np.ndarray, max_sweeps: int, rtol: float):
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= rtol * scale:
            return a, v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = 1.0 / (abs(tau) + np.hypot(1.0, tau))
                if tau < 0:
                    t = -t
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # rot = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    raise np.linalg.LinAlgError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def _fix_phases(vecs: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > atol)
        if nz.size:
            z = col[nz[0]]
            vecs[:, k] = col * (np.conj(z) / abs(z))
    return vecs


def eig_hermitian(h, method: str = "jacobi", max_sweeps: int = 60) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Hermitian matrix (validated with :func:`hermitian`).
    method : {"jacobi", "lapack"}
        ``"jacobi"`` runs cyclic complex Jacobi rotations and is fully
        deterministic; ``"lapack"`` defers to ``numpy.linalg.eigh``.

    Returns
    -------
    Spectrum
        Ascending eigenvalues and orthonormal eigenvectors (columns), each
        eigenvector scaled so its first non-negligible entry is real positive.
    """
    a = hermitian(h)
    if method == "jacobi":
        diag, vecs = _jacobi_sweeps(a.copy(), max_sweeps, rtol=1e-15)
        w = np.real(np.diag(diag))
    elif method == "lapack":
        w, vecs = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order].copy(), _fix_phases(vecs[:, order]))


def eigvalsh(h: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of an already-validated Hermitian array (LAPACK)."""
    return np.linalg.eigvalsh(h)


def op_norm(h) -> float:
    w = eigvalsh(hermitian(h))
    return float(max(abs(w[0]), abs(w[-1])))


def min_eig(h) -> float:
    return float(eigvalsh(hermitian(h))[0])


def commutator_norm(m, n) -> float:
    """Operator norm of ``MN - NM`` for Hermitian ``M``, ``N``."""
    m, n = hermitian(m), hermitian(n)
    _same_dim(m, n)
    c = m @ n - n @ m
    return op_norm(1j * c)


def kron(a, b) -> np.ndarray:
    return np.kron(hermitian(a), hermitian(b))


def psd_check(h, tol: float = 1e-10) -> bool:
    return min_eig(h) >= -tol


def is_projection(p: np.ndarray, atol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(p @ p - p)) <= atol)


def direct_sum(*blocks) -> np.ndarray:
    dims = [np.shape(b)[0] for b in blocks]
    out = np.zeros((sum(dims), sum(dims)), dtype=complex)
    k = 0
    for b, d in zip(blocks, dims):
        out[k:k + d, k:k + d] = b
        k += d
    return out


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (x + x.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
