from __future__ import annotations

import numpy as np
import pytest

from incompat.linalg import random_unitary


def random_projection(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(d, rng)
    p = u[:, :rank] @ u[:, :rank].conj().T
    return 0.5 * (p + p.conj().T)


def random_effect(d: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(d, rng)
    w = rng.uniform(0, 1, size=d)
    e = (u * w) @ u.conj().T
    return 0.5 * (e + e.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unsharp_projection(d: int, rng: np.random.Generator) -> np.ndarray:
    """A smeared projection: usually incompatible with another one, but not projective."""
    u = rng.uniform(0.85, 1.0)
    return u * random_projection(d, d // 2, rng) + 0.5 * (1 - u) * np.eye(d)
