"""Analytic qubit ground truth for biased-noise incompatibility.

For the sharp pair ``(P_0, P_theta)`` the least compatible noise level is the
root on ``[0, 1/2]`` of a quartic in the noise magnitude; every function here
reduces to that root, the Busch coexistence test, or closed forms derived
from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ValidationError
from .povm import DeformationMatrix, bloch, effect

ROOT_XTOL = 1e-10


def _bisect(f, lo: float, hi: float, xtol: float) -> float:
    """Root of ``f`` on ``[lo, hi]`` given ``f(lo) < 0 <= f(hi)``."""
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _pairing(alpha, m, beta, n) -> float:
    return alpha * beta - float(np.dot(m, n))


def busch_value(e, f) -> float:
    """Left side of the Busch coexistence criterion for two qubit effects.

    The pair is compatible exactly when this is nonnegative.
    """
    e, f = effect(e), effect(f)
    alpha, m = bloch(e)
    beta, n = bloch(f)
    ap, mp = 2 - alpha, -m
    bp, np_ = 2 - beta, -n
    ee = _pairing(alpha, m, alpha, m)
    epep = _pairing(ap, mp, ap, mp)
    ff = _pairing(beta, n, beta, n)
    fpfp = _pairing(bp, np_, bp, np_)
    root = math.sqrt(max(ee * epep * ff * fpfp, 0.0))
    return (root
            - _pairing(alpha, m, ap, mp) * _pairing(beta, n, bp, np_)
            + _pairing(alpha, m, bp, np_) * _pairing(ap, mp, beta, n)
            + _pairing(alpha, m, beta, n) * _pairing(ap, mp, bp, np_))


def busch_compatible(e, f, atol: float = 1e-10) -> bool:
    return busch_value(e, f) >= -atol


def compat_poly(lam: float, theta: float, b: float) -> float:
    """``[(1-l)^2 cos(theta) - l^2 b^2]^2 - 2(1-l)^2 + 1 - 2 l^2 b^2``.

    Nonnegative exactly when the ``(l, b)``-deformed pair ``(P_0, P_theta)``
    is compatible.
    """
    u = (1 - lam) ** 2
    v = lam * lam * b * b
    return (u * math.cos(theta) - v) ** 2 - 2 * u + 1 - 2 * v


def _commuting_angle(theta: float, eps: float = 1e-15) -> bool:
    return abs(math.sin(theta)) <= eps


def inoise_qubit(theta: float, b: float, xtol: float = ROOT_XTOL) -> float:
    """Least ``b``-biased noise making ``(P_0, P_theta)`` compatible.

    Returns 0 when the projections commute (``sin(theta) = 0``), including the
    maximally biased case where the limit from ``theta > 0`` would be 1/2.
    """
    if not -1.0 <= b <= 1.0:
        raise ValidationError(f"bias must lie in [-1, 1], got {b}")
    if _commuting_angle(theta):
        return 0.0
    return _bisect(lambda lam: compat_poly(lam, theta, b), 0.0, 0.5, xtol)


def inoise_unbiased_closed(theta: float) -> float:
    return 1 - (1 + abs(math.sin(theta))) ** -0.5


def inoise_max_biased_closed(theta: float) -> float:
    """Closed form at ``b = +-1`` (valid for non-commuting angles)."""
    return 1 - 1 / (1 + math.sqrt((1 + math.cos(theta)) / 2))


def imax(b: float) -> float:
    """Largest value of the ``b``-biased noise robustness over all pairs."""
    if not -1.0 <= b <= 1.0:
        raise ValidationError(f"bias must lie in [-1, 1], got {b}")
    return 1 / (2 + math.sqrt(2 * (1 - b * b)))


def chi(b: float) -> float:
    """Eigenvalue of ``I - (M - N)^2`` required for maximal incompatibility."""
    return 0.25 * (1 - imax(b)) ** -2


def theta_star(b: float) -> float:
    """Angle at which ``inoise_qubit(theta, b)`` reaches ``imax(b)``."""
    c = 0.5 * (1 - imax(b)) ** -2 - 1
    return math.acos(min(1.0, max(-1.0, c)))


def imax_inverse(lam: float) -> float:
    """The ``b >= 0`` with ``imax(b) = lam`` for ``lam`` in ``[1 - 1/sqrt 2, 1/2]``."""
    lo = imax(0.0)
    if lam < lo - 1e-15 or lam > 0.5:
        raise ValidationError(f"lambda must lie in [{lo:.6f}, 0.5], got {lam}")
    if lam >= 0.5:
        return 1.0
    if lam <= lo:
        return 0.0
    return math.sqrt(max(0.0, 1 - 0.5 * (1 / lam - 2) ** 2))


@dataclass(frozen=True)
class LinkFunction:
    """``f_a(mu) = a mu / (1 + a mu)`` mapping SDP values to noise levels."""

    a_total: float

    def __post_init__(self):
        if not self.a_total > 0:
            raise ValidationError(f"total deformation weight must be positive, got {self.a_total}")

    @classmethod
    def of(cls, a: DeformationMatrix) -> "LinkFunction":
        return cls(a.total)


def f_a(mu: float, link: LinkFunction) -> float:
    if mu < 0:
        raise ValidationError(f"mu must be nonnegative, got {mu}")
    x = link.a_total * mu
    return x / (1 + x)


def f_a_inv(lam: float, link: LinkFunction) -> float:
    if not 0.0 <= lam < 1.0:
        raise ValidationError(f"inverse defined for lambda in [0, 1), got {lam}")
    return lam / (link.a_total * (1 - lam))


def bias_of(a: DeformationMatrix) -> float:
    if a.is_zero:
        raise ValidationError("bias undefined for the zero deformation")
    return a.bias


def bias_threshold(theta: float, lam: float, xtol: float = ROOT_XTOL) -> float:
    """The ``b >= 0`` at which ``inoise_qubit(theta, b)`` equals ``lam``.

    Uses that the robustness is non-decreasing in ``|b|``. Levels below the
    unbiased value map to 0, levels at or above the ``b = 1`` value map to 1.
    """
    lo_val = inoise_qubit(theta, 0.0)
    if lam <= lo_val:
        return 0.0
    if lam >= inoise_qubit(theta, 1.0):
        return 1.0
    # tight root tolerance: the outer bisection needs a monotone inner map
    return _bisect(lambda b: inoise_qubit(theta, b, xtol=1e-14) - lam, 0.0, 1.0, xtol)


def dlambda_db(theta: float, b: float, h: float = 1e-5) -> float:
    """Central-difference derivative of ``inoise_qubit(theta, .)`` at ``b``."""
    if abs(b) + h > 1:
        raise ValidationError("finite-difference stencil leaves [-1, 1]")
    return (inoise_qubit(theta, b + h, xtol=1e-15)
            - inoise_qubit(theta, b - h, xtol=1e-15)) / (2 * h)


def dlambda_db_implicit(theta: float, b: float) -> float:
    """Derivative from implicit differentiation of the compatibility quartic."""
    lam = inoise_qubit(theta, b, xtol=1e-15)
    f = (1 - lam) ** 2 * math.cos(theta) - lam * lam * b * b
    f_pi = -(1 - lam) ** 2 - lam * lam * b * b
    num = lam ** 2 * (1 - lam) * b * (f + 1)
    den = f * f + f * lam * b * b + f_pi + lam * b * b
    return -num / den


def dlambda_db_sign(theta: float, b: float, atol: float = 1e-9) -> int:
    d = dlambda_db(theta, b)
    if abs(d) <= atol:
        return 0
    return 1 if d > 0 else -1
