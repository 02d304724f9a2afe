"""Winning probabilities in the noisy CHSH game between QP and LR.

QP picks Alice's pair of measurements; LR adds ``(lambda, b)``-noise with
``lambda <= lambda_LR``. QP wins when the noisy pair stays incompatible,
i.e. when ``I_b^noise(M, N) > lambda_LR``. The scenarios differ in who
controls or knows the bias ``b`` and the magnitude ``lambda_LR``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import minimize_scalar

from .linalg import ValidationError, commutator_norm, hermitian, is_projection
from .qubit import bias_threshold, imax, imax_inverse, inoise_qubit, theta_star

CHSH_THRESHOLD = 1 - 1 / math.sqrt(2)
FAIR_LAMBDA = 1 / (2 + math.sqrt(1.5))
MAX_RESOURCE_VALUE = 0.5 * math.pi * (math.sqrt(2) - 1)
PRIORS = ("uniform", "b-squared")

SCENARIOS = ("controlled-bias", "known-bias", "qp-bias", "unknown-bias", "unknown-both")


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-8, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, h):
        return h / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) <= 15 * tol:
            return left + right + delta / 15
        if depth >= max_depth:
            raise QuadratureError(f"no convergence on [{a:.6g}, {b:.6g}]")
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth + 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth + 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)


def _check_lambda(lam: float):
    if not 0.0 < lam <= 0.5:
        raise ValidationError(f"lambda_LR must lie in (0, 1/2], got {lam}")


def _check_prior(prior: str):
    if prior not in PRIORS:
        raise ValidationError(f"prior must be one of {PRIORS}, got {prior!r}")


@dataclass(frozen=True)
class ControlledBias:
    j_value: float
    qp_optimal_theta: float
    threshold: float
    pair_threshold: float

    def lr_wins(self, lam: float) -> bool:
        """LR (choosing ``b = 0``) destroys the chosen pair's violations."""
        return lam >= self.pair_threshold


def joint_measurability_degree(m, n) -> float:
    """``j = (1 + 2 ||[M, N]||)^(-1/2)`` for a projective pair."""
    m, n = hermitian(m), hermitian(n)
    if not (is_projection(m) and is_projection(n)):
        raise ValidationError("closed form for j needs projections")
    return (1 + 2 * commutator_norm(m, n)) ** -0.5


def scenario_controlled_bias(m, n) -> ControlledBias:
    """LR picks the bias, so ``b = 0`` is always her choice."""
    j = joint_measurability_degree(m, n)
    return ControlledBias(j, math.pi / 2, CHSH_THRESHOLD, 1 - j)


@dataclass(frozen=True)
class KnownBias:
    b: float
    qp_optimal_theta: float
    threshold: float


def scenario_known_bias(b: float) -> KnownBias:
    """QP tunes the angle to the known bias; LR wins iff ``lambda_LR > imax(b)``."""
    return KnownBias(b, theta_star(b), imax(b))


@dataclass(frozen=True)
class QPBias:
    b_choice: float
    threshold: float
    note: str


def scenario_qp_bias() -> QPBias:
    return QPBias(1.0, 0.5, "use b = +-1 with a nearly commuting pair (theta -> 0)")


@dataclass(frozen=True)
class UnknownBias:
    lambda_lr: float
    qp_optimal_theta: float
    p_qp_win: float
    prior: str


def _p_uniform(lam: float) -> float:
    if lam <= CHSH_THRESHOLD:
        return 1.0
    r = 0.5 / lam ** 2 - (1 / lam - 1) ** 2
    return 1.0 - math.sqrt(min(1.0, max(0.0, r)))


def scenario_unknown_bias(lam: float, prior: str = "uniform") -> UnknownBias:
    """QP's optimal angle and winning probability when ``b`` is random.

    With the default prior ``b`` is uniform on ``[-1, 1]`` and LR wins with
    probability ``b_lambda``; with ``prior="b-squared"`` ``b^2`` is uniform on
    ``[0, 1]`` and she wins with probability ``b_lambda^2``. The optimal
    angle is the same for both.
    """
    _check_lambda(lam)
    _check_prior(prior)
    if lam <= CHSH_THRESHOLD:
        return UnknownBias(lam, math.pi / 2, 1.0, prior)
    c = 0.5 * (1 - lam) ** -2 - 1
    theta = math.acos(min(1.0, max(-1.0, c)))
    p = _p_uniform(lam)
    if prior == "b-squared":
        p = 1 - (1 - p) ** 2
    return UnknownBias(lam, theta, p, prior)


def p_lr_win(lam: float, theta: float, prior: str = "uniform") -> float:
    """Probability that a random bias leaves the ``(P_0, P_theta)`` pair beaten by ``lam``."""
    _check_lambda(lam)
    _check_prior(prior)
    b = bias_threshold(theta, lam)
    return b if prior == "uniform" else b * b


def p_qp_win_inverse_check(lam: float) -> float:
    """``1 - imax^{-1}(lambda)``: the same probability through the bound's inverse."""
    _check_lambda(lam)
    if lam <= CHSH_THRESHOLD:
        return 1.0
    return 1.0 - imax_inverse(lam)


@dataclass
class UnknownBoth:
    theta: float | None
    p_qp_win: float
    p_max: float
    prior: str
    details: dict = field(default_factory=dict)


def _integrand(theta: float | None):
    if theta is None:
        return imax
    return lambda b: inoise_qubit(theta, b, xtol=1e-14)


def unknown_both_value(theta: float | None, prior: str = "uniform", tol: float = 1e-8) -> float:
    """Probability that uniform ``(b, lambda)`` falls under the ``I_b^noise`` curve.

    ``lambda`` is uniform on ``[0, 1/2]``. ``theta=None`` uses the largest
    value ``imax(b)`` at every ``b``, i.e. unrestricted resources.
    """
    _check_prior(prior)
    f = _integrand(theta)
    if prior == "uniform":
        # the integrand is even in b
        return 2.0 * adaptive_simpson(f, 0.0, 1.0, tol / 2)
    return 2.0 * adaptive_simpson(lambda u: f(math.sqrt(u)), 0.0, 1.0, tol / 2)


def optimal_theta_unknown_both(prior: str = "uniform", xatol: float = 1e-6) -> tuple[float, float]:
    """Numerically optimal qubit angle and its winning probability (no closed form)."""
    res = minimize_scalar(lambda t: -unknown_both_value(t, prior, tol=1e-9),
                          bounds=(1e-3, math.pi - 1e-3), method="bounded",
                          options={"xatol": xatol})
    return float(res.x), float(-res.fun)


def scenario_unknown_both(theta: float | None = None, prior: str = "uniform",
                          tol: float = 1e-8) -> UnknownBoth:
    """Winning probability for a qubit angle, or for maximal resources when ``theta`` is None."""
    if theta is not None and not 0.0 < theta < math.pi:
        raise ValidationError(f"theta must lie in (0, pi), got {theta}")
    p_max = unknown_both_value(None, prior, tol)
    p = p_max if theta is None else unknown_both_value(theta, prior, tol)
    details = {}
    if theta is None and prior == "uniform":
        details["closed_form"] = MAX_RESOURCE_VALUE
    return UnknownBoth(theta, p, p_max, prior, details)
