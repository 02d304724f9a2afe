"""Bell operators and seesaw lower bounds for the deformed program.

``I_a(M, N)`` equals the supremum over states ``psi`` on ``C^d (x) C^d`` and
Bob observables ``-I <= B_1, B_2 <= I`` of

    <psi| (Bell - I) / 2 |psi>  /  <psi| I (x) S_a |psi>,

with Alice's observables fixed to ``A_1 = I - 2N`` and ``A_2 = 2M - I``.
Every feasible point gives a lower bound on ``I_a``; the seesaw here climbs
that ratio by alternating exact maximizations over ``psi``, ``B_1`` and
``B_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import ValidationError, _same_dim, hermitian, random_hermitian, random_unitary
from .povm import DeformationMatrix, effect

DEN_FLOOR = 1e-12
DINKELBACH_TOL = 1e-10
DINKELBACH_MAX = 50
DEGENERATE_SHIFT = 1e-11


def _check_observable(x, name: str, atol: float = 1e-9) -> np.ndarray:
    x = hermitian(x)
    w = np.linalg.eigvalsh(x)
    if w[0] < -1 - atol or w[-1] > 1 + atol:
        raise ValidationError(f"{name} must satisfy -I <= {name} <= I")
    return x


@dataclass
class BellSetting:
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.a1 = _check_observable(self.a1, "A1")
        self.a2 = _check_observable(self.a2, "A2")
        self.b1 = _check_observable(self.b1, "B1")
        self.b2 = _check_observable(self.b2, "B2")
        _same_dim(self.a1, self.a2)
        _same_dim(self.b1, self.b2)
        self.psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        if self.psi.size != self.a1.shape[0] * self.b1.shape[0]:
            raise ValidationError("state dimension does not match dA * dB")
        if abs(np.linalg.norm(self.psi) - 1) > 1e-12:
            raise ValidationError("state must be normalized")

    @classmethod
    def from_pair(cls, m, n, b1, b2, psi) -> "BellSetting":
        """Alice's observables ``A_1 = I - 2N``, ``A_2 = 2M - I`` from a pair of effects."""
        m, n = effect(m), effect(n)
        eye = np.eye(m.shape[0])
        return cls(eye - 2 * n, 2 * m - eye, b1, b2, psi)

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.vdot(self.psi, op @ self.psi)))


def bell_operator(s: BellSetting) -> np.ndarray:
    """``(A_1 (x) (B_1 + B_2) + A_2 (x) (B_1 - B_2)) / 2``."""
    return 0.5 * (np.kron(s.a1, s.b1 + s.b2) + np.kron(s.a2, s.b1 - s.b2))


def s_operator(b2, a: DeformationMatrix) -> np.ndarray:
    """``(a00 (I - B_2) + a11 (I + B_2) + 2 a01 I) / 2``."""
    b2 = _check_observable(b2, "B2")
    eye = np.eye(b2.shape[0])
    return 0.5 * (a.a00 * (eye - b2) + a.a11 * (eye + b2) + 2 * a.a01 * eye)


def scaled_chsh_ratio(s: BellSetting, a: DeformationMatrix) -> float:
    """The dual objective at a fixed setting; ``nan`` if the denominator vanishes."""
    da = s.a1.shape[0]
    num = 0.5 * (s.expect(bell_operator(s)) - 1.0)
    den = s.expect(np.kron(np.eye(da), s_operator(s.b2, a)))
    if den < DEN_FLOOR:
        return float("nan")
    return num / den


def _sign_op(k: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(k)
    return (v * np.where(w >= 0, 1.0, -1.0)) @ v.conj().T


def _random_reflection(d: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(d, rng)
    signs = rng.choice([-1.0, 1.0], size=d)
    return (u * signs) @ u.conj().T


class _Seesaw:
    """State for one alternating-maximization run with Alice's pair fixed."""

    def __init__(self, m, n, a: DeformationMatrix):
        self.d = m.shape[0]
        eye = np.eye(self.d)
        self.a = a
        self.a1 = eye - 2 * n
        self.a2 = 2 * m - eye

    def _rho(self, psi):
        x = psi.reshape(self.d, self.d)
        return x, x.T @ x.conj()

    def _reduced(self, x, op_a):
        # Tr_A[(op_a (x) I) |psi><psi|], an operator on Bob's factor
        return (op_a @ x).T @ x.conj()

    def ratio(self, psi, b1, b2):
        x, rho_b = self._rho(psi)
        k1 = self._reduced(x, self.a1 + self.a2)
        k2 = self._reduced(x, self.a1 - self.a2)
        num = 0.25 * float(np.real(np.trace(k1 @ b1) + np.trace(k2 @ b2))) - 0.5
        den = 0.5 * (self.a.total + (self.a.a11 - self.a.a00) * float(np.real(np.trace(rho_b @ b2))))
        return num, den

    def psi_step(self, b1, b2):
        """Top generalized eigenvector of ``(X, Y)`` on the support of ``Y``."""
        d = self.d
        eye = np.eye(d)
        x = 0.5 * (0.5 * (np.kron(self.a1, b1 + b2) + np.kron(self.a2, b1 - b2)) - np.eye(d * d))
        s = s_operator(b2, self.a)
        w, v = np.linalg.eigh(s)
        keep = w > DEN_FLOOR * max(1.0, float(w[-1]))
        if not keep.any():
            return None
        # Y = I (x) S has eigenvectors e_i (x) v_k; project onto the kept ones
        vk = v[:, keep] / np.sqrt(w[keep])
        t = np.kron(eye, vk)
        h = t.conj().T @ x @ t
        h = 0.5 * (h + h.conj().T)
        _, vecs = np.linalg.eigh(h)
        psi = t @ vecs[:, -1]
        return psi / np.linalg.norm(psi)

    def b1_step(self, psi):
        x, _ = self._rho(psi)
        return _sign_op(self._reduced(x, self.a1 + self.a2))

    def b2_step(self, psi, b1, b2):
        x, rho_b = self._rho(psi)
        k1 = self._reduced(x, self.a1 + self.a2)
        k2 = self._reduced(x, self.a1 - self.a2)
        c1 = 0.25 * float(np.real(np.trace(k1 @ b1))) - 0.5
        e = 0.5 * (self.a.a11 - self.a.a00)
        d0 = 0.5 * self.a.total

        def parts(b):
            return (c1 + 0.25 * float(np.real(np.trace(k2 @ b))),
                    d0 + e * float(np.real(np.trace(rho_b @ b))))

        num, den = parts(b2)
        if den < DEN_FLOOR:
            return b2
        r = num / den
        for _ in range(DINKELBACH_MAX):
            cand = _sign_op(0.25 * k2 - r * e * rho_b)
            cn, cd = parts(cand)
            if cd < DEN_FLOOR:
                break
            new_r = cn / cd
            if new_r <= r + DINKELBACH_TOL:
                if new_r >= r:
                    b2 = cand
                break
            b2, r = cand, new_r
        return b2


def _regularized(a: DeformationMatrix) -> DeformationMatrix:
    """Lift a zero diagonal entry when ``S_a`` can be singular.

    With ``a01 = 0`` and ``a00 = 0`` (or ``a11 = 0``) the ``psi``-step is
    confined to an eigenspace of a reflection ``B_2`` and the seesaw stalls
    at product states. ``I_a`` is non-increasing in every entry of ``a``, so
    the lifted program still yields a lower bound, off by ``O(shift)``.
    """
    if a.a01 > 0 or min(a.a00, a.a11) > 0:
        return a
    eps = DEGENERATE_SHIFT * a.total
    return DeformationMatrix(max(a.a00, eps), a.a01, max(a.a11, eps))


@dataclass
class SeesawResult:
    value: float
    setting: BellSetting | None
    history: list = field(default_factory=list)
    restarts: int = 0


def seesaw(m, n, a: DeformationMatrix, iters: int = 200, restarts: int = 8, seed: int = 0,
           stall_tol: float = 1e-13) -> SeesawResult:
    """Best scaled-CHSH ratio found by seeded seesaw restarts.

    ``history`` holds the per-sweep objective of the best run; it is
    non-decreasing by construction since every step is an exact maximization
    of the ratio over one block with the others fixed.
    """
    m, n = effect(m), effect(n)
    _same_dim(m, n)
    if not isinstance(a, DeformationMatrix):
        a = DeformationMatrix.from_matrix(a)
    if a.is_zero:
        raise ValidationError("deformation matrix must have a positive entry")
    run = _Seesaw(m, n, _regularized(a))
    d = run.d
    best = SeesawResult(-math.inf, None)
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        b1 = _random_reflection(d, rng)
        b2 = _random_reflection(d, rng)
        hist = []
        psi = None
        for _ in range(iters):
            new_psi = run.psi_step(b1, b2)
            if new_psi is None:
                break
            psi = new_psi
            b1 = run.b1_step(psi)
            b2 = run.b2_step(psi, b1, b2)
            num, den = run.ratio(psi, b1, b2)
            if den < DEN_FLOOR:
                break
            hist.append(num / den)
            if len(hist) > 1 and hist[-1] - hist[-2] <= stall_tol:
                break
        if hist and hist[-1] > best.value:
            setting = BellSetting(run.a1, run.a2, b1, b2, psi)
            best = SeesawResult(hist[-1], setting, hist, k + 1)
    if best.setting is None:
        raise ValidationError("denominator vanished on every restart: no usable direction")
    best.restarts = restarts
    return best


def dual_value_lower(m, n, a: DeformationMatrix, iters: int = 200, restarts: int = 8,
                     seed: int = 0) -> float:
    """Lower bound on ``I_a(M, N)`` from the seesaw over the scaled CHSH ratio."""
    return seesaw(m, n, a, iters=iters, restarts=restarts, seed=seed).value


def tsirelson_bound(b: float) -> float:
    """``1 / (1 + sqrt(2 (1 - b^2)))``, the largest value of ``<Bell - I> / <I (x) (I + b B_2)>``."""
    if not -1.0 <= b <= 1.0:
        raise ValidationError(f"bias must lie in [-1, 1], got {b}")
    return 1.0 / (1.0 + math.sqrt(2.0 * (1.0 - b * b)))


def biased_ratio(s: BellSetting, b: float) -> float:
    """``<Bell - I> / <I (x) (I + b B_2)>``; ``nan`` when the denominator vanishes."""
    da, db = s.a1.shape[0], s.b1.shape[0]
    num = s.expect(bell_operator(s)) - 1.0
    den = s.expect(np.kron(np.eye(da), np.eye(db) + b * s.b2))
    if den < DEN_FLOOR:
        return float("nan")
    return num / den


def _random_contraction(d: int, rng: np.random.Generator) -> np.ndarray:
    h = random_hermitian(d, rng)
    return h / max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(h)))))


def random_setting(da: int, db: int, rng: np.random.Generator) -> BellSetting:
    """Random observables (contractions or reflections) and a random pure state."""
    def obs(d):
        return _random_reflection(d, rng) if rng.random() < 0.5 else _random_contraction(d, rng)

    psi = rng.normal(size=da * db) + 1j * rng.normal(size=da * db)
    return BellSetting(obs(da), obs(da), obs(db), obs(db), psi / np.linalg.norm(psi))


@dataclass
class TsirelsonReport:
    b_values: list
    bounds: list
    max_random: list
    max_seesaw: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def tsirelson_check(samples: int = 200, seed: int = 0, b_values=None, dims=(2, 4),
                    atol: float = 1e-8) -> TsirelsonReport:
    """Check the biased Tsirelson bound on random settings and seesaw optima.

    For each ``b`` the random sweep draws ``samples`` settings per local
    dimension; the seesaw run uses the qubit pair at the angle where the
    bound is tight (a near-commuting angle at ``|b| = 1``), so ``max_seesaw``
    should reach or approach the bound.
    """
    from .povm import qubit_projector
    from .qubit import theta_star

    if b_values is None:
        b_values = [-1.0, -0.6, -0.3, 0.0, 0.3, 0.6, 1.0]
    rng = np.random.default_rng(seed)
    report = TsirelsonReport([], [], [], [], [])
    for b in b_values:
        bound = tsirelson_bound(b)
        best = -math.inf
        for d in dims:
            for _ in range(samples):
                r = biased_ratio(random_setting(d, d, rng), b)
                if math.isfinite(r):
                    best = max(best, r)
        # at |b| = 1 the optimal angle degenerates to 0; approach it instead
        th = max(theta_star(b), 1e-3)
        ss = seesaw(qubit_projector(0.0), qubit_projector(th), DeformationMatrix.from_bias(b),
                    seed=seed)
        s_best = biased_ratio(ss.setting, b)
        for label, v in (("random", best), ("seesaw", s_best)):
            if math.isfinite(v) and v > bound + atol:
                report.violations.append(f"b={b}: {label} ratio {v:.12g} exceeds {bound:.12g}")
        report.b_values.append(b)
        report.bounds.append(bound)
        report.max_random.append(best)
        report.max_seesaw.append(s_best)
    return report
