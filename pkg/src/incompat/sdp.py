"""Deformed joint-measurability program and its certification.

``I_a(M, N)`` is the least ``mu >= 0`` for which some joint blocks satisfy
``G_ij + mu a_ij I >= 0``. Feasibility at fixed ``mu`` is decided by the inner
problem

    maximize t  over Hermitian G
    subject to  B_ij(G) + mu a_ij I - t I >= 0,   ij in {11, 10, 01, 00},

with ``B_11 = G``, ``B_10 = M - G``, ``B_01 = N - G`` and
``B_00 = I - M - N + G``. The inner problem is solved with a primal-dual
interior-point method (HKM direction, Mehrotra centering). Its optimal value
``t*(mu)`` is concave and non-decreasing in ``mu``, so admissible values form
a half-line and the outer level is a safeguarded bisection on the root of
``t*``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import ValidationError, _same_dim, commutator_norm
from .povm import (
    DeformationMatrix,
    JointCandidate,
    deform_depolarize,
    deform_noise,
    effect,
    joint_from_free_block,
    product_joint,
    NoiseParams,
)

log = logging.getLogger(__name__)

BLOCKS = ((1, 1), (1, 0), (0, 1), (0, 0))
SIGNS = (1.0, -1.0, -1.0, 1.0)
T_TOL = 1e-8
COMMUTE_ATOL = 1e-10


class NumericalFailure(RuntimeError):
    """The interior-point iteration could not decide feasibility."""


@dataclass(eq=False)
class IncompatProgram:
    m: np.ndarray
    n: np.ndarray
    a: DeformationMatrix
    tol: float = 1e-7

    def __post_init__(self):
        self.m = effect(self.m)
        self.n = effect(self.n)
        _same_dim(self.m, self.n)
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if not isinstance(self.a, DeformationMatrix):
            self.a = DeformationMatrix.from_matrix(self.a)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def constants(self, mu: float) -> list[np.ndarray]:
        d = self.dim
        eye = np.eye(d)
        base = (np.zeros((d, d), dtype=complex), self.m, self.n, eye - self.m - self.n)
        return [c + mu * self.a[ij] * eye for c, ij in zip(base, BLOCKS)]

    def upper_bracket(self) -> tuple[float, np.ndarray]:
        """A feasible ``mu`` and free block, from an explicit joint at noise 1/2.

        At noise level 1/2 with trivial distribution ``p_i = sum_j a_ij / a``
        the blocks ``(p_j M_i + p_i N_j) / 2`` are a joint POVM; the affine
        map ``G -> (1 + mu a) G - mu a_ij I`` at ``mu = 1/a`` turns it into a
        witness for the deformed program.
        """
        a = self.a
        total = a.total
        p1 = (a.a11 + a.a01) / total
        m, n = self.m, self.n
        mu = 1.0 / total
        g11 = 0.5 * (p1 * m + p1 * n)
        return mu, (1 + mu * total) * g11 - mu * a.a11 * np.eye(self.dim)


@dataclass
class InnerResult:
    mu: float
    feasible: bool
    t: float
    t_upper: float
    g: np.ndarray
    newton_steps: int
    gap: float
    slope: float = float("nan")

    @property
    def margin(self) -> float:
        """Certified lower bound on the constraint violation when infeasible."""
        return max(0.0, -self.t_upper)


@dataclass
class IncompatResult:
    mu_star: float
    mu_lower: float
    joint: JointCandidate
    dual_lower: float
    gap: float
    status: str
    iterations: int = 0
    newton_steps: int = 0
    notes: list = field(default_factory=list)


_SIGN_STACK = np.array(SIGNS).reshape(4, 1, 1)


def _herm(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def _max_step(z: np.ndarray, dz: np.ndarray) -> float:
    """Largest ``alpha`` keeping every block of ``z + alpha dz`` positive semidefinite."""
    try:
        linv = np.linalg.inv(np.linalg.cholesky(z))
    except np.linalg.LinAlgError:
        # rounding pushed an eigenvalue to ~0: use the clipped inverse square root
        w, v = np.linalg.eigh(z)
        w = np.maximum(w, np.finfo(float).tiny)
        linv = (v / np.sqrt(w)[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
    w = np.linalg.eigvalsh(_herm(linv @ dz @ np.conj(np.swapaxes(linv, 1, 2))))
    lo = float(w.min())
    return math.inf if lo >= 0 else -1.0 / lo


def _direction(x, z, zinv, rhs_g, rhs_t):
    """Solve the HKM Newton system for ``(dG, dt)``.

    ``sum_k sym(X_k dG Z_k^-1) - dt sum_k s_k sym(X_k Z_k^-1) = rhs_g`` and
    ``-sum_k s_k tr(Z_k^-1 X_k dG) + dt sum_k tr(X_k Z_k^-1) = rhs_t``.
    """
    d = x.shape[1]
    xt = np.swapaxes(x, 1, 2)
    zit = np.swapaxes(zinv, 1, 2)
    # row-major vec: vec(A D B) = kron(A, B^T) vec(D)
    op = 0.5 * (np.einsum("bik,bjl->ijkl", x, zit) + np.einsum("bik,bjl->ijkl", zinv, xt))
    op = op.reshape(d * d, d * d)
    xz = x @ zinv
    u = np.sum(_SIGN_STACK * _herm(xz), axis=0)
    v = np.sum(_SIGN_STACK * (zinv @ x), axis=0)
    c = float(np.sum(np.real(np.trace(xz, axis1=1, axis2=2))))
    rhs = np.stack([rhs_g.reshape(-1), u.reshape(-1)], axis=1)
    try:
        sol = np.linalg.solve(op, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(op, rhs, rcond=None)[0]
    p, q = sol[:, 0], sol[:, 1]
    # dG = p + dt q ; tr(V dG) = sum_ij V_ji dG_ij
    vv = v.T.reshape(-1)
    dt = (rhs_t + float(np.real(vv @ p))) / (c - float(np.real(vv @ q)))
    dg = (p + dt * q).reshape(d, d)
    return _herm(dg), dt


def max_margin(prog: IncompatProgram, mu: float, g0=None, *, decide: bool = True,
               t_tol: float = T_TOL, max_iter: int = 200, gap_floor: float = 1e-12,
               ) -> InnerResult:
    """Solve the inner max-``t`` problem at deformation ``mu``.

    Primal-dual path following: the slack blocks ``Z_k`` stay strictly
    feasible by construction, the dual blocks ``X_k`` start at ``I / 4d``.
    With ``decide=True`` iteration stops once the comparison of the optimal
    ``t`` with ``-t_tol`` is settled; otherwise it runs until the duality gap
    falls below ``gap_floor`` (relative to the problem scale, which is O(1)).
    """
    d = prog.dim
    nbar = 4 * d
    eye = np.eye(d)
    consts = np.stack(prog.constants(mu))
    g = 0.25 * (prog.m + prog.n) if g0 is None else _herm(np.asarray(g0, dtype=complex))
    t = min(np.linalg.eigvalsh(c + s * g)[0] for c, s in zip(consts, SIGNS)) - 0.5
    x = np.broadcast_to(eye / nbar, (4, d, d)).astype(complex)
    t_upper = math.inf
    stalls = 0
    last = None
    for it in range(1, max_iter + 1):
        z = _herm(consts + _SIGN_STACK * g - t * eye)
        try:
            np.linalg.cholesky(z)
            zinv = _herm(np.linalg.inv(z))
        except np.linalg.LinAlgError:
            # a slack block lost definiteness to rounding at the boundary
            if last is None or last[3] > 1e3 * gap_floor:
                raise NumericalFailure(f"slack lost definiteness at mu={mu:.6g}") from None
            g, t, x, gap = last
            break
        gap = float(np.sum(np.real(np.einsum("bij,bji->b", x, z))))
        res_g = np.sum(_SIGN_STACK * x, axis=0)
        res_t = float(np.sum(np.real(np.trace(x, axis1=1, axis2=2)))) - 1.0
        dual_res = float(np.max(np.abs(res_g))) + abs(res_t)
        if dual_res < 1e-6:
            # weak duality with the dual residual charged against |G|
            scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(g)))))
            t_upper = min(t_upper, t + gap + d * scale * dual_res)
        if decide and t >= -t_tol:
            break
        if decide and t_upper < -t_tol:
            break
        if dual_res < 1e-6:
            last = (g, t, x, gap)
        if gap < gap_floor and dual_res < 1e-6:
            break
        if stalls >= 3 and gap < 1e3 * gap_floor:
            break
        nu = gap / nbar
        # predictor (sigma = 0), then corrector with Mehrotra's sigma
        sigma = 0.0
        for stage in range(2):
            rhs_g = sigma * nu * np.sum(_SIGN_STACK * zinv, axis=0)
            rhs_t = 1.0 - sigma * nu * float(np.sum(np.real(np.trace(zinv, axis1=1, axis2=2))))
            dg, dt = _direction(x, z, zinv, rhs_g, rhs_t)
            dz = _SIGN_STACK * dg - dt * eye
            dx = _herm(sigma * nu * zinv - x - x @ dz @ zinv)
            ap = min(1.0, _max_step(z, dz))
            ad = min(1.0, _max_step(x, dx))
            if stage == 0:
                gap_aff = float(np.sum(np.real(np.einsum(
                    "bij,bji->b", x + ad * dx, z + ap * dz))))
                sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3
        ap = min(1.0, 0.95 * _max_step(z, dz))
        ad = min(1.0, 0.95 * _max_step(x, dx))
        g = g + ap * dg
        t = t + ap * dt
        x = _herm(x + ad * dx)
        stalls = stalls + 1 if ad < 1e-2 else 0
    else:
        raise NumericalFailure(
            f"no convergence at mu={mu:.6g} after {max_iter} iterations "
            f"(t={t:.3e}, upper={t_upper:.3e})")
    traces = np.real(np.trace(x, axis1=1, axis2=2))
    weights = np.array([prog.a[ij] for ij in BLOCKS])
    slope_mu = float(weights @ traces / traces.sum())
    return InnerResult(mu, t >= -t_tol, t, t_upper, g, it, gap, slope_mu)


@dataclass
class Feasibility:
    feasible: bool
    joint: JointCandidate | None
    margin: float
    t: float
    inner: InnerResult


def feasible_at(mu: float, prog: IncompatProgram, g0=None) -> Feasibility:
    """Decide whether ``mu`` is admissible, returning a witness or a violation margin."""
    if mu < 0:
        raise ValidationError(f"mu must be nonnegative, got {mu}")
    res = max_margin(prog, mu, g0)
    if res.feasible:
        joint = joint_from_free_block(res.g, prog.m, prog.n)
        return Feasibility(True, joint, 0.0, res.t, res)
    return Feasibility(False, None, res.margin, res.t, res)


def _commuting_zero(prog: IncompatProgram) -> JointCandidate | None:
    if commutator_norm(prog.m, prog.n) >= COMMUTE_ATOL:
        return None
    joint = product_joint(prog.m, prog.n)
    if min(joint.min_eigs().values()) >= -prog.tol:
        return joint
    return None


def _margin_exact(prog: IncompatProgram, mu: float, g0) -> InnerResult:
    return max_margin(prog, mu, g0, decide=False)


def _admissible(res: InnerResult) -> bool:
    # past the root t* can sit exactly at 0 (no strict interior), so compare
    # against the solver's own accuracy rather than a fixed tolerance
    return res.t >= -max(1e-11, 10 * res.gap)


def _bracket_root(prog: IncompatProgram, lo: InnerResult, hi_mu: float, hi_g: np.ndarray,
                  max_iter: int):
    """Shrink ``[lo, hi]`` around the root of the concave margin ``t*(mu)``.

    Each round proposes a Newton step from the infeasible end (the tangent
    of a concave function overestimates it, so the step stays infeasible)
    and a secant point (the chord underestimates it, so that point is
    feasible); both are nudged outward by ``tol / 4``. A round that fails to
    halve the bracket falls back to the midpoint.
    """
    tol = prog.tol
    hi = _margin_exact(prog, hi_mu, hi_g)
    steps = lo.newton_steps + hi.newton_steps
    evals = 2
    if not _admissible(hi):
        # explicit witness is feasible in exact arithmetic; keep it as the bracket end
        hi = InnerResult(hi_mu, True, 0.0, hi.t_upper, hi_g, hi.newton_steps, 0.0, hi.slope)
    for _ in range(max_iter):
        width = hi.mu - lo.mu
        if width <= tol:
            break
        cands = []
        if lo.slope > 0:
            cands.append(lo.mu - lo.t / lo.slope - 0.25 * tol)
        if hi.t > lo.t:
            cands.append(lo.mu - lo.t * width / (hi.t - lo.t) + 0.25 * tol)
        cands = [c for c in cands if lo.mu < c < hi.mu]
        if not cands:
            cands = [0.5 * (lo.mu + hi.mu)]
        for c in cands:
            if not lo.mu < c < hi.mu:
                continue
            res = _margin_exact(prog, c, hi.g)
            log.debug("mu=%.12f t=%.3e slope=%.3e gap=%.1e", c, res.t, res.slope, res.gap)
            steps += res.newton_steps
            evals += 1
            if _admissible(res):
                hi = res
            else:
                lo = res
        if hi.mu - lo.mu > 0.5 * width:
            mid = 0.5 * (lo.mu + hi.mu)
            res = _margin_exact(prog, mid, hi.g)
            steps += res.newton_steps
            evals += 1
            if _admissible(res):
                hi = res
            else:
                lo = res
    return lo, hi, evals, steps


def solve_incompat(prog: IncompatProgram, *, dual: bool = True, dual_restarts: int = 8,
                   dual_sweeps: int = 200, seed: int = 0, max_iter: int = 200) -> IncompatResult:
    """Compute ``I_a(M, N)`` on the admissible half-line ``[mu*, inf)``.

    The bracket starts at ``[0, 1/a]`` (the upper end has an explicit joint)
    and is shrunk to width ``tol``; ``mu_star`` is the feasible end. The dual
    lower bound comes from the scaled-CHSH seesaw
    (:func:`incompat.chsh.dual_value_lower`), and the status is
    ``"optimal"`` when it meets ``mu_star`` within ``10 * tol``.
    """
    if prog.a.is_zero:
        raise ValidationError("deformation matrix must have a positive entry")
    tol = prog.tol
    joint0 = _commuting_zero(prog)
    if joint0 is not None:
        return IncompatResult(0.0, 0.0, joint0, 0.0, 0.0, "optimal",
                              notes=["commuting pair: product joint"])
    try:
        at_zero = _margin_exact(prog, 0.0, None)
        if _admissible(at_zero):
            joint = joint_from_free_block(at_zero.g, prog.m, prog.n)
            lo = hi = at_zero
            evals, steps = 1, at_zero.newton_steps
        else:
            hi_mu, hi_g = prog.upper_bracket()
            lo, hi, evals, steps = _bracket_root(prog, at_zero, hi_mu, hi_g, max_iter)
            joint = joint_from_free_block(hi.g, prog.m, prog.n)
    except NumericalFailure as exc:
        log.warning("inner solve failed: %s", exc)
        hi_mu, hi_g = prog.upper_bracket()
        return IncompatResult(hi_mu, 0.0, joint_from_free_block(hi_g, prog.m, prog.n),
                              float("nan"), float("nan"), "numerical-failure", notes=[str(exc)])
    result = IncompatResult(hi.mu, lo.mu, joint, float("nan"), float("nan"), "feasible-only",
                            evals, steps)
    if hi.mu - lo.mu > tol:
        result.status = "numerical-failure"
        result.notes.append(f"bracket width {hi.mu - lo.mu:.3e} after {max_iter} rounds")
        return result
    if dual:
        from .chsh import dual_value_lower

        lower = dual_value_lower(prog.m, prog.n, prog.a, iters=dual_sweeps,
                                 restarts=dual_restarts, seed=seed)
        # mu >= 0 is itself a lower bound; the seesaw may return a negative ratio
        lower = max(lower, 0.0)
        result.dual_lower = lower
        result.gap = hi.mu - lower
        if result.gap <= 10 * tol:
            result.status = "optimal"
    return result


def inoise_sdp(m, n, b: float, tol: float = 1e-7, **kw) -> float:
    """``I_b^noise`` through the SDP value with the diagonal deformation for ``b``."""
    a = DeformationMatrix.from_bias(b)
    res = solve_incompat(IncompatProgram(m, n, a, tol), **kw)
    x = a.total * res.mu_star
    return x / (1 + x)


def _compatible(m, n) -> bool:
    prog = IncompatProgram(m, n, DeformationMatrix.from_bias(0.0))
    if _commuting_zero(prog) is not None:
        return True
    return max_margin(prog, 0.0).feasible


def _bisect_noise(deform, m, n, tol: float, samples: int = 0):
    lo, hi = 0.0, 1.0
    monotone = True
    if samples:
        grid = np.linspace(0.0, 1.0, samples + 1)
        flags = [_compatible(deform(m, lam), deform(n, lam)) for lam in grid]
        first = flags.index(True)
        if not all(flags[first:]):
            monotone = False
        lo = grid[first - 1] if first > 0 else 0.0
        hi = grid[first]
        if first == 0:
            return 0.0, monotone
    elif _compatible(m, n):
        return 0.0, monotone
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _compatible(deform(m, mid), deform(n, mid)):
            hi = mid
        else:
            lo = mid
    return hi, monotone


def inoise_direct(m, n, b: float, tol: float = 1e-7) -> float:
    """``I_b^noise`` by bisecting compatibility of the noisy pair over ``lambda``.

    Independent of the deformation map: every probe is a plain feasibility
    problem at ``mu = 0`` on the deformed effects.
    """
    m, n = effect(m), effect(n)
    value, _ = _bisect_noise(lambda e, lam: deform_noise(e, NoiseParams(lam, b)), m, n, tol)
    return value


def solve_steer(m, n, tol: float = 1e-7, samples: int = 8) -> float:
    """Least depolarizing-noise weight rendering the pair compatible.

    Compatibility is probed on a coarse ``lambda`` grid first; if the probes
    are not monotone a warning is emitted and bisection proceeds on the first
    sign change.
    """
    m, n = effect(m), effect(n)
    _same_dim(m, n)
    value, monotone = _bisect_noise(deform_depolarize, m, n, tol, samples)
    if not monotone:
        warnings.warn("compatibility under depolarizing noise was not monotone on the probe grid",
                      RuntimeWarning, stacklevel=2)
    return value


@dataclass
class CertificateReport:
    marginal_residual: float
    min_eigs: dict
    gap: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def certify(result: IncompatResult, prog: IncompatProgram) -> CertificateReport:
    """Recheck the primal witness and duality gap of a solved program."""
    tol = prog.tol
    joint = result.joint
    violations = []
    resid = joint.marginal_residual(prog.m, prog.n)
    if resid > 10 * tol:
        violations.append(f"marginal residual {resid:.3e}")
    eigs = joint.min_eigs(result.mu_star, prog.a)
    for ij, v in eigs.items():
        if v < -10 * tol:
            violations.append(f"block {ij[0]}{ij[1]} min eigenvalue {v:.3e}")
    gap = result.mu_star - result.dual_lower if math.isfinite(result.dual_lower) else float("nan")
    if not math.isfinite(gap):
        violations.append("no dual bound")
    elif gap > 10 * tol:
        violations.append(f"duality gap {gap:.3e}")
    elif gap < -10 * tol:
        violations.append(f"dual bound exceeds primal value by {-gap:.3e}")
    return CertificateReport(resid, eigs, gap, violations)
