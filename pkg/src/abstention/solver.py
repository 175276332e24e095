"""Exact finite-n maximization of <xi|M|xi> under a fixed abstention rate.

    maximize   xi^T M xi
    subject to |xi| = 1,  0 <= xi_j <= lambda c_j.

The SDP relaxation of this problem is tight (its optimum has rank one), so
a KKT point on the maximizing branch of the secular equation is the global
optimum.  The active-set loop below walks the coincidence set
C = {j : xi_j = lambda c_j} until primal and dual feasibility both hold.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import BOUND, FIXED, FREE
from .model import AbstentionBudget, CostMatrix, FiducialState

log = logging.getLogger(__name__)

# Tolerances
BISECT_TOL = 1e-12
KKT_TOL = 1e-8
FEAS_TOL = 1e-12
DUAL_TOL = 1e-10
SUPPORT_TOL = 1e-14


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


@dataclass
class SolveResult:
    xi: np.ndarray
    delta: float
    fidelity: float
    multiplier_b2: float
    duals: np.ndarray
    coincidence_set: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    method: str
    extra: dict = field(default_factory=dict)

    @property
    def smin(self) -> float:
        return 1.0 - self.delta


def _shifted(m: CostMatrix):
    eta = m.shift
    return np.ascontiguousarray(m.diag + eta), np.ascontiguousarray(m.couplings), eta


def top_eigenpair(m: CostMatrix) -> EigenPair:
    """Largest eigenvalue (Sturm bisection) and its non-negative eigenvector."""
    d, e, eta = _shifted(m)
    theta = kernels.top_eigenvalue(d, e)
    v = kernels.inverse_iteration(d, e, theta)
    v = np.abs(v)
    v /= np.linalg.norm(v)
    # Rayleigh quotient polish, exact for the computed vector
    rq = float(kernels.quad_form(d, e, v))
    if abs(rq - theta) < 1e-12:
        theta = rq
    return EigenPair(theta - eta, v)


def critical_abstention(c: FiducialState, star: EigenPair) -> tuple[float, bool]:
    """Smallest Q at which the top eigenvector becomes feasible.

    Returns (Q*, reachable).  If the eigenvector has weight where c_j = 0 it
    can never be reached; then Q* = 1 and reachable is False.
    """
    cc = np.asarray(c.coeffs)
    v = np.asarray(star.vector)
    support = v > SUPPORT_TOL
    if np.any(cc[support] == 0.0):
        return 1.0, False
    ratio = cc[support] ** 2 / v[support] ** 2
    return max(0.0, 1.0 - float(ratio.min())), True


def _segments(state):
    """Maximal runs of FREE indices as (start, stop, coupled)."""
    out = []
    m = len(state)
    i = 0
    while i < m:
        if state[i] != FREE:
            i += 1
            continue
        a = i
        while i < m and state[i] == FREE:
            i += 1
        coupled = (a > 0 and state[a - 1] == BOUND) or (i < m and state[i] == BOUND)
        out.append((a, i, coupled))
    return out


def _solve_fixed_set(d, e, u, state):
    """Maximizer for a fixed coincidence set: xi_C = u_C, |xi| = 1.

    Coupled free runs follow the secular equation; a run with no bound
    neighbour can only carry its own Perron vector, at b2 equal to its top
    eigenvalue, when that beats the secular root.  Returns (xi, b2, iters).
    """
    m = d.size
    xi = np.zeros(m)
    r2 = 1.0 - float(np.sum(u[state == BOUND] ** 2))
    segs = _segments(state)
    if r2 <= 0.0 or not segs:
        xi[state == BOUND] = u[state == BOUND]
        return xi, -np.inf, 0
    coupled = [s for s in segs if s[2]]
    loose = [s for s in segs if not s[2]]
    best_loose = None
    if loose:
        tops = [(kernels.top_eigenvalue(d[a:b], e[a:b - 1]), a, b) for a, b, _ in loose]
        best_loose = max(tops)
    iters = 0
    if coupled:
        b2, iters = kernels.secular_root(d, e, u, state, r2, xi)
        if best_loose is None or best_loose[0] <= b2:
            fmask = np.zeros(m, bool)
            for a, b, _ in coupled:
                fmask[a:b] = True
            nf = math.sqrt(float(np.sum(xi[fmask] ** 2)))
            if nf > 0:
                xi[fmask] *= math.sqrt(r2) / nf
            return xi, b2, iters
        theta, a, b = best_loose
        z = np.empty(m)
        kernels.free_solution(d, e, u, state, theta, xi, z, False)
        left = r2 - float(np.sum(xi[state == FREE] ** 2))
    else:
        theta, a, b = best_loose
        xi[state == BOUND] = u[state == BOUND]
        left = r2
    v = kernels.inverse_iteration(d[a:b], e[a:b - 1], theta)
    xi[a:b] = math.sqrt(max(left, 0.0)) * np.abs(v)
    return xi, theta, iters


def _duals(d, e, xi, b2, bound):
    g = kernels.tridiag_matvec(d, e, xi)
    s = np.zeros_like(xi)
    s[bound] = 2.0 * (g[bound] - b2 * xi[bound])
    return s


def kkt_residual(m: CostMatrix, c: FiducialState, budget: AbstentionBudget, result: SolveResult) -> float:
    """Largest violation among primal, dual, slackness and stationarity terms."""
    xi = np.asarray(result.xi, dtype=float)
    u = budget.lam * np.asarray(c.coeffs)
    s = np.asarray(result.duals, dtype=float)
    b2 = result.multiplier_b2
    bound = np.asarray(result.coincidence_set, dtype=bool)
    terms = [
        abs(float(np.dot(xi, xi)) - 1.0),
        float(np.max(np.maximum(0.0, xi - u))),
        float(np.max(np.maximum(0.0, -xi))),
        float(np.max(np.maximum(0.0, -s))),
        float(np.max(np.abs(s * (xi - u)))),
    ]
    grad = m.matvec(xi) - b2 * xi
    # zero-weight components are pinned at zero: their gradient is unconstrained
    free = ~bound & (np.asarray(c.coeffs) > 0)
    if np.any(free):
        terms.append(float(np.max(np.abs(grad[free]))))
    return max(terms)


def _finish(m, c, budget, xi, b2, bound, iters, method):
    delta = float(kernels.quad_form(m.diag, m.couplings, xi))
    s = np.zeros_like(xi)
    g = m.matvec(xi)
    s[bound] = 2.0 * (g[bound] - b2 * xi[bound])
    res = SolveResult(
        xi=xi,
        delta=delta,
        fidelity=0.5 * (1.0 + delta),
        multiplier_b2=float(b2),
        duals=s,
        coincidence_set=bound,
        kkt_residual=0.0,
        iterations=iters,
        converged=True,
        method=method,
    )
    res.kkt_residual = kkt_residual(m, c, budget, res)
    res.converged = res.kkt_residual <= KKT_TOL
    return res


def _zero_abstention(m, c, budget):
    cc = np.array(c.coeffs, dtype=float)
    g = m.matvec(cc)
    pos = cc > 0
    # any b2 below every ratio keeps all duals non-negative; take the largest
    b2 = float(np.min(g[pos] / cc[pos]))
    return _finish(m, c, budget, cc, b2, pos.copy(), 0, "active_set")


def solve_abstention(m: CostMatrix, c: FiducialState, budget: AbstentionBudget, *, max_outer=None, seed: int = 0) -> SolveResult:
    """Global maximizer of <xi|M|xi> on {|xi| = 1, 0 <= xi <= lambda c}.

    ``seed`` only feeds the random restarts of the projected-gradient fallback.
    """
    if not isinstance(budget, AbstentionBudget):
        budget = AbstentionBudget(budget)
    if c.n != m.n:
        raise ValueError("fiducial and matrix orders differ")
    if budget.q == 0.0:
        return _zero_abstention(m, c, budget)
    d, e, eta = _shifted(m)
    cc = np.asarray(c.coeffs, dtype=float)
    u = budget.lam * cc
    state = np.where(cc > 0.0, FREE, FIXED).astype(np.int64)
    n1 = m.n + 1
    max_outer = 10 * n1 if max_outer is None else max_outer
    seen = set()
    iters = 0
    xi = None
    b2 = 0.0
    done = False
    for outer in range(max_outer):
        iters = outer + 1
        key = state.tobytes()
        if key in seen:
            log.debug("active set revisited after %d iterations", outer)
            break
        seen.add(key)
        xi, b2, _ = _solve_fixed_set(d, e, u, state)
        free = state == FREE
        viol = np.where(free, xi - u, -np.inf)
        worst = float(viol.max()) if np.any(free) else -np.inf
        if worst > FEAS_TOL:
            state[free & (viol >= worst - 1e-14)] = BOUND
            continue
        bound = state == BOUND
        s = _duals(d, e, xi, b2, bound)
        neg = bound & (s < -DUAL_TOL)
        if np.any(neg):
            state[neg] = FREE
            continue
        done = True
        break
    if done:
        xi = np.clip(xi, 0.0, u)
        res = _finish(m, c, budget, xi, b2 - eta, state == BOUND, iters, "active_set")
        if res.converged:
            return res
    log.info("active set did not settle (n=%d, q=%.4g); using projected-gradient fallback", m.n, budget.q)
    from .oracles import oracle_projected_gradient

    res = oracle_projected_gradient(m, c, budget, restarts=3, seed=seed)
    res.iterations += iters
    return res
