"""Independent reference solvers used to cross-check the active-set solver.

``oracle_enumerate`` tries every coincidence set with dense numpy linear
algebra and scipy root finding; it shares no code path with the tridiagonal
kernels.  ``oracle_projected_gradient`` is a plain first-order method.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .model import AbstentionBudget, CostMatrix, FiducialState
from .solver import SolveResult, _finish, top_eigenpair

PG_MAXIT = 100_000
PG_TOL = 1e-12
ENUM_MAX_N = 12


def project_box_sphere(x, u) -> np.ndarray:
    """Euclidean projection of x >= 0 onto {0 <= xi <= u, |xi| = 1}."""
    x = np.ascontiguousarray(x, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if x.shape != u.shape:
        raise ValueError("x and u must have the same shape")
    if np.any(x < 0) or np.any(u < 0):
        raise ValueError("x and u must be non-negative")
    out = np.empty_like(x)
    if kernels.project_box_sphere(x, u, out) != 0:
        raise ValueError("box and unit sphere do not intersect (|u| < 1)")
    return out


def _estimate_multipliers(m, u, xi):
    g = m.matvec(xi)
    bound = xi >= u - 1e-9
    free = ~bound & (u > 0)
    nf = float(np.dot(xi[free], xi[free]))
    b2 = float(np.dot(xi[free], g[free]) / nf) if nf > 0 else float(np.dot(xi, g))
    return b2, bound & (u > 0)


def oracle_projected_gradient(m: CostMatrix, c: FiducialState, budget: AbstentionBudget, restarts: int = 1, seed: int = 0, *, maxit: int = PG_MAXIT) -> SolveResult:
    """Multi-start projected gradient ascent; returns the best point found."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not isinstance(budget, AbstentionBudget):
        budget = AbstentionBudget(budget)
    cc = np.asarray(c.coeffs, dtype=float)
    u = np.ascontiguousarray(budget.lam * cc)
    eta = m.shift
    d = np.ascontiguousarray(m.diag + eta)
    e = np.ascontiguousarray(m.couplings)
    step = 1.0 / (2.0 * float(np.max(np.abs(m.dense()).sum(axis=1))))
    rng = np.random.default_rng(seed)
    starts = [cc.copy(), np.minimum(top_eigenpair(m).vector, u)]
    starts += [rng.random(cc.size) * (cc > 0) for _ in range(restarts)]
    best = None
    total = 0
    for x0 in starts:
        if not np.any(x0 > 0):
            x0 = cc.copy()
        xi, it = kernels.projected_gradient(d, e, u, np.ascontiguousarray(x0), step, maxit, PG_TOL)
        total += it
        val = float(kernels.quad_form(m.diag, m.couplings, xi))
        if best is None or val > best[0]:
            best = (val, xi.copy())
    xi = best[1]
    b2, bound = _estimate_multipliers(m, u, xi)
    return _finish(m, c, budget, xi, b2, bound, total, "projected_gradient")


def _branch_solution(Mff, g, r2):
    """Maximizing-branch solution of (b2 I - Mff) x = g with |x|^2 = r2."""
    theta, V = np.linalg.eigh(Mff)
    gt = V.T @ g
    top = theta[-1]

    def excess(b2):
        with np.errstate(over="ignore", divide="ignore"):
            return float(np.sum(gt**2 / (b2 - theta) ** 2)) - r2

    hi = top + 1.0
    while excess(hi) > 0:
        hi = top + 2.0 * (hi - top)
    span = hi - top
    # walk down until the norm exceeds r2 (pole at the top eigenvalue)
    while excess(top + span) < 0 and span > 1e-300:
        span *= 0.5
    if excess(top + span) < 0:
        return None
    lo = top + span
    b2 = brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    x = V @ (gt / (b2 - theta))
    return b2, x


def oracle_enumerate(m: CostMatrix, c: FiducialState, budget: AbstentionBudget) -> SolveResult:
    """Best KKT point over all 2^(n+1) coincidence sets (n <= 12)."""
    if m.n > ENUM_MAX_N:
        raise ValueError(f"enumeration refused for n = {m.n} > {ENUM_MAX_N}")
    if not isinstance(budget, AbstentionBudget):
        budget = AbstentionBudget(budget)
    cc = np.asarray(c.coeffs, dtype=float)
    u = budget.lam * cc
    M = m.dense()
    n1 = m.n + 1
    forced = cc == 0.0
    tol = 1e-9
    best = None
    candidates = [i for i in range(n1) if not forced[i]]
    for r in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            C = np.zeros(n1, bool)
            C[list(combo)] = True
            F = ~C & ~forced
            r2 = 1.0 - float(np.sum(u[C] ** 2))
            if r2 < -1e-12:
                continue
            xi = np.zeros(n1)
            xi[C] = u[C]
            options = []
            if not np.any(F):
                if abs(r2) > 1e-10:
                    continue
                g = M @ xi
                pos = C
                b2 = float(np.min(g[pos] / xi[pos])) if np.any(pos) else 0.0
                options.append((b2, xi.copy()))
            else:
                fi = np.flatnonzero(F)
                Mff = M[np.ix_(fi, fi)]
                g = M[np.ix_(fi, np.flatnonzero(C))] @ u[C]
                options += _enumerate_free(Mff, g, max(r2, 0.0), fi, xi)
            for b2, x in options:
                if np.any(x < -tol) or np.any(x > u + tol):
                    continue
                s = 2.0 * (M @ x - b2 * x)
                if np.any(s[C] < -1e-7):
                    continue
                val = float(x @ M @ x)
                if best is None or val > best[0] + 1e-13:
                    best = (val, np.clip(x, 0.0, u), b2, C.copy())
    if best is None:  # pragma: no cover - the global optimum is always a KKT point
        raise RuntimeError("no KKT point found")
    _, xi, b2, C = best
    return _finish(m, c, budget, xi, b2, C, 2 ** len(candidates), "enumeration")


def _enumerate_free(Mff, g, r2, fi, base):
    """KKT candidates for the free block: secular branch plus eigen branches."""
    out = []
    theta, V = np.linalg.eigh(Mff)
    top = theta[-1]
    gt = V.T @ g
    topmask = np.abs(theta - top) < 1e-12
    if np.linalg.norm(gt[topmask]) > 1e-12 * max(1.0, np.linalg.norm(g)):
        sol = _branch_solution(Mff, g, r2)
        if sol is not None:
            b2, x = sol
            full = base.copy()
            full[fi] = x
            out.append((b2, full))
        return out
    # g has no weight on the top eigenspace: either the "easy" branch with
    # b2 above the top eigenvalue of the coupled part, or b2 at an eigenvalue
    # whose eigenvector absorbs the leftover norm.
    others = ~topmask
    if np.any(gt != 0):
        sub = np.flatnonzero(np.abs(gt) > 0)
        theta_c = theta[sub]
        gc = gt[sub]

        def excess(b2):
            with np.errstate(over="ignore", divide="ignore"):
                return float(np.sum(gc**2 / (b2 - theta_c) ** 2)) - r2

        tc = theta_c.max()
        hi = tc + 1.0
        while excess(hi) > 0:
            hi = tc + 2.0 * (hi - tc)
        span = hi - tc
        while excess(tc + span) < 0 and span > 1e-300:
            span *= 0.5
        if excess(tc + span) >= 0:
            b2 = brentq(excess, tc + span, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
            x = V[:, sub] @ (gc / (b2 - theta_c))
            full = base.copy()
            full[fi] = x
            out.append((b2, full))
    # eigen branch at the top eigenvalue
    if np.any(others):
        part = V[:, others] @ (gt[others] / (top - theta[others]))
    else:
        part = np.zeros(len(fi))
    left = r2 - float(part @ part)
    if left >= -1e-12:
        for k in np.flatnonzero(topmask):
            v = V[:, k]
            for sign in (1.0, -1.0):
                x = part + sign * np.sqrt(max(left, 0.0)) * v
                full = base.copy()
                full[fi] = x
                out.append((top, full))
    return out
