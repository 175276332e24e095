"""Hot loops on symmetric tridiagonal matrices.

A matrix of order ``m`` is passed as ``d`` (diagonal, length m) and ``e``
(couplings, length m-1, ``e[k-1]`` links rows k-1 and k).  Every function
here is compiled by numba unless ``ABST_NUMBA=0``; the uncompiled functions
are the pure-numpy fallback and compute exactly the same thing.

Index state codes used by the secular solver:

    FREE  (0)  unconstrained component
    BOUND (1)  component pinned at its upper bound u_j
    FIXED (2)  component pinned at zero (c_j = 0)
"""
import numpy as np

from ._jit import njit

FREE = 0
BOUND = 1
FIXED = 2

_EPS = 2.220446049250313e-16


@njit
def tridiag_matvec(d, e, x):
    m = d.shape[0]
    y = np.empty(m)
    for i in range(m):
        acc = d[i] * x[i]
        if i > 0:
            acc += e[i - 1] * x[i - 1]
        if i < m - 1:
            acc += e[i] * x[i + 1]
        y[i] = acc
    return y


@njit
def quad_form(d, e, x):
    m = d.shape[0]
    acc = 0.0
    for i in range(m):
        acc += d[i] * x[i] * x[i]
    for k in range(1, m):
        acc += 2.0 * e[k - 1] * x[k - 1] * x[k]
    return acc


@njit
def gershgorin(d, e):
    m = d.shape[0]
    lo = np.inf
    hi = -np.inf
    for i in range(m):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < m - 1:
            r += abs(e[i])
        if d[i] - r < lo:
            lo = d[i] - r
        if d[i] + r > hi:
            hi = d[i] + r
    return lo, hi


@njit
def sturm_count(d, e, x):
    """Number of eigenvalues strictly below ``x`` (negative LDL^T pivots)."""
    m = d.shape[0]
    pivmin = 1e-300
    for k in range(m - 1):
        if e[k] * e[k] * 1e-300 > pivmin:
            pivmin = e[k] * e[k] * 1e-300
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, m):
        if abs(q) < pivmin:
            q = -pivmin
        q = (d[i] - x) - e[i - 1] * e[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@njit
def top_eigenvalue(d, e):
    """Largest eigenvalue by Sturm-sequence bisection, to working precision."""
    m = d.shape[0]
    lo, hi = gershgorin(d, e)
    if m == 1:
        return d[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(d, e, mid) == m:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 2.0 * _EPS * max(abs(lo), abs(hi)) + 1e-300:
            break
    return 0.5 * (lo + hi)


@njit
def _spd_solve(d, e, a, b, shift, rhs, piv, out):
    """Solve (shift*I - T) x = rhs on rows [a, b); False if not positive definite."""
    p = shift - d[a]
    if not p > 0.0:
        return False
    piv[a] = p
    out[a] = rhs[a]
    for k in range(a + 1, b):
        p = (shift - d[k]) - e[k - 1] * e[k - 1] / piv[k - 1]
        if not p > 0.0:
            return False
        piv[k] = p
        out[k] = rhs[k] + e[k - 1] * out[k - 1] / piv[k - 1]
    out[b - 1] = out[b - 1] / piv[b - 1]
    for k in range(b - 2, a - 1, -1):
        out[k] = (out[k] + e[k] * out[k + 1]) / piv[k]
    return True


@njit
def inverse_iteration(d, e, theta):
    """Unit Perron eigenvector for the top eigenvalue ``theta``.

    Iterates with shift slightly above ``theta`` so that (shift - T) is an
    M-matrix; its inverse is entrywise non-negative and so is every iterate.
    """
    m = d.shape[0]
    v = np.ones(m) / np.sqrt(m)
    if m == 1:
        return v
    delta = 1e-10 * max(1.0, abs(theta))
    piv = np.empty(m)
    w = np.empty(m)
    for _ in range(60):
        ok = _spd_solve(d, e, 0, m, theta + delta, v, piv, w)
        if not ok:
            delta *= 10.0
            continue
        nrm = np.sqrt(np.sum(w * w))
        w /= nrm
        diff = np.max(np.abs(w - v))
        v[:] = w
        if diff < 1e-15:
            break
    return v


@njit
def free_solution(d, e, u, state, b2, xi, z, want_deriv):
    """Fill ``xi`` for the given multiplier ``b2``.

    BOUND entries get u_j, FIXED entries 0, FREE runs adjacent to a BOUND
    entry solve (b2 I - M_FF) xi_F = M_FC u_C.  FREE runs with no bound
    neighbour are left at zero (the caller handles their eigen branch).
    Returns (ok, |xi_F|^2, d|xi_F|^2/db2); ok is False when b2 I - M_FF is
    not positive definite on some coupled run.
    """
    m = d.shape[0]
    piv = np.empty(m)
    rhs = np.zeros(m)
    norm2 = 0.0
    dnorm2 = 0.0
    i = 0
    while i < m:
        s = state[i]
        if s == BOUND:
            xi[i] = u[i]
            i += 1
            continue
        if s == FIXED:
            xi[i] = 0.0
            i += 1
            continue
        a = i
        while i < m and state[i] == FREE:
            i += 1
        b = i
        left = 0.0
        right = 0.0
        if a > 0 and state[a - 1] == BOUND:
            left = e[a - 1] * u[a - 1]
        if b < m and state[b] == BOUND:
            right = e[b - 1] * u[b]
        if left == 0.0 and right == 0.0:
            for k in range(a, b):
                xi[k] = 0.0
            continue
        for k in range(a, b):
            rhs[k] = 0.0
        rhs[a] += left
        rhs[b - 1] += right
        if not _spd_solve(d, e, a, b, b2, rhs, piv, xi):
            return False, np.inf, 0.0
        for k in range(a, b):
            norm2 += xi[k] * xi[k]
        if want_deriv:
            for k in range(a, b):
                rhs[k] = xi[k]
            _spd_solve(d, e, a, b, b2, rhs, piv, z)
            for k in range(a, b):
                dnorm2 -= 2.0 * xi[k] * z[k]
    return True, norm2, dnorm2


@njit
def secular_root(d, e, u, state, r2, xi):
    """Multiplier b2 on the maximizing branch with |xi_F|^2 = r2.

    Safeguarded Newton on 1/|xi_F| (nearly linear in b2) inside a bisection
    bracket; points where b2 I - M_FF is indefinite count as "too low".
    Returns (b2, iterations).
    """
    m = d.shape[0]
    z = np.empty(m)
    glo, ghi = gershgorin(d, e)
    lo = glo - 1.0
    hi = ghi + 1.0
    for _ in range(200):
        ok, n2, dn2 = free_solution(d, e, u, state, hi, xi, z, False)
        if ok and n2 <= r2:
            break
        lo = hi
        hi = hi + max(1.0, abs(hi))
    target = 1.0 / np.sqrt(r2)
    b = hi
    it = 0
    for it in range(300):
        ok, n2, dn2 = free_solution(d, e, u, state, b, xi, z, True)
        if ok and n2 > 0.0:
            if n2 > r2:
                lo = b
            else:
                hi = b
            if abs(n2 - r2) <= 8.0 * _EPS * r2:
                break
            phi = 1.0 / np.sqrt(n2) - target
            dphi = -0.5 * dn2 / (n2 * np.sqrt(n2))
            if dphi > 0.0:
                bn = b - phi / dphi
                if lo < bn < hi:
                    b = bn
                    continue
        else:
            lo = b
        if hi - lo <= 4.0 * _EPS * max(abs(lo), abs(hi)) + 1e-300:
            b = hi
            break
        b = 0.5 * (lo + hi)
    ok, n2, dn2 = free_solution(d, e, u, state, b, xi, z, False)
    if not ok:
        b = hi
        free_solution(d, e, u, state, b, xi, z, False)
    return b, it + 1


@njit
def project_box_sphere(x, u, out):
    """Nearest point to x >= 0 in {0 <= xi <= u, |xi| = 1}; writes ``out``.

    Finite active-set iteration: xi = min(s x, u) with the scale s growing
    monotonically as components saturate.  Returns 0 on success, 1 if the
    set is empty (|u| < 1).
    """
    m = x.shape[0]
    clamped = np.zeros(m, dtype=np.bool_)
    support_u2 = 0.0
    total_u2 = 0.0
    for j in range(m):
        total_u2 += u[j] * u[j]
        if x[j] > 0.0:
            support_u2 += u[j] * u[j]
    if total_u2 < 1.0 - 1e-14:
        return 1
    if support_u2 <= 1.0:
        # Every positive component saturates; spread the remainder over the
        # zero components in proportion to their bounds.
        rest = total_u2 - support_u2
        t = 0.0
        if rest > 0.0:
            t = np.sqrt(max(0.0, 1.0 - support_u2) / rest)
        for j in range(m):
            if x[j] > 0.0:
                out[j] = u[j]
            else:
                out[j] = t * u[j]
        return 0
    s = 0.0
    for _ in range(m + 1):
        su2 = 0.0
        sx2 = 0.0
        for j in range(m):
            if x[j] > 0.0:
                if clamped[j]:
                    su2 += u[j] * u[j]
                else:
                    sx2 += x[j] * x[j]
        s = np.sqrt(max(0.0, 1.0 - su2) / sx2)
        changed = False
        for j in range(m):
            if x[j] > 0.0 and not clamped[j] and s * x[j] > u[j]:
                clamped[j] = True
                changed = True
        if not changed:
            break
    for j in range(m):
        if x[j] > 0.0:
            out[j] = min(s * x[j], u[j])
        else:
            out[j] = 0.0
    return 0


@njit
def projected_gradient(d, e, u, x0, step, maxit, tol):
    """Fixed-step projected ascent on xi^T M xi over the box-sphere set.

    ``d`` must already carry the non-negativity shift.  Returns (xi, iters).
    """
    m = d.shape[0]
    xi = np.empty(m)
    project_box_sphere(x0, u, xi)
    nxt = np.empty(m)
    y = np.empty(m)
    it = 0
    for it in range(maxit):
        for i in range(m):
            acc = d[i] * xi[i]
            if i > 0:
                acc += e[i - 1] * xi[i - 1]
            if i < m - 1:
                acc += e[i] * xi[i + 1]
            y[i] = xi[i] + step * acc
        project_box_sphere(y, u, nxt)
        diff = 0.0
        for i in range(m):
            dv = abs(nxt[i] - xi[i])
            if dv > diff:
                diff = dv
        xi[:] = nxt
        if diff < tol:
            break
    return xi, it + 1
