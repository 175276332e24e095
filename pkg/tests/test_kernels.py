import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from abstention import kernels
from abstention._jit import USE_NUMBA
from abstention.kernels import BOUND, FIXED, FREE
from abstention.oracles import project_box_sphere


def _rand_tridiag(rng, m):
    return rng.standard_normal(m), rng.random(m - 1) + 0.05


def test_sturm_count_and_top_eigenvalue():
    rng = np.random.default_rng(0)
    for m in (1, 2, 5, 40, 300):
        d, e = _rand_tridiag(rng, m)
        ev = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1)) if m > 1 else d
        for x in rng.uniform(ev.min() - 1, ev.max() + 1, 10):
            assert kernels.sturm_count(d, e, x) == np.count_nonzero(ev < x)
        assert kernels.top_eigenvalue(d, e) == pytest.approx(ev.max(), abs=1e-13 * max(1, abs(ev.max())))


def test_inverse_iteration_is_perron_vector():
    rng = np.random.default_rng(2)
    d, e = _rand_tridiag(rng, 50)
    d = d + 3.0
    theta = kernels.top_eigenvalue(d, e)
    v = kernels.inverse_iteration(d, e, theta)
    _, ref = eigh_tridiagonal(d, e, select="i", select_range=(49, 49))
    ref = np.abs(ref[:, 0])
    assert np.all(v > 0)
    assert np.max(np.abs(v - ref)) < 1e-10


def test_free_solution_solves_linear_system():
    rng = np.random.default_rng(3)
    m = 12
    d, e = _rand_tridiag(rng, m)
    u = rng.random(m)
    state = np.array([FREE, FREE, BOUND, FREE, FREE, FREE, FIXED, FREE, BOUND, FREE, FREE, FREE], dtype=np.int64)
    b2 = kernels.gershgorin(d, e)[1] + 0.5
    xi = np.empty(m)
    z = np.empty(m)
    ok, n2, dn2 = kernels.free_solution(d, e, u, state, b2, xi, z, True)
    assert ok
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    free = state == FREE
    C = state == BOUND
    # indices 3..5 are a coupled run; runs at 0..1 and 7 touch a bound index too
    lhs = (b2 * np.eye(m) - T)[np.ix_(free, free)] @ xi[free]
    rhs = T[np.ix_(free, C)] @ u[C]
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert xi[6] == 0.0 and np.all(xi[C] == u[C])
    assert n2 == pytest.approx(np.sum(xi[free] ** 2))
    h = 1e-6
    _, n2p, _ = kernels.free_solution(d, e, u, state, b2 + h, xi.copy(), z, False)
    _, n2m, _ = kernels.free_solution(d, e, u, state, b2 - h, xi.copy(), z, False)
    assert dn2 == pytest.approx((n2p - n2m) / (2 * h), rel=1e-6)


def test_projection_is_nearest_point():
    rng = np.random.default_rng(4)
    for _ in range(200):
        m = int(rng.integers(2, 12))
        u = rng.random(m) * 2.0 / np.sqrt(m) + 0.05
        if np.sum(u**2) < 1:
            u *= 1.01 / np.linalg.norm(u)
        x = rng.random(m) * (rng.random(m) > 0.2)
        if not np.any(x > 0):
            x[0] = 1.0
        p = project_box_sphere(x, u)
        assert np.dot(p, p) == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= 0) and np.all(p <= u + 1e-15)
        # random feasible points are never closer
        for _ in range(20):
            y = np.minimum(rng.random(m) * u * 1.5, u)
            if np.linalg.norm(y) < 1e-9:
                continue
            y = y / np.linalg.norm(y)
            if np.all(y <= u + 1e-12):
                assert np.linalg.norm(x - p) <= np.linalg.norm(x - y) + 1e-12


def test_projection_errors():
    with pytest.raises(ValueError):
        project_box_sphere(np.ones(3), np.full(3, 0.1))
    with pytest.raises(ValueError):
        project_box_sphere(np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        project_box_sphere(-np.ones(3), np.ones(3))


@pytest.mark.skipif(not USE_NUMBA, reason="numba disabled")
def test_compiled_kernels_match_python():
    rng = np.random.default_rng(5)
    d, e = _rand_tridiag(rng, 60)
    x = rng.standard_normal(60)
    assert kernels.quad_form(d, e, x) == pytest.approx(kernels.quad_form.py_func(d, e, x), rel=1e-13)
    assert kernels.top_eigenvalue(d, e) == kernels.top_eigenvalue.py_func(d, e)
    u = np.abs(rng.standard_normal(60)) * 0.3
    state = np.where(rng.random(60) < 0.3, BOUND, FREE).astype(np.int64)
    u *= 0.8 / np.linalg.norm(u[state == BOUND])
    r2 = 1.0 - np.sum(u[state == BOUND] ** 2)
    assert np.any(state == FREE) and r2 > 0
    a, b = np.empty(60), np.empty(60)
    b2a, _ = kernels.secular_root(d, e, u, state, r2, a)
    b2b, _ = kernels.secular_root.py_func(d, e, u, state, r2, b)
    assert b2a == pytest.approx(b2b, rel=1e-12)
    assert a == pytest.approx(b, abs=1e-10)
    assert np.sum(a[state == FREE] ** 2) == pytest.approx(r2, rel=1e-12)
