import math

import numpy as np
import pytest

from abstention.model import FAMILIES, AbstentionBudget, TaskKind, build_cost_matrix, filter_coefficients, make_fiducial
from abstention.oracles import ENUM_MAX_N, oracle_enumerate, oracle_projected_gradient
from abstention.solver import KKT_TOL, critical_abstention, kkt_residual, solve_abstention, top_eigenpair

FAM_TASK = {
    "flat_phase": "phase",
    "equator": "phase",
    "povm_seed_direction": "direction",
    "antiparallel": "direction",
    "linear_ramp": "frame_rydberg",
}


def _random_custom(rng, n):
    c = rng.random(n + 1) * (rng.random(n + 1) > 0.25)
    if not np.any(c):
        c[0] = 1.0
    return make_fiducial("custom", n, c)


def test_zero_abstention_flat_exact_law():
    for n in (1, 2, 5, 50):
        r = solve_abstention(build_cost_matrix("phase", n), make_fiducial("flat_phase", n), AbstentionBudget(0.0))
        assert r.fidelity == pytest.approx(1 - 1 / (2 * n + 2), abs=1e-13)
        assert r.converged


def test_top_eigenpair_phase_closed_form():
    for n in (1, 3, 30, 400):
        ep = top_eigenpair(build_cost_matrix("phase", n))
        assert ep.value == pytest.approx(math.cos(math.pi / (n + 2)), abs=1e-13)
        j = np.arange(1, n + 2)
        ref = np.sin(math.pi * j / (n + 2))
        assert ep.vector == pytest.approx(ref / np.linalg.norm(ref), abs=1e-10)


def test_top_eigenpair_against_dense():
    for kind in TaskKind:
        m = build_cost_matrix(kind, 60)
        ev, V = np.linalg.eigh(m.dense())
        ep = top_eigenpair(m)
        assert ep.value == pytest.approx(ev[-1], abs=1e-13)
        assert np.abs(ep.vector @ V[:, -1]) == pytest.approx(1.0, abs=1e-12)


def test_plateau_beyond_critical_abstention():
    n = 10
    m = build_cost_matrix("phase", n)
    c = make_fiducial("flat_phase", n)
    ep = top_eigenpair(m)
    qs, reachable = critical_abstention(c, ep)
    assert reachable and 0 < qs < 1
    for q in (qs + 1e-9, 0.6, 0.95):
        r = solve_abstention(m, c, AbstentionBudget(q))
        assert r.delta == pytest.approx(ep.value, abs=1e-12)
    assert solve_abstention(m, c, AbstentionBudget(0.6)).fidelity == pytest.approx((1 + math.cos(math.pi / 12)) / 2, abs=1e-12)


def test_unreachable_critical_abstention():
    n = 6
    m = build_cost_matrix("phase", n)
    c = make_fiducial("linear_ramp", n)
    qs, reachable = critical_abstention(c, top_eigenpair(m))
    assert (qs, reachable) == (1.0, False)


def test_against_enumeration_random():
    rng = np.random.default_rng(11)
    for _ in range(60):
        kind = TaskKind(rng.choice([t.value for t in TaskKind]))
        fam = rng.choice(FAMILIES)
        n = int(rng.integers(1, ENUM_MAX_N + 1))
        c = _random_custom(rng, n) if fam == "custom" else make_fiducial(fam, n)
        m = build_cost_matrix(kind, n)
        b = AbstentionBudget(float(rng.choice(np.arange(10) / 10)))
        r = solve_abstention(m, c, b)
        ref = oracle_enumerate(m, c, b)
        assert r.converged and r.kkt_residual <= KKT_TOL
        assert r.delta == pytest.approx(ref.delta, abs=1e-10), (kind, fam, n, b.q)


def test_solution_structure():
    n = 40
    m = build_cost_matrix("direction", n)
    c = make_fiducial("antiparallel", n)
    b = AbstentionBudget(0.5)
    r = solve_abstention(m, c, b)
    u = b.lam * c.coeffs
    assert np.dot(r.xi, r.xi) == pytest.approx(1.0, abs=1e-12)
    assert np.all(r.xi <= u + 1e-15) and np.all(r.xi >= 0)
    assert np.all(r.duals[r.coincidence_set] >= -1e-10)
    assert np.all(r.duals[~r.coincidence_set] == 0)
    assert np.allclose(r.xi[r.coincidence_set], u[r.coincidence_set])
    assert kkt_residual(m, c, b, r) == r.kkt_residual
    f = filter_coefficients(c, r.xi, b)
    assert math.fsum(c.coeffs**2 * f) == pytest.approx(b.q, abs=1e-9)


def test_against_projected_gradient_large_n():
    for fam, q in (("equator", 0.3), ("antiparallel", 0.6), ("linear_ramp", 0.45)):
        n = 150
        m = build_cost_matrix(FAM_TASK[fam], n)
        c = make_fiducial(fam, n)
        b = AbstentionBudget(q)
        r = solve_abstention(m, c, b)
        pg = oracle_projected_gradient(m, c, b)
        assert r.delta >= pg.delta - 1e-12
        assert r.delta == pytest.approx(pg.delta, abs=1e-7)


def test_fallback_when_active_set_capped():
    n = 20
    m = build_cost_matrix("phase", n)
    c = make_fiducial("equator", n)
    b = AbstentionBudget(0.5)
    r = solve_abstention(m, c, b, max_outer=1)
    assert r.method == "projected_gradient"
    assert r.delta == pytest.approx(solve_abstention(m, c, b).delta, abs=1e-8)


def test_mismatched_orders():
    with pytest.raises(ValueError):
        solve_abstention(build_cost_matrix("phase", 4), make_fiducial("flat_phase", 5), AbstentionBudget(0.1))


def test_enumeration_refuses_large_n():
    with pytest.raises(ValueError):
        oracle_enumerate(build_cost_matrix("phase", 13), make_fiducial("flat_phase", 13), AbstentionBudget(0.1))
