import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from abstention.model import FAMILIES, AbstentionBudget, build_cost_matrix, filter_coefficients, make_fiducial, quadratic_form
from abstention.solver import critical_abstention, solve_abstention, top_eigenpair

DRAWS = settings(max_examples=500)
TASKS = ("phase", "direction", "frame_degenerate", "frame_rydberg")
STD_FAMILIES = tuple(f for f in FAMILIES if f != "custom")

tasks = st.sampled_from(TASKS)
families = st.sampled_from(STD_FAMILIES)
sizes = st.integers(1, 30)
rates = st.floats(0.0, 0.95)


@st.composite
def unit_vectors(draw, n):
    raw = draw(st.lists(st.floats(-1.0, 1.0), min_size=n + 1, max_size=n + 1))
    v = np.array(raw)
    nv = np.linalg.norm(v)
    assume(nv > 1e-3)
    return v / nv


def _solve(task, family, n, q):
    m = build_cost_matrix(task, n)
    c = make_fiducial(family, n)
    return m, c, solve_abstention(m, c, AbstentionBudget(q))


@DRAWS
@given(tasks, families, sizes, rates, rates)
def test_fidelity_monotone_in_abstention(task, family, n, q1, q2):
    lo, hi = sorted((q1, q2))
    _, _, a = _solve(task, family, n, lo)
    _, _, b = _solve(task, family, n, hi)
    assert b.fidelity >= a.fidelity - 1e-10


@DRAWS
@given(tasks, families, sizes, st.floats(0.0, 1.0))
def test_plateau_beyond_critical_abstention(task, family, n, t):
    m = build_cost_matrix(task, n)
    c = make_fiducial(family, n)
    star = top_eigenpair(m)
    q_star, reachable = critical_abstention(c, star)
    assume(q_star < 0.999)
    q = q_star + t * (0.999 - q_star)
    r = solve_abstention(m, c, AbstentionBudget(q))
    assert abs(r.delta - star.value) < 1e-10


@DRAWS
@given(tasks, families, sizes, rates)
def test_filter_round_trip(task, family, n, q):
    _, c, r = _solve(task, family, n, q)
    f = filter_coefficients(c, r.xi, AbstentionBudget(q))
    assert abs(float(np.sum(c.coeffs**2 * f)) - q) < 1e-9


@DRAWS
@given(st.integers(1, 40).flatmap(lambda n: unit_vectors(n)))
def test_phase_identity(xi):
    n = xi.size - 1
    lhs = float(np.sum(xi[:-1] * xi[1:]))
    rhs = 1.0 - 0.5 * (float(np.sum(np.diff(xi) ** 2)) + xi[0] ** 2 + xi[-1] ** 2)
    assert abs(lhs - rhs) < 1e-12
    assert abs(quadratic_form(build_cost_matrix("phase", n), xi) - lhs) < 1e-12


@DRAWS
@given(st.integers(1, 40).flatmap(lambda n: unit_vectors(n)))
def test_direction_identity(xi):
    n = xi.size - 1
    j = np.arange(1, n + 1)
    lhs = float(np.sum(2 * j / np.sqrt(4.0 * j**2 - 1) * xi[1:] * xi[:-1]))
    grad = xi[1:] / np.sqrt(j + 0.5) - xi[:-1] / np.sqrt(j - 0.5)
    rhs = 1.0 - 0.5 * (float(np.sum(j * grad**2)) + (n + 1) * xi[-1] ** 2 / (n + 0.5))
    assert abs(lhs - rhs) < 1e-12
    assert abs(quadratic_form(build_cost_matrix("direction", n), xi) - lhs) < 1e-12


@DRAWS
@given(st.integers(1, 40).flatmap(lambda n: unit_vectors(n)))
def test_rydberg_identity(xi):
    n = xi.size - 1
    lhs = quadratic_form(build_cost_matrix("frame_rydberg", n), xi)
    j1 = np.arange(1, n + 1)
    j0 = np.arange(0, n)
    grad = xi[1:] / np.sqrt(j0 + 1.5) - xi[:-1] / np.sqrt(j0 + 0.5)
    rhs = (
        1.0
        - 0.5 * float(np.sum((1 / (j1 + 1) + 1 / (j1 + 0.5)) * xi[1:] ** 2))
        - xi[0] ** 2
        - xi[-1] ** 2 / 2
        - 0.5 * float(np.sum((j0 + 0.5) * grad**2))
    )
    assert abs(lhs - rhs) < 1e-12


@settings(max_examples=200)
@given(tasks, st.integers(1, 8), st.sampled_from([0.1 * k for k in range(10)]), st.integers(0, 2**32 - 1))
def test_random_custom_state_matches_enumeration(task, n, q, seed):
    from abstention.oracles import oracle_enumerate

    rng = np.random.default_rng(seed)
    c = rng.random(n + 1) * (rng.random(n + 1) > 0.2)
    assume(np.any(c > 0))
    c = make_fiducial("custom", n, c / np.linalg.norm(c))
    m = build_cost_matrix(task, n)
    r = solve_abstention(m, c, AbstentionBudget(q))
    ref = oracle_enumerate(m, c, AbstentionBudget(q))
    assert abs(r.delta - ref.delta) < 1e-8
    assert math.isclose(float(np.dot(r.xi, r.xi)), 1.0, abs_tol=1e-10)
