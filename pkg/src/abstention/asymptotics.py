"""Closed-form large-n laws, parametric (Q, S_min) curves and continuum profiles.

Conventions: S = 1 - Delta = 2(1 - F).  The phase task has N = n qubits,
direction and frame tasks have N = 2n.  Curves report a scaled action
n^p S_min with p = 1 (shot-noise regime) or p = 2 (Heisenberg regime).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import specfun
from .specfun import AI_PRIME_ZERO1, AI_ZERO1, J0_ZERO1, find_root

ALPHA_BRACKET = (1e-6, 1.0 - 1e-6)
REGIMES = ("shot_noise", "heisenberg", "optimal")


@dataclass(frozen=True)
class CurvePoint:
    q: float
    scaled_smin: float
    regime_tag: str
    power: int = 1
    parameter: float = math.nan
    reduced_accuracy: bool = False
    qbar: float = math.nan  # 1 - q, kept separately so it stays accurate near q = 1

    def __post_init__(self):
        if math.isnan(self.qbar):
            object.__setattr__(self, "qbar", 1.0 - self.q)

    def smin_at(self, n: int) -> float:
        return self.scaled_smin / float(n) ** self.power

    def fidelity_at(self, n: int) -> float:
        return 1.0 - 0.5 * self.smin_at(n)


@dataclass(frozen=True)
class ProfileSample:
    t: float
    phi: float


@dataclass(frozen=True)
class HeisenbergPoint:
    F: float
    qbar: float
    log_qbar: float
    exponent_rate: float  # r in qbar ~ prefactor * exp(-r n)
    derived_prefactor: bool = False


@dataclass(frozen=True)
class RydbergOptimum:
    S_star: float
    F_star: float
    F_form: float


def _check_n(n, name="n", minimum=1):
    if int(n) != n or n < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}")
    return int(n)


def _check_q_open(q):
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError(f"abstention rate must lie in (0, 1), got {q}")
    return q


def binary_entropy(t: float) -> float:
    """H(t) = -t ln t - (1-t) ln(1-t)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("entropy argument must lie in [0, 1]")
    out = 0.0
    if t > 0.0:
        out -= t * math.log(t)
    if t < 1.0:
        out -= (1.0 - t) * math.log1p(-t)
    return out


# ---------------------------------------------------------------- phase


def phase_optimal_fidelity(N: int) -> float:
    N = _check_n(N, "N")
    return 1.0 - math.pi**2 / (4.0 * N * N)


def phase_flat_fidelity(N: int, q: float) -> float:
    """Flat fiducial with abstention; q = 0 is outside the law (use the solver:
    the exact finite-N value there is 1 - 1/(2N + 2))."""
    N = _check_n(N, "N")
    q = _check_q_open(q)
    if q > 0.5:
        return phase_optimal_fidelity(N)
    return 1.0 - math.pi**2 / (16.0 * q * (1.0 - q) * N * N)


def phase_equator_shot_curve(omega: float, n: int) -> CurvePoint:
    """(Q, n S_min) on the equatorial-state curve, parameter omega in (0, pi/2)."""
    n = _check_n(n)
    om = float(omega)
    if not 0.0 < om < 0.5 * math.pi:
        raise ValueError("omega must lie in (0, pi/2)")
    tan = math.tan(om)
    sec2 = 1.0 + tan * tan
    s2 = om * tan
    s = math.sqrt(s2)
    e, _ = specfun.erf_pair(s)
    k = (om * sec2 + tan) * math.sqrt(tan / (math.pi * om))
    q = e - k * math.exp(-s2)
    # erfc(s) e^(s^2) written with erfcx so nothing overflows near pi/2
    ex = specfun.erfcx(s)
    qbar = math.exp(-s2) * (ex + k)
    den = 2.0 * om * om * sec2 + math.sqrt(math.pi) * s * ex
    smin = 0.5 / n / (1.0 + (tan * tan - om * (2.0 * om - tan) * sec2) / den)
    return CurvePoint(min(max(q, 0.0), 1.0), n * smin, "shot_noise", 1, om, qbar=qbar)


def phase_equator_heisenberg(N: int, alpha: float) -> HeisenbergPoint:
    n = _check_n(N, "N")
    a = float(alpha)
    if not 0.0 < a <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    F = 1.0 - math.pi**2 / (16.0 * n * n * a * a)
    if a == 0.5:
        lq = -n * math.log(2.0)
        return HeisenbergPoint(F, math.exp(lq), lq, math.log(2.0))
    rate = math.log(2.0) - binary_entropy(a + 0.5)
    lq = (
        2.5 * math.log(2.0 * n / math.pi)
        + 3.0 * math.log(a)
        + 2.0 * math.log(math.atanh(2.0 * a))
        - 0.5 * math.log1p(-4.0 * a * a)
        - n * rate
    )
    return HeisenbergPoint(F, math.exp(lq), lq, rate)


# ---------------------------------------------------------------- direction


def direction_optimal_fidelity(N: int) -> float:
    N = _check_n(N, "N", 2)
    if N % 2:
        raise ValueError("N must be even for the direction task")
    return 1.0 - J0_ZERO1**2 / (N * N)


POVM_CROSSOVER = math.pi**2 / (4.0 * J0_ZERO1**2)


def povm_critical_abstention() -> float:
    """Q* = 1 - J1(gamma)^2 for the POVM-seed fiducial."""
    return 1.0 - specfun.j1(J0_ZERO1) ** 2


def direction_povm_smin(q: float) -> float:
    """n^2 S_min for the POVM-seed fiducial (continuous at the crossover)."""
    q = _check_q_open(q)
    if q <= POVM_CROSSOVER:
        return math.pi**2 / (8.0 * q)
    return 0.5 * J0_ZERO1**2


def direction_antiparallel_shot_curve(omega: float, n: int) -> CurvePoint:
    n = _check_n(n)
    om = float(omega)
    if not 0.0 < om < J0_ZERO1:
        raise ValueError("omega must lie in (0, first zero of J0)")
    a2 = om * specfun.j1(om) / specfun.j0(om)
    a4 = a2 * a2
    a6 = a4 * a2
    om2 = om * om
    qbar = (1.0 + a2 + a6 / om2) * math.exp(-a2)
    # same quantity as 1 - qbar, but keeps its digits for small omega
    q = -math.expm1(-a2) - (a2 + a6 / om2) * math.exp(-a2)
    smin = om2 / (2.0 * n) * (1.0 - a2 + a4 + om2) / (a6 + (1.0 + a2) * om2)
    return CurvePoint(min(max(q, 0.0), 1.0), n * smin, "shot_noise", 1, om, qbar=qbar)


def direction_antiparallel_heisenberg(N: int, alpha: float) -> HeisenbergPoint:
    """Heisenberg branch of the antiparallel family; the prefactor of qbar is derived."""
    N = _check_n(N, "N", 2)
    if N % 2:
        raise ValueError("N must be even for the direction task")
    n = N // 2
    a = float(alpha)
    if not 0.0 < a <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    g2 = J0_ZERO1**2
    F = 1.0 - g2 / (N * N * a * a)
    rate = 2.0 * (math.log(2.0) - binary_entropy(0.5 * (1.0 - a)))
    if a == 1.0:
        # the prefactor is singular at the endpoint; keep the pure rate 4^-n
        lq = -n * rate
        return HeisenbergPoint(F, math.exp(lq), lq, rate, True)
    lq = (
        3.0 * math.log(n)
        + 4.0 * math.log(a)
        + 2.0 * math.log(math.atanh(a))
        - 0.5 * math.log1p(-a)
        - 1.5 * math.log1p(a)
        - math.log(g2)
        - n * rate
    )
    return HeisenbergPoint(F, math.exp(lq), lq, rate, True)


# ---------------------------------------------------------------- frames


def frame_degenerate_fidelity(N: int, q: float = 0.0, scenario: str = "optimal", alpha: float | None = None) -> float:
    """Degenerate-encoding frame task: phase results with N -> N/2."""
    N = _check_n(N, "N", 2)
    if N % 2:
        raise ValueError("N must be even for frame estimation")
    half = N // 2
    if scenario == "optimal":
        return phase_optimal_fidelity(half)
    if scenario == "flat":
        return phase_flat_fidelity(half, q)
    if scenario == "heisenberg":
        if alpha is None:
            raise ValueError("heisenberg scenario needs alpha")
        return phase_equator_heisenberg(half, alpha).F
    raise ValueError(f"unknown frame scenario {scenario!r}")


def frame_rydberg_optimal(n: int, with_correction: bool = False) -> RydbergOptimum:
    n = _check_n(n)
    g = AI_ZERO1
    S = 1.0 / n - g / (2.0 ** (1.0 / 3.0) * n ** (4.0 / 3.0))
    N = 2.0 * n
    F_form = 1.0 - 1.0 / N + g / N ** (4.0 / 3.0)
    if with_correction:
        S += 2.0 ** (7.0 / 3.0) * g * g / (15.0 * n ** (5.0 / 3.0))
        # sign follows F = 1 - S/2 (the printed F-form carries the opposite sign)
        F_form -= 8.0 * g * g / (15.0 * N ** (5.0 / 3.0))
    F = 1.0 - 0.5 * S
    if not math.isclose(F, F_form, rel_tol=0.0, abs_tol=1e-14):
        raise AssertionError("S-form and F-form of the Rydberg optimum disagree")
    return RydbergOptimum(S, F, F_form)


def _rydberg_leading_smin(n, qbar):
    x = qbar ** (1.0 / 3.0)
    if x < 0.05:
        # 2 ln(1-x) + 2x + x^2 = -2 sum_{k>=3} x^k / k, summed to avoid cancellation
        inner = -2.0 * math.fsum(x**k / k for k in range(3, 40))
    else:
        inner = 2.0 * math.log1p(-x) + 2.0 * x + x * x
    return -1.5 / (n * qbar) * inner


def frame_rydberg_implicit_alpha(n: int, alpha: float) -> tuple[float, float]:
    """(Qbar, S_min) of the implicit curve at parameter alpha."""
    n = _check_n(n)
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    gp = AI_PRIME_ZERO1
    gp3 = gp**3
    om2 = (
        2.0 * n / a
        - (2.0 * a * n) ** (2.0 / 3.0) * gp / (a * a)
        + ((8.0 * gp3 - 3.0) - 4.0 * a * (2.0 * gp3 + 3.0)) / (15.0 * a * a * (1.0 - a) * gp) * (2.0 * a * n) ** (1.0 / 3.0)
    )
    b = 1.0 - a
    qbar = b**3 - 3.0 * a * b * b * ((1.0 - a * om2 / (2.0 * n)) - a / (2.0 * n * b * b))
    lam2 = 1.0 / qbar
    smin = -(3.0 * lam2 / n) * (math.log(a) + 2.0 - 2.0 * a - 0.5 * (1.0 - a * a)) + om2 / (2.0 * n * n) * (1.0 - lam2 * b**3)
    return qbar, smin


def frame_rydberg_limited(n: int, q: float, mode: str = "implicit") -> CurvePoint:
    """Linear-ramp fiducial under limited abstention, as n S_min."""
    n = _check_n(n)
    q = _check_q_open(q)
    qbar = 1.0 - q
    if mode == "leading":
        return CurvePoint(q, n * _rydberg_leading_smin(n, qbar), "shot_noise", 1, 1.0 - qbar ** (1.0 / 3.0))
    if mode != "implicit":
        raise ValueError(f"unknown mode {mode!r}")
    lo, hi = ALPHA_BRACKET
    # Qbar(alpha) overshoots 1 just above alpha = 0 before decreasing; bracket
    # on the decreasing branch so the root is unique
    grid = np.linspace(lo, hi, 401)
    vals = np.array([frame_rydberg_implicit_alpha(n, t)[0] for t in grid])
    lo = float(grid[int(np.argmax(vals))])
    if qbar < vals[-1]:
        raise ValueError(f"q = {q} lies beyond the implicit curve's range (q < {1.0 - vals[-1]:.4g})")
    a = find_root(lambda t: frame_rydberg_implicit_alpha(n, t)[0] - qbar, lo, hi, 1e-14)
    _, smin = frame_rydberg_implicit_alpha(n, a)
    # the expansion is in powers of (2 alpha n)^(-1/3) relative to 1 - alpha
    reduced = a > 1.0 - 1.0 / n ** (1.0 / 3.0)
    return CurvePoint(q, n * smin, "shot_noise", 1, a, reduced)


# ---------------------------------------------------------------- curves at a given q


def _invert_param(curve, q, lo, hi):
    def f(om):
        return curve(om).q - q

    return find_root(f, lo, hi, 1e-15)


def phase_equator_at(q: float, n: int) -> CurvePoint:
    q = _check_q_open(q)
    om = _invert_param(lambda w: phase_equator_shot_curve(w, n), q, 1e-6, 0.5 * math.pi - 1e-6)
    return phase_equator_shot_curve(om, n)


def direction_antiparallel_at(q: float, n: int) -> CurvePoint:
    q = _check_q_open(q)
    om = _invert_param(lambda w: direction_antiparallel_shot_curve(w, n), q, 1e-6, J0_ZERO1 - 1e-9)
    return direction_antiparallel_shot_curve(om, n)


# scenario -> (task, family, power, evaluator(q, n) -> CurvePoint)
def _flat(q, n):
    return CurvePoint(q, 2.0 * n * n * (1.0 - phase_flat_fidelity(n, q)), "heisenberg", 2)


def _povm(q, n):
    tag = "heisenberg" if q <= POVM_CROSSOVER else "optimal"
    return CurvePoint(q, direction_povm_smin(q), tag, 2)


def _rydberg(mode):
    return lambda q, n: frame_rydberg_limited(n, q, mode)


SCENARIOS = {
    "phase_flat": ("phase", "flat_phase", 2, _flat),
    "phase_equator": ("phase", "equator", 1, lambda q, n: phase_equator_at(q, n)),
    "direction_povm": ("direction", "povm_seed_direction", 2, _povm),
    "direction_antiparallel": ("direction", "antiparallel", 1, lambda q, n: direction_antiparallel_at(q, n)),
    "frame_rydberg_leading": ("frame_rydberg", "linear_ramp", 1, _rydberg("leading")),
    "frame_rydberg_implicit": ("frame_rydberg", "linear_ramp", 1, _rydberg("implicit")),
}


def scenario_curve(name: str, q: float, n: int) -> CurvePoint:
    try:
        ev = SCENARIOS[name][3]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}") from None
    return ev(q, n)


# ---------------------------------------------------------------- profiles

PROFILE_SCENARIOS = ("phase_optimal", "phase_flat", "direction_optimal", "frame_airy")


def _profile_values(scenario, q, t, n):
    if scenario == "phase_optimal":
        return math.sqrt(2.0) * np.sin(np.pi * t)
    if scenario == "phase_flat":
        q = _check_q_open(q)
        if q > 0.5:
            return math.sqrt(2.0) * np.sin(np.pi * t)
        qbar = 1.0 - q
        edge = np.minimum(t, 1.0 - t)
        return np.where(edge < q, np.sin(np.pi * edge / (2.0 * q)), 1.0) / math.sqrt(qbar)
    if scenario == "direction_optimal":
        g = J0_ZERO1
        # J0 is zero at t = 1; clip the rounding residue there
        return np.maximum(np.sqrt(2.0 * t) * specfun.j0(g * t) / specfun.j1(g), 0.0)
    if scenario == "frame_airy":
        if n is None:
            raise ValueError("frame_airy profile needs n")
        n = _check_n(n)
        arg = AI_ZERO1 + (2.0 * n) ** (1.0 / 3.0) * (1.0 - t)
        # beyond x = 15, Ai(x) < 1e-17 and is dropped
        inside = arg <= 15.0
        phi = np.zeros_like(t)
        phi[inside] = specfun.airy("Ai", arg[inside])
        return np.abs(phi)
    raise ValueError(f"unknown profile scenario {scenario!r}")


def profile_sample(scenario: str, q: float | None = None, resolution: int = 1001, n: int | None = None) -> list[ProfileSample]:
    """Continuum amplitude phi(t) (xi_j ~ phi(j/n)/sqrt(n)) on a uniform grid."""
    if int(resolution) != resolution or resolution < 2:
        raise ValueError("resolution must be an integer >= 2")
    t = np.linspace(0.0, 1.0, int(resolution))
    phi = np.asarray(_profile_values(scenario, q, t, n), dtype=float)
    if scenario == "frame_airy":
        phi = phi / math.sqrt(simpson(phi * phi, x=t))
    return [ProfileSample(float(a), float(b)) for a, b in zip(t, phi)]


def profile_norm(samples) -> float:
    t = np.array([s.t for s in samples])
    phi = np.array([s.phi for s in samples])
    return float(simpson(phi * phi, x=t))
