"""Bessel J0/J1/Y0/Y1, Airy Ai/Ai', erf/erfc/erfcx and a bracketing root finder.

Self-contained: only ``math`` is used, so the identities in the test suite
(Wronskian, Airy ODE) check these implementations and nothing else.
Scalar functions accept numpy arrays too (evaluated elementwise).
"""
from __future__ import annotations

import functools
import math

import numpy as np

EULER_GAMMA = 0.5772156649015329
_AI0 = 0.35502805388781723926  # Ai(0) = 3^(-2/3) / Gamma(2/3)
_AIP0 = 0.25881940379280679840  # -Ai'(0) = 3^(-1/3) / Gamma(1/3)
_SQRT_PI = math.sqrt(math.pi)
_BESSEL_SPLIT = 8.0
_AIRY_RANGE = 15.0


def _elementwise(fn):
    vec = np.vectorize(fn, otypes=[float])

    @functools.wraps(fn)
    def wrapper(x, *args):
        if np.ndim(x) == 0:
            return fn(float(x), *args)
        return vec(np.asarray(x, dtype=float), *args)

    return wrapper


# ---------------------------------------------------------------- Bessel


def _bessel_series(z):
    """J0, J1, Y0, Y1 from the ascending series (z <= 8)."""
    y = 0.25 * z * z
    j0 = 0.0
    j1 = 0.0
    s0 = 0.0  # sum (-1)^(k+1) H_k y^k / (k!)^2
    s1 = 0.0  # sum (psi(k+1) + psi(k+2)) (-y)^k / (k! (k+1)!)
    term = 1.0  # (-y)^k / (k!)^2
    harm = 0.0
    for k in range(200):
        if k > 0:
            term *= -y / (k * k)
            harm += 1.0 / k
        j0 += term
        t1 = term / (k + 1)
        j1 += t1
        s0 -= harm * term
        s1 += (2.0 * harm + 1.0 / (k + 1) - 2.0 * EULER_GAMMA) * t1
        if k > 5 and abs(term) < 1e-18 * max(1.0, abs(j0)) and abs(harm * term) < 1e-18:
            break
    j1 *= 0.5 * z
    lg = math.log(0.5 * z)
    y0 = (2.0 / math.pi) * ((lg + EULER_GAMMA) * j0 + s0)
    y1 = -2.0 / (math.pi * z) + (2.0 / math.pi) * lg * j1 - (0.5 * z / math.pi) * s1
    return j0, j1, y0, y1


def _bessel_recurrence(z):
    """J0, J1, Y0, Y1 by Miller's backward recurrence and Neumann series (z > 8)."""
    top = int(z + 20.0 + 10.0 * z ** (1.0 / 3.0))
    top += top % 2
    jn = [0.0] * (top + 2)
    jn[top + 1] = 0.0
    jn[top] = 1e-30
    for k in range(top, 0, -1):
        jn[k - 1] = (2.0 * k / z) * jn[k] - jn[k + 1]
        if abs(jn[k - 1]) > 1e250:
            for i in range(k - 1, top + 2):
                jn[i] *= 1e-250
    norm = jn[0] + 2.0 * math.fsum(jn[2 : top + 1 : 2])
    jn = [v / norm for v in jn]
    lg = math.log(0.5 * z) + EULER_GAMMA
    neu0 = 0.0
    neu1 = 0.0
    sign = -1.0
    for k in range(1, top // 2 + 1):
        neu0 += sign * jn[2 * k] / k
        neu1 += sign * (jn[2 * k - 1] - jn[2 * k + 1]) / k
        sign = -sign
    y0 = (2.0 / math.pi) * (lg * jn[0] - 2.0 * neu0)
    y1 = -(2.0 / math.pi) * (jn[0] / z - lg * jn[1] - neu1)
    return jn[0], jn[1], y0, y1


def _bessel_all(z):
    if z <= _BESSEL_SPLIT:
        return _bessel_series(z)
    return _bessel_recurrence(z)


_BESSEL_KINDS = {"J0": 0, "J1": 1, "Y0": 2, "Y1": 3}


@_elementwise
def _bessel_scalar(z, idx):
    if idx >= 2:
        if not z > 0.0:
            raise ValueError("Y Bessel functions need z > 0")
    elif not z >= 0.0:
        raise ValueError("J Bessel functions need z >= 0")
    if z == 0.0:
        return 1.0 if idx == 0 else 0.0
    return _bessel_all(z)[idx]


def bessel(kind: str, z):
    """Bessel function of the first (J) or second (Y) kind, order 0 or 1."""
    try:
        idx = _BESSEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown Bessel kind {kind!r}") from None
    return _bessel_scalar(z, idx)


def j0(z):
    return bessel("J0", z)


def j1(z):
    return bessel("J1", z)


def y0(z):
    return bessel("Y0", z)


def y1(z):
    return bessel("Y1", z)


# ---------------------------------------------------------------- Airy


def _airy_taylor(x0, y, yp, t):
    """Ai and Ai' at x0 + t from values at x0, by the Taylor series of y'' = x y."""
    a_prev, a_cur, a_next = 0.0, y, yp  # a_{k-1}, a_k, a_{k+1} at k = 0
    val = y + yp * t
    der = yp
    tk = t  # t^(k+1)
    small = 0
    for k in range(0, 80):
        a_new = (x0 * a_cur + a_prev) / ((k + 2) * (k + 1))  # a_{k+2}
        der += (k + 2) * a_new * tk
        tk *= t
        val += a_new * tk
        a_prev, a_cur, a_next = a_cur, a_next, a_new
        # every third coefficient vanishes at x0 = 0: wait for three small terms
        small = small + 1 if abs(a_new * tk) < 1e-18 * (abs(val) + 1e-300) else 0
        if small == 3:
            break
    return val, der


_NODE_STEP = 0.25
_NODE_EDGE = 10.0


def _airy_nodes():
    """(Ai, Ai') on a grid over [-10, 10], stepped along the ODE.

    Leftwards from the exact values at 0; rightwards is unstable for the
    decaying solution, so that half is stepped back from x = 10 where the
    asymptotic series is exact to rounding.
    """
    count = int(round(_NODE_EDGE / _NODE_STEP))
    nodes = {0: (_AI0, -_AIP0)}
    y, yp = _AI0, -_AIP0
    for i in range(count):
        y, yp = _airy_taylor(-i * _NODE_STEP, y, yp, -_NODE_STEP)
        nodes[-(i + 1)] = (y, yp)
    y, yp = _airy_asymptotic(_NODE_EDGE)
    nodes[count] = (y, yp)
    for i in range(count, 1, -1):
        y, yp = _airy_taylor(i * _NODE_STEP, y, yp, -_NODE_STEP)
        nodes[i - 1] = (y, yp)
    return nodes


def _airy_coeffs(count):
    u = [1.0]
    for k in range(1, count):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, count)]
    return u, v


_U, _V = _airy_coeffs(40)


def _asym_sum(coef, zeta, start, stride, alternate):
    """Truncated asymptotic sum sum_k s_k coef[start + stride*k] / zeta^(start+stride*k)."""
    total = 0.0
    last = math.inf
    for k in range(len(coef)):
        i = start + stride * k
        if i >= len(coef):
            break
        t = coef[i] / zeta**i
        if alternate and k % 2 == 1:
            t = -t
        if abs(t) > last:
            break
        total += t
        last = abs(t)
        if last < 1e-17 * abs(total):
            break
    return total


def _airy_asymptotic(x):
    if x > 0:
        zeta = 2.0 / 3.0 * x**1.5
        pre = math.exp(-zeta) / (2.0 * _SQRT_PI)
        su = _asym_sum([(-1) ** k * c for k, c in enumerate(_U)], zeta, 0, 1, False)
        sv = _asym_sum([(-1) ** k * c for k, c in enumerate(_V)], zeta, 0, 1, False)
        return pre * su / x**0.25, -pre * x**0.25 * sv
    z = -x
    zeta = 2.0 / 3.0 * z**1.5
    s, c = math.sin(zeta - math.pi / 4), math.cos(zeta - math.pi / 4)
    ue = _asym_sum(_U, zeta, 0, 2, True)
    uo = _asym_sum(_U, zeta, 1, 2, True)
    ve = _asym_sum(_V, zeta, 0, 2, True)
    vo = _asym_sum(_V, zeta, 1, 2, True)
    ai = (c * ue + s * uo) / (_SQRT_PI * z**0.25)
    aip = z**0.25 * (s * ve - c * vo) / _SQRT_PI
    return ai, aip


_NODES = _airy_nodes()


def _airy_pair(x):
    if abs(x) > _AIRY_RANGE or math.isnan(x):
        raise ValueError(f"Airy argument {x} outside supported range [-15, 15]")
    if abs(x) <= _NODE_EDGE:
        i = int(round(x / _NODE_STEP))
        y, yp = _NODES[i]
        return _airy_taylor(i * _NODE_STEP, y, yp, x - i * _NODE_STEP)
    return _airy_asymptotic(x)


@_elementwise
def _airy_scalar(x, idx):
    return _airy_pair(x)[idx]


def airy(kind: str, x):
    """Ai or Ai' on [-15, 15]."""
    if kind == "Ai":
        return _airy_scalar(x, 0)
    if kind in ("AiPrime", "Aip"):
        return _airy_scalar(x, 1)
    raise ValueError(f"unknown Airy kind {kind!r}")


# ---------------------------------------------------------------- erf


def _erf_series(z):
    total = 0.0
    term = z
    k = 0
    while True:
        t = term / (2 * k + 1)
        total += t
        if abs(t) <= 1e-17 * abs(total):
            break
        k += 1
        term *= -z * z / k
    return 2.0 / _SQRT_PI * total


def _erfcx_cf(z):
    """exp(z^2) erfc(z) for z >= 1 by a Lentz-evaluated continued fraction."""
    # erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    tiny = 1e-300
    f = z
    c = z
    d = 0.0
    for k in range(1, 5000):
        a = 0.5 * k
        d = z + a * d
        d = tiny if d == 0.0 else d
        c = z + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / (_SQRT_PI * f)


def _erf_erfc(z):
    if z < 0:
        e, ec = _erf_erfc(-z)
        return -e, 2.0 - ec
    if z <= 1.0:
        e = _erf_series(z)
        return e, 1.0 - e
    if z > 27.0:
        return 1.0, 0.0
    ec = _erfcx_cf(z) * math.exp(-z * z)
    return 1.0 - ec, ec


@_elementwise
def erf(z):
    return _erf_erfc(z)[0]


@_elementwise
def erfc(z):
    return _erf_erfc(z)[1]


@_elementwise
def erfcx(z):
    """Scaled complement exp(z^2) erfc(z), finite for large z."""
    if z >= 1.0:
        return _erfcx_cf(z)
    return math.exp(z * z) * _erf_erfc(z)[1]


def erf_pair(z):
    """(erf(z), erfc(z)) computed together so that they sum to one."""
    if np.ndim(z) == 0:
        return _erf_erfc(float(z))
    return erf(z), erfc(z)


# ---------------------------------------------------------------- roots


def find_root(f, lo: float, hi: float, tol: float = 1e-14) -> float:
    """Root of f in [lo, hi] by bisection, then a Newton (secant) polish."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (flo < 0) ^ (fhi < 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f = {flo:.3g}, {fhi:.3g}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= tol:
            break
    x = 0.5 * (lo + hi)
    h = max(hi - lo, 1e-8 * max(1.0, abs(x)))
    for _ in range(3):
        fx = f(x)
        slope = (f(x + h) - f(x - h)) / (2.0 * h)
        if slope == 0.0 or not math.isfinite(slope):
            break
        xn = x - fx / slope
        if not lo - tol <= xn <= hi + tol or abs(f(xn)) > abs(fx):
            break
        x = xn
        h = max(min(h, abs(fx / slope)), 1e-10 * max(1.0, abs(x)))
    return x


# ---------------------------------------------------------------- constants

J0_ZERO1 = find_root(j0, 2.0, 3.0)
AI_ZERO1 = find_root(lambda x: airy("Ai", x), -3.0, -2.0)
AI_PRIME_ZERO1 = find_root(lambda x: airy("AiPrime", x), -1.5, -0.5)

NAMED_CONSTANTS = {
    "j0_zero1": J0_ZERO1,
    "ai_zero1": AI_ZERO1,
    "ai_prime_zero1": AI_PRIME_ZERO1,
}
