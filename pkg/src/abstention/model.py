"""Estimation tasks, fiducial families, cost matrices and fidelity bookkeeping.

The fidelity of a covariant estimation protocol with abstention reduces to a
quadratic form in the transformed amplitudes xi:

    F = 1/2 + 1/2 <xi|M|xi>,   |xi| = 1,   0 <= xi_j <= lambda c_j,

with M symmetric tridiagonal and lambda = (1 - Q)^(-1/2).
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

NORM_TOL = 1e-12
ROUNDTRIP_TOL = 1e-9


class InconsistentSolution(RuntimeError):
    """A transformed state that no filter 0 <= f_j <= 1 can produce."""


class TaskKind(enum.Enum):
    PHASE = "phase"
    DIRECTION = "direction"
    FRAME_DEGENERATE = "frame_degenerate"
    FRAME_RYDBERG = "frame_rydberg"

    @property
    def d(self) -> int:
        """Dimension of the parameter manifold S^d."""
        return {"phase": 1, "direction": 2}.get(self.value, 3)

    def qubits(self, n: int) -> int:
        """Number of qubits N for maximum index n."""
        return n if self is TaskKind.PHASE else 2 * n

    @classmethod
    def parse(cls, value) -> "TaskKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown task kind {value!r}") from None


FAMILIES = ("flat_phase", "equator", "povm_seed_direction", "antiparallel", "linear_ramp", "custom")


@dataclass(frozen=True)
class FiducialState:
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size != self.n + 1:
            raise ValueError(f"expected {self.n + 1} coefficients, got shape {c.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("fiducial coefficients must be finite and non-negative")
        if abs(float(np.dot(c, c)) - 1.0) > NORM_TOL:
            raise ValueError("fiducial coefficients are not normalized")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class CostMatrix:
    n: int
    diag: np.ndarray
    couplings: np.ndarray
    kind: TaskKind | None = None

    def __post_init__(self):
        h = np.asarray(self.diag, dtype=float)
        w = np.asarray(self.couplings, dtype=float)
        if h.shape != (self.n + 1,) or w.shape != (self.n,):
            raise ValueError("diag must have n+1 entries and couplings n entries")
        if np.any(w <= 0):
            raise ValueError("couplings must be strictly positive")
        h.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "diag", h)
        object.__setattr__(self, "couplings", w)

    @property
    def shift(self) -> float:
        """Diagonal shift making every entry of M non-negative."""
        return max(0.0, -float(self.diag.min()))

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.couplings, 1) + np.diag(self.couplings, -1)

    def matvec(self, x) -> np.ndarray:
        return kernels.tridiag_matvec(self.diag, self.couplings, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class AbstentionBudget:
    q: float

    def __post_init__(self):
        q = float(self.q)
        if not 0.0 <= q < 1.0:
            raise ValueError(f"abstention rate must lie in [0, 1), got {self.q}")
        object.__setattr__(self, "q", q)

    @property
    def qbar(self) -> float:
        return 1.0 - self.q

    @property
    def lam(self) -> float:
        return 1.0 / math.sqrt(self.qbar)


def build_cost_matrix(kind, n: int) -> CostMatrix:
    kind = TaskKind.parse(kind)
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    n = int(n)
    j = np.arange(n + 1, dtype=float)
    k = np.arange(1, n + 1, dtype=float)
    if kind is TaskKind.PHASE:
        h = np.zeros(n + 1)
        w = np.full(n, 0.5)
    elif kind is TaskKind.DIRECTION:
        h = np.zeros(n + 1)
        w = k / np.sqrt(4.0 * k * k - 1.0)
    elif kind is TaskKind.FRAME_RYDBERG:
        h = -1.0 / (2.0 * (j + 1.0))
        w = 0.5 * np.sqrt((2.0 * k - 1.0) / (2.0 * k + 1.0))
    else:
        h = np.zeros(n + 1)
        h[0] = -0.5
        h[n] += -1.0 / (2 * n + 2)
        w = np.full(n, 0.5)
        w[-1] = 1.0 / (2.0 * math.sqrt(2 * n + 1))
    return CostMatrix(n, h, w, kind)


def _log_binom_amplitudes(n: int) -> np.ndarray:
    j = np.arange(n + 1)
    logc = np.array([0.5 * (math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)) for i in j])
    return logc - 0.5 * n * math.log(2.0)


def _antiparallel_log(n: int) -> np.ndarray:
    out = np.empty(n + 1)
    for i in range(n + 1):
        out[i] = math.lgamma(n + 1) + 0.5 * (
            math.log(2 * i + 1) - math.lgamma(n - i + 1) - math.lgamma(n + i + 2)
        )
    return out


def make_fiducial(family: str, n: int, coeffs=None) -> FiducialState:
    """Normalized fiducial coefficients c_0..c_n for a named family.

    Log-domain families (equator, antiparallel) are evaluated with lgamma so
    n can reach 10^4 without overflow.  ``custom`` takes ``coeffs`` (any
    non-negative sequence) and renormalizes it.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    n = int(n)
    if family == "flat_phase":
        c = np.full(n + 1, 1.0 / math.sqrt(n + 1))
    elif family == "equator":
        c = np.exp(_log_binom_amplitudes(n))
    elif family == "povm_seed_direction":
        c = np.sqrt(2.0 * np.arange(n + 1) + 1.0) / (n + 1)
    elif family == "antiparallel":
        c = np.exp(_antiparallel_log(n))
    elif family == "linear_ramp":
        c = (n - np.arange(n + 1, dtype=float)) / math.sqrt(n * (n + 1) * (2 * n + 1) / 6.0)
    elif family == "custom":
        if coeffs is None:
            raise ValueError("custom family needs explicit coefficients")
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (n + 1,):
            raise ValueError(f"expected {n + 1} coefficients, got {c.size}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("custom coefficients must be finite and non-negative")
        norm = math.sqrt(float(np.dot(c, c)))
        if norm == 0.0:
            raise ValueError("custom coefficients are all zero")
        if abs(norm * norm - 1.0) > 1e-6:
            log.warning("custom coefficients renormalized (|c|^2 = %.6g)", norm * norm)
        c = c / norm
    else:
        raise ValueError(f"unknown fiducial family {family!r}")
    # final rescale absorbs rounding from the closed forms
    c = c / math.sqrt(math.fsum(c * c))
    return FiducialState(n, c)


def read_coeff_file(path) -> np.ndarray:
    """Coefficients from a text file: one number per line, '#' comments."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
        if v < 0 or not math.isfinite(v):
            raise ValueError(f"{path}:{lineno}: coefficient must be finite and non-negative")
        values.append(v)
    if len(values) < 2:
        raise ValueError(f"{path}: need at least two coefficients")
    return np.array(values)


def fiducial_from_file(path) -> FiducialState:
    c = read_coeff_file(path)
    return make_fiducial("custom", c.size - 1, c)


def quadratic_form(m: CostMatrix, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (m.n + 1,):
        raise ValueError(f"state has {xi.size} components, matrix order is {m.n + 1}")
    return float(kernels.quad_form(m.diag, m.couplings, xi))


@dataclass(frozen=True)
class Fidelity:
    F: float
    one_minus_F: float
    error: float
    S: float


def fidelity_conversions(delta: float, d: int) -> Fidelity:
    """F = (1 + delta)/2 plus the mean error per axis (e1) or total error (e3)."""
    delta = float(delta)
    if not -1.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [-1, 1], got {delta}")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    one_minus = (1.0 - delta) / 2.0
    err = (8.0 if d == 3 else 4.0) * one_minus
    return Fidelity(F=(1.0 + delta) / 2.0, one_minus_F=one_minus, error=err, S=1.0 - delta)


def filter_coefficients(c: FiducialState, xi, budget: AbstentionBudget) -> np.ndarray:
    """Abstention filter f_j recovering a transformed state xi.

    Inverts xi_j = c_j sqrt(1 - f_j) / sqrt(Qbar); components with c_j = 0 get
    f_j = 1 (they carry no weight).
    """
    cc = np.asarray(c.coeffs, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != cc.shape:
        raise ValueError("state and fiducial have different lengths")
    f = np.ones_like(cc)
    pos = cc > 0
    if np.any(np.abs(xi[~pos]) > ROUNDTRIP_TOL):
        raise InconsistentSolution("xi is non-zero where the fiducial vanishes")
    f[pos] = 1.0 - budget.qbar * xi[pos] ** 2 / cc[pos] ** 2
    if np.any(f < -ROUNDTRIP_TOL) or np.any(f > 1.0 + ROUNDTRIP_TOL):
        bad = int(np.argmax(np.maximum(-f, f - 1.0)))
        raise InconsistentSolution(f"filter coefficient f[{bad}] = {f[bad]:.3e} outside [0, 1]")
    return f
