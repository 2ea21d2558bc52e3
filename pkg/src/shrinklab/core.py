"""Problem dimensions, the (a, b) mixing-density family and region labels."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ProblemDims",
    "PriorHyper",
    "Observation",
    "Admissibility",
    "RegionLabel",
    "InvalidHyperparameterError",
    "pi_g",
    "h_seq",
    "h_seq_log_deriv",
    "k_seq",
    "k_seq_prime",
    "xi_threshold",
    "classify",
]


class InvalidHyperparameterError(ValueError):
    """Raised when (a, b) make the generalized Bayes estimator undefined."""


@dataclass(frozen=True)
class ProblemDims:
    p: int
    n: int

    def __post_init__(self):
        for name in ("p", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "n", int(self.n))

    @property
    def js_constant(self) -> float:
        """(p-2)/(n+2), the James-Stein shrinkage constant."""
        return (self.p - 2) / (self.n + 2)


@dataclass(frozen=True)
class PriorHyper:
    a: float
    b: float

    def violations(self, dims: ProblemDims) -> list[str]:
        out = []
        if not dims.p / 2 + self.a + 1 > 0:
            out.append(f"p/2+a+1>0 fails: {dims.p / 2 + self.a + 1:g}")
        if not self.b + 1 > 0:
            out.append(f"b+1>0 fails: {self.b + 1:g}")
        return out

    def is_valid(self, dims: ProblemDims) -> bool:
        return not self.violations(dims)

    def check(self, dims: ProblemDims) -> "PriorHyper":
        bad = self.violations(dims)
        if bad:
            raise InvalidHyperparameterError(
                f"estimator undefined for a={self.a:g}, b={self.b:g}, p={dims.p}: "
                + "; ".join(bad))
        return self


@dataclass(frozen=True)
class Observation:
    x: np.ndarray
    s: float
    w: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        x.setflags(write=False)
        s = float(self.s)
        if not (s > 0 and math.isfinite(s)):
            raise ValueError(f"s must be positive and finite, got {self.s}")
        if not np.all(np.isfinite(x)):
            raise ValueError("x must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "w", float(x @ x) / s)

    @property
    def p(self) -> int:
        return self.x.size


class Admissibility(str, enum.Enum):
    ADMISSIBLE_CASE_I = "ADMISSIBLE_CASE_I"
    ADMISSIBLE_CASE_II = "ADMISSIBLE_CASE_II"
    ADMISSIBLE_PROPER_MIXING = "ADMISSIBLE_PROPER_MIXING"
    INADMISSIBLE = "INADMISSIBLE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class RegionLabel:
    admissibility: Admissibility
    minimax: bool
    valid: bool


def pi_g(g, hyper: PriorHyper):
    """Mixing density (g+1)**-(a+2) * (g/(g+1))**b, with (g/(g+1))**0 == 1."""
    g_arr = np.asarray(g, dtype=float)
    if np.any(g_arr < 0):
        raise ValueError("pi_g is defined for g >= 0 only")
    with np.errstate(divide="ignore"):
        out = (g_arr + 1.0) ** (-(hyper.a + 2.0))
        if hyper.b != 0:
            out = out * (g_arr / (g_arr + 1.0)) ** hyper.b
    return out if out.ndim else float(out)


def h_seq(i, eta):
    """i / (i + |log eta|)."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("h_seq needs eta > 0")
    out = i / (i + np.abs(np.log(eta)))
    return out if out.ndim else float(out)


def h_seq_log_deriv(i, x):
    """eta * h_i'(eta) written in x = log(eta): -sign(x) i / (i + |x|)**2."""
    x = np.asarray(x, dtype=float)
    out = -np.sign(x) * i / (i + np.abs(x)) ** 2
    return out if out.ndim else float(out)


def _check_kj(j, g):
    if np.any(np.asarray(j) < 1):
        raise ValueError("k_seq needs j >= 1")
    if np.any(g < 0):
        raise ValueError("k_seq needs g >= 0")


def k_seq(j, g):
    """1 - log(g+1)/log(g+1+j), evaluated without cancellation for g >> j."""
    g = np.asarray(g, dtype=float)
    _check_kj(j, g)
    out = np.log1p(j / (g + 1.0)) / np.log(g + 1.0 + j)
    return out if out.ndim else float(out)


def k_seq_prime(j, g):
    g = np.asarray(g, dtype=float)
    _check_kj(j, g)
    gp = g + 1.0
    out = -(j / gp + k_seq(j, g)) / ((gp + j) * np.log(gp + j))
    return out if out.ndim else float(out)


def xi_threshold(dims: ProblemDims) -> float:
    """Upper end of the minimax range of a: -2 + (p-2)(n+2) / (2(2p+n-2))."""
    p, n = dims.p, dims.n
    if p < 3:
        raise ValueError(f"minimaxity threshold needs p >= 3, got p={p}")
    return -2.0 + (p - 2) * (n + 2) / (2.0 * (2 * p + n - 2))


def classify(hyper: PriorHyper, dims: ProblemDims) -> RegionLabel:
    a, b = hyper.a, hyper.b
    p, n = dims.p, dims.n
    valid = hyper.is_valid(dims)
    lower = -p / 2 - 1

    if not valid:
        adm = Admissibility.UNKNOWN
    elif a == -2 and b >= 0 and p >= 3:
        adm = Admissibility.ADMISSIBLE_CASE_II
    elif max(lower, -2) < a <= -1:
        adm = Admissibility.ADMISSIBLE_CASE_I
    elif -1 < a < n / 2:
        adm = Admissibility.ADMISSIBLE_PROPER_MIXING
    elif lower < a < -2:
        adm = Admissibility.INADMISSIBLE
    else:
        adm = Admissibility.UNKNOWN

    minimax = (valid and p >= 3 and n >= 2 and b >= 0
               and lower < a <= xi_threshold(dims))
    return RegionLabel(adm, minimax, valid)
