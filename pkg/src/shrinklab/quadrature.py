"""Gauss-Jacobi quadrature on (0, 1) with adaptive panel refinement.

All integrals in the package are reduced to the unit interval, where
algebraic endpoint singularities u**alpha * (1-u)**beta are absorbed into
the rule weights instead of being sampled.  Half-line integrals go through
the map x = u / (1 - u); integrals over (0, inf) with a kink or a
logarithmic scale are split at a point and log-transformed first.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import gammaln, roots_jacobi

__all__ = [
    "QuadratureError",
    "QuadConfig",
    "QuadResult",
    "jacobi_rule",
    "integrate_unit",
    "integrate_halfline",
    "integrate_semiinf",
    "integrate_2d",
    "radial_moment",
    "radial_moment_exact",
]

# hard cap on the number of live panels in one adaptive run
_MAX_PANELS = 2000


class QuadratureError(RuntimeError):
    """An adaptive rule failed to reach its tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class QuadConfig:
    base_order: int = 64
    max_refinements: int = 12
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14

    def __post_init__(self):
        if int(self.base_order) != self.base_order or self.base_order < 2:
            raise ValueError(f"base_order must be an integer >= 2, got {self.base_order}")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be non-negative")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")

    def tolerance(self, value: float) -> float:
        return max(self.rel_tol * abs(value), self.abs_tol)


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    evaluations: int
    converged: bool

    def __float__(self):
        return float(self.value)

    def checked(self, what: str = "integral") -> float:
        """Value, or QuadratureError when the rule did not converge."""
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge: value={self.value!r}, "
                f"err_estimate={self.err_estimate!r}", self)
        return float(self.value)


@lru_cache(maxsize=256)
def _cached_rule(order: int, alpha_exp: float, beta_exp: float):
    # scipy's weight is (1-x)**a (1+x)**b on [-1, 1]; u = (1+x)/2 puts
    # u**alpha_exp at the left end.
    x, w = roots_jacobi(order, beta_exp, alpha_exp)
    nodes = 0.5 * (1.0 + x)
    weights = w * 2.0 ** (-(alpha_exp + beta_exp + 1.0))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def jacobi_rule(order: int, alpha_exp: float = 0.0, beta_exp: float = 0.0):
    """Gauss-Jacobi nodes and weights on (0, 1).

    The rule integrates ``u**alpha_exp * (1-u)**beta_exp * P(u)`` exactly for
    polynomials P of degree up to ``2*order - 1``.  Returned arrays are
    read-only and shared between callers.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    if not (alpha_exp > -1.0 and beta_exp > -1.0):
        raise ValueError(
            f"Jacobi exponents must exceed -1, got ({alpha_exp}, {beta_exp})")
    return _cached_rule(int(order), float(alpha_exp), float(beta_exp))


class _Panel:
    __slots__ = ("lo", "hi", "depth", "value", "err")

    def __init__(self, lo, hi, depth):
        self.lo = lo
        self.hi = hi
        self.depth = depth
        self.value = 0.0
        self.err = 0.0

    def __lt__(self, other):
        # max-heap on error via heapq
        return self.err > other.err


def _panel_sum(f, lo, hi, alpha, beta, order):
    left = lo == 0.0
    right = hi == 1.0
    ea = alpha if left else 0.0
    eb = beta if right else 0.0
    u, w = jacobi_rule(order, ea, eb)
    h = hi - lo
    x = lo + h * u
    vals = np.asarray(f(x), dtype=float)
    if not left and alpha != 0.0:
        vals = vals * x ** alpha
    if not right and beta != 0.0:
        vals = vals * ((1.0 - hi) + h * (1.0 - u)) ** beta
    return h ** (1.0 + ea + eb) * float(np.dot(w, vals))


def _evaluate(panel, f, alpha, beta, order):
    coarse = _panel_sum(f, panel.lo, panel.hi, alpha, beta, order)
    fine = _panel_sum(f, panel.lo, panel.hi, alpha, beta, 2 * order)
    panel.value = fine
    panel.err = abs(fine - coarse) if math.isfinite(fine) else math.inf
    return 3 * order


def integrate_unit(f: Callable[[np.ndarray], np.ndarray],
                   weight: tuple[float, float] = (0.0, 0.0),
                   cfg: QuadConfig | None = None) -> QuadResult:
    """Adaptive integral of ``u**alpha (1-u)**beta f(u)`` over (0, 1).

    ``f`` is called with 1-D arrays of interior points.  Each panel is
    evaluated at orders n and 2n; the difference is its error estimate and
    the panel with the largest estimate is bisected until the total meets
    the tolerance.  Panels deeper than ``cfg.max_refinements`` are never
    split, so an unresolvable integrand comes back with ``converged=False``.
    """
    cfg = cfg or QuadConfig()
    alpha, beta = float(weight[0]), float(weight[1])
    if not (alpha > -1.0 and beta > -1.0):
        raise ValueError(f"weight exponents must exceed -1, got {weight}")
    order = cfg.base_order

    root = _Panel(0.0, 1.0, 0)
    evals = _evaluate(root, f, alpha, beta, order)
    live = [root]
    frozen = []
    while True:
        total = sum(p.value for p in live) + sum(p.value for p in frozen)
        err = sum(p.err for p in live) + sum(p.err for p in frozen)
        if not math.isfinite(total):
            return QuadResult(total, math.inf, evals, False)
        if err <= cfg.tolerance(total) or not live:
            break
        if len(live) + len(frozen) >= _MAX_PANELS:
            break
        worst = heapq.heappop(live)
        if worst.depth >= cfg.max_refinements:
            frozen.append(worst)
            continue
        mid = 0.5 * (worst.lo + worst.hi)
        for lo, hi in ((worst.lo, mid), (mid, worst.hi)):
            child = _Panel(lo, hi, worst.depth + 1)
            evals += _evaluate(child, f, alpha, beta, order)
            heapq.heappush(live, child)
    return QuadResult(total, err, evals, err <= cfg.tolerance(total))


def _far_tail_zero(vals, u):
    # overflow (inf*0, inf/inf) past the map's midpoint is underflow of a
    # decaying integrand; anything non-finite nearer the origin is real.
    bad = ~np.isfinite(vals)
    if bad.any():
        vals = np.where(bad & (u > 0.5), 0.0, vals)
    return vals


def integrate_halfline(f: Callable[[np.ndarray], np.ndarray],
                       cfg: QuadConfig | None = None,
                       alpha_exp: float = 0.0) -> QuadResult:
    """Integral of f over (0, inf) via x = u / (1 - u).

    ``alpha_exp`` places a Jacobi weight u**alpha_exp at the origin; f is
    then expected to carry the compensating factor (x/u)**alpha_exp itself.
    """
    def mapped(u):
        one_minus = 1.0 - u
        x = u / one_minus
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = np.asarray(f(x), dtype=float) / one_minus ** 2
        return _far_tail_zero(vals, u)

    return integrate_unit(mapped, (alpha_exp, 0.0), cfg)


def _combine(*results: QuadResult) -> QuadResult:
    return QuadResult(
        value=sum(r.value for r in results),
        err_estimate=sum(r.err_estimate for r in results),
        evaluations=sum(r.evaluations for r in results),
        converged=all(r.converged for r in results),
    )


def integrate_semiinf(f: Callable[[np.ndarray], np.ndarray],
                      cfg: QuadConfig | None = None,
                      split: float = 1.0,
                      log_scale: bool = False) -> QuadResult:
    """Integral over (0, inf), split at ``split`` and log-mapped on each side.

    With ``log_scale=True`` the integrand is supplied in the coordinate
    x = log(eta / split), already multiplied by the Jacobian eta; this is the
    form to use for slowly decaying integrands such as ``h(eta)**2 / eta``
    whose tails lie beyond double precision range in eta.
    """
    if not split > 0:
        raise ValueError("split point must be positive")
    if log_scale:
        lower = integrate_halfline(lambda x: f(-x), cfg)
        upper = integrate_halfline(f, cfg)
    else:
        def lower_f(x):
            eta = split * np.exp(-x)
            return f(eta) * eta

        def upper_f(x):
            eta = split * np.exp(x)
            return f(eta) * eta

        lower = integrate_halfline(lower_f, cfg)
        upper = integrate_halfline(upper_f, cfg)
    return _combine(lower, upper)


SplitSpec = Union[float, Callable[[np.ndarray], np.ndarray]]


@lru_cache(maxsize=32)
def _inner_rule(panels: int, order: int):
    # composite Gauss-Legendre on (0, 1) in the halfline map coordinate
    u, w = jacobi_rule(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * u[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    x = nodes / (1.0 - nodes)
    jac = weights / (1.0 - nodes) ** 2
    x.setflags(write=False)
    jac.setflags(write=False)
    return nodes, x, jac


def _inner_integral(f, u, split, panels, order):
    nodes, x, jac = _inner_rule(panels, order)
    c = np.asarray(split, dtype=float).reshape(-1, 1) * np.ones((u.size, 1))
    uu = u.reshape(-1, 1)
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        eta_lo = c * np.exp(-x)[None, :]
        eta_hi = c * np.exp(x)[None, :]
        lo = np.asarray(f(uu, eta_lo), dtype=float) * eta_lo
        hi = np.asarray(f(uu, eta_hi), dtype=float) * eta_hi
    lo = _far_tail_zero(lo, nodes[None, :])
    hi = _far_tail_zero(hi, nodes[None, :])
    return (lo + hi) @ jac


def integrate_2d(f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 weight: tuple[float, float] = (0.0, 0.0),
                 cfg: QuadConfig | None = None,
                 split: SplitSpec = 1.0,
                 inner_order: int = 16,
                 inner_panels: int = 16,
                 max_inner_doublings: int = 5) -> QuadResult:
    """Iterated integral of f(u, eta) over (0, 1) x (0, inf).

    The outer variable carries the Jacobi weight ``u**alpha (1-u)**beta``
    and is integrated adaptively.  For every batch of outer nodes the inner
    eta-integral is split at ``split`` (a constant or a function of u, e.g.
    a kink location), log-mapped on both sides and evaluated with a
    composite rule whose panel count doubles until two successive counts
    agree to ``cfg.rel_tol``.  ``f`` receives u with shape (N, 1) and eta
    with shape (N, M).
    """
    cfg = cfg or QuadConfig()
    state = {"inner_err": 0.0, "inner_ok": True, "evals": 0}

    def outer(u):
        s = split(u) if callable(split) else split
        panels = inner_panels
        prev = _inner_integral(f, u, s, panels, inner_order)
        state["evals"] += 2 * u.size * panels * inner_order
        for _ in range(max_inner_doublings):
            panels *= 2
            cur = _inner_integral(f, u, s, panels, inner_order)
            state["evals"] += 2 * u.size * panels * inner_order
            scale = max(float(np.max(np.abs(cur))), cfg.abs_tol)
            rel = float(np.max(np.abs(cur - prev))) / scale
            prev = cur
            if rel <= cfg.rel_tol:
                break
        else:
            state["inner_ok"] = False
        state["inner_err"] = max(state["inner_err"], rel)
        return prev

    res = integrate_unit(outer, weight, cfg)
    return QuadResult(
        value=res.value,
        err_estimate=res.err_estimate + abs(res.value) * state["inner_err"],
        evaluations=state["evals"],
        converged=res.converged and state["inner_ok"],
    )


def _check_radial(p, alpha, beta):
    if not (p >= 1 and beta > alpha > -p / 2):
        raise ValueError(f"need p >= 1 and beta > alpha > -p/2, got {(p, alpha, beta)}")


def radial_moment(p: int, alpha: float, beta: float,
                  cfg: QuadConfig | None = None) -> QuadResult:
    """int over R^p of |y|^(2 alpha) (1+|y|^2)^(-p/2-beta) dy, by radial quadrature."""
    _check_radial(p, alpha, beta)
    log_area = math.log(2.0) + (p / 2) * math.log(math.pi) - math.lgamma(p / 2)

    def f(r):
        return np.exp(log_area + (p - 1 + 2 * alpha) * np.log(r)
                      - (p / 2 + beta) * np.log1p(r * r))

    return integrate_semiinf(f, cfg)


def radial_moment_exact(p: int, alpha: float, beta: float) -> float:
    """Gamma-function closed form of :func:`radial_moment`."""
    _check_radial(p, alpha, beta)
    return math.exp((p / 2) * math.log(math.pi) + gammaln(p / 2 + alpha)
                    + gammaln(beta - alpha) - gammaln(p / 2) - gammaln(p / 2 + beta))
