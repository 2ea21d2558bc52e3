"""Integrals of the proper prior sequences h_i (on eta) and k_j (on g).

The eta-integrals are done in x = log(eta), where h_i(eta) = i/(i+|x|) and
both integrands are rational.  The g-integrals are done in x = log(g+1):
the transition of k_j sits at g ~ j, far too close to u = 0 in the
u = 1/(g+1) coordinate once j reaches 1e6.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._parallel import ordered_map
from .core import PriorHyper, k_seq, k_seq_prime
from .quadrature import QuadConfig, integrate_halfline, integrate_semiinf

__all__ = [
    "BlythReport",
    "h_norm_integral",
    "h_deriv_integral",
    "k_over_integral",
    "k_deriv_integral",
    "pi_k_sq_integral",
    "k_pointwise_bound_holds",
    "k_bounds",
    "blyth_products",
    "blyth_scan",
    "BLYTH_COLUMNS",
]

BLYTH_COLUMNS = ("j", "i", "I_h_norm", "I_h_deriv", "I_k_over", "I_k_deriv",
                 "product1", "bound1", "product2", "bound2", "pass")


def _check_i(i):
    if not i > 0:
        raise ValueError(f"i must be positive, got {i}")


def h_norm_integral(i: float, cfg: QuadConfig | None = None) -> float:
    """int_0^inf h_i(eta)^2 / eta d eta  (equals 2i)."""
    _check_i(i)
    res = integrate_semiinf(lambda x: (i / (i + np.abs(x))) ** 2, cfg, log_scale=True)
    return res.checked("h_i norm integral")


def h_deriv_integral(i: float, cfg: QuadConfig | None = None) -> float:
    """int_0^inf eta h_i'(eta)^2 d eta  (equals 2/(3i))."""
    _check_i(i)
    res = integrate_semiinf(lambda x: i ** 2 / (i + np.abs(x)) ** 4, cfg, log_scale=True)
    return res.checked("h_i derivative integral")


def _g_integral(j, hyper, integrand, cfg, what):
    """int over g in (0, inf) of pi(g) * integrand(g, x) dx with x = log(g+1)."""
    if not j >= 1:
        raise ValueError(f"j must be >= 1, got {j}")
    a, b = hyper.a, hyper.b
    if not b > -1:
        raise ValueError("need b > -1")

    def f(x):
        g = np.expm1(x)
        # (g/(g+1))^b = (1-e^-x)^b ~ x^b at 0; the halfline weight u^b takes it
        tilt = (-np.expm1(-x) * (1.0 + x) / x) ** b if b != 0 else 1.0
        return np.exp(-(a + 2.0) * x) * tilt * integrand(g)

    return integrate_halfline(f, cfg, alpha_exp=b).checked(what)


def k_over_integral(j: float, hyper: PriorHyper, cfg: QuadConfig | None = None) -> float:
    """int_0^inf pi(g) k_j(g)^2 / (g+1) dg."""
    return _g_integral(j, hyper, lambda g: k_seq(j, g) ** 2, cfg, "k_j over integral")


def k_deriv_integral(j: float, hyper: PriorHyper, cfg: QuadConfig | None = None) -> float:
    """int_0^inf (g+1) pi(g) k_j'(g)^2 dg."""
    return _g_integral(j, hyper, lambda g: ((g + 1.0) * k_seq_prime(j, g)) ** 2, cfg,
                       "k_j derivative integral")


def pi_k_sq_integral(j: float, hyper: PriorHyper, cfg: QuadConfig | None = None) -> float:
    """int_0^inf pi(g) k_j(g)^2 dg, finite for a >= -2 and b > -1."""
    if hyper.a < -2:
        raise ValueError("pi k_j^2 is only known to be integrable for a >= -2")
    return _g_integral(j, hyper, lambda g: (g + 1.0) * k_seq(j, g) ** 2, cfg,
                       "pi k_j^2 integral")


def k_pointwise_bound_holds(j: float, g) -> bool:
    """k_j(g) < (1+j)log(1+j) / ((g+1+j) log(g+1+j)) strictly for all g > 0 given."""
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise ValueError("the bound is an equality at g = 0; pass g > 0")
    bound = (1 + j) * math.log1p(j) / ((g + 1 + j) * np.log(g + 1 + j))
    return bool(np.all(k_seq(j, g) < bound))


def k_bounds(j: float, hyper: PriorHyper, cfg: QuadConfig | None = None) -> dict:
    """The four k_j bounds at one j, as name -> (value, bound, holds)."""
    b = hyper.b
    g_grid = np.logspace(-6, 12, 400)
    ratio = k_seq(j, g_grid) * (g_grid + 1 + j) * np.log(g_grid + 1 + j) / (
        (1 + j) * math.log1p(j))
    pi_le_1 = hyper.a >= -2 and b >= 0
    out = {
        "pointwise": (float(ratio.max()), 1.0, bool(ratio.max() < 1.0)),
    }
    v = pi_k_sq_integral(j, hyper, cfg)
    bd = 1 / (b + 1) + max(1.0, 2.0 ** (-b)) * (1 + j)
    out["pi_k_sq"] = (v, bd, v < bd)
    if pi_le_1:
        v = k_over_integral(j, hyper, cfg)
        bd = 2 * math.log1p(j)
        out["k_over"] = (v, bd, v < bd)
        v = k_deriv_integral(j, hyper, cfg)
        bd = 5 / math.log1p(j)
        out["k_deriv"] = (v, bd, v < bd)
    return out


@dataclass(frozen=True)
class BlythReport:
    i: float
    j: float
    I_h_norm: float
    I_h_deriv: float
    I_k_over: float
    I_k_deriv: float
    product1: float
    product2: float
    bound1: float
    bound2: float

    @property
    def passed(self) -> bool:
        return self.product1 < self.bound1 and self.product2 < self.bound2

    def row(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return {k: d[k] for k in BLYTH_COLUMNS}


def blyth_products(j: float, hyper: PriorHyper, cfg: QuadConfig | None = None,
                   i: float | None = None) -> BlythReport:
    """Growth-condition products with the coupling i = log(1+j) by default."""
    if hyper.a != -2 or hyper.b < 0:
        raise ValueError("the product bounds are stated for a = -2, b >= 0")
    if i is None:
        if j < 2:
            raise ValueError("need j >= 2 so that i = log(1+j) >= 1")
        i = math.log1p(j)
    hn = h_norm_integral(i, cfg)
    hd = h_deriv_integral(i, cfg)
    ko = k_over_integral(j, hyper, cfg)
    kd = k_deriv_integral(j, hyper, cfg)
    lj = math.log1p(j)
    return BlythReport(
        i=i, j=j, I_h_norm=hn, I_h_deriv=hd, I_k_over=ko, I_k_deriv=kd,
        product1=hd * ko, product2=hn * kd,
        bound1=4 * lj / i, bound2=10 * i / lj,
    )


def blyth_scan(js, hyper: PriorHyper, cfg: QuadConfig | None = None) -> list[BlythReport]:
    return ordered_map(lambda j: blyth_products(j, hyper, cfg), js)
