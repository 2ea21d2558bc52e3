"""Self-checks behind ``shrinklab verify``.

Each check compares a computed quantity against an independent closed form
or a theoretical inequality and returns a :class:`CheckResult`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    Admissibility,
    Observation,
    PriorHyper,
    ProblemDims,
    classify,
    xi_threshold,
)
from .estimators import (
    GeneralizedBayesShrinkage,
    JamesStein,
    ShrinkSpec,
    delta_star,
    ibp_terms,
    identity_gap,
    phi_over_w,
)
from .quadrature import QuadConfig, radial_moment, radial_moment_exact
from .risk import dominance_check, minimax_check
from .sequences import blyth_products, h_deriv_integral, h_norm_integral, k_bounds

__all__ = ["CheckResult", "CHECKS", "run_checks"]

W_GRID = (0.0, 0.1, 1.0, 10.0, 100.0, 1e4)
LAMBDA_GRID = (0.0, 1.0, 4.0, 16.0, 100.0, 1e4)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _closed_form(cfg, **_):
    worst = 0.0
    for p, n in ((3, 2), (5, 4), (8, 6)):
        dims = ProblemDims(p, n)
        spec = ShrinkSpec(dims, PriorHyper(-2.0, n / 2), cfg)
        c = dims.js_constant
        for w in W_GRID:
            ref = c / (w + c + 1)
            worst = max(worst, abs(phi_over_w(w, spec) - ref) / ref)
    return worst <= 1e-8, f"max relative error {worst:.3g}"


def _identity(cfg, **_):
    dims = ProblemDims(5, 4)
    worst = max(identity_gap(w, dims, b, cfg) for b in (0.0, 1.0, 2.0) for w in W_GRID)
    return worst <= 1e-6, f"max gap {worst:.3g}"


def _finite_identity(cfg, **_):
    dims = ProblemDims(5, 4)
    worst = 0.0
    for w, s in ((1.0, 1.0), (4.0, 0.5)):
        for j in (10.0, 1000.0):
            for b in (0.0, 2.0):
                t = ibp_terms(w, s, math.log1p(j), j, dims, b, cfg)
                worst = max(worst, t.rel_gap)
    return worst <= 1e-4, f"max relative gap {worst:.3g}"


def _h_integrals(cfg, **_):
    worst, ok = 0.0, True
    for i in (1.0, 3.0, 10.0):
        hn, hd = h_norm_integral(i, cfg), h_deriv_integral(i, cfg)
        worst = max(worst, abs(hn / (2 * i) - 1), abs(hd * 3 * i / 2 - 1))
        ok &= hd <= 2 / i
    return ok and worst <= 1e-8, f"max relative error {worst:.3g}"


def _k_bounds(cfg, **_):
    failed = []
    for b in (0.0, 0.5, 2.0):
        for j in (1.0, 10.0, 1e2, 1e3, 1e4, 1e6):
            for name, (_, _, holds) in k_bounds(j, PriorHyper(-2.0, b), cfg).items():
                if not holds:
                    failed.append(f"{name}@j={j:g},b={b:g}")
    return not failed, "all hold" if not failed else ", ".join(failed)


def _blyth(cfg, **_):
    reps = [blyth_products(j, PriorHyper(-2.0, b), cfg)
            for b in (0.0, 2.0) for j in (2.0, 10.0, 1e2, 1e3, 1e4, 1e6)]
    p1 = max(r.product1 for r in reps)
    p2 = max(r.product2 for r in reps)
    return all(r.passed for r in reps), f"max product1 {p1:.4g} (<4), max product2 {p2:.4g} (<10)"


def _minimax(cfg, reps, seed, **_):
    bad = []
    for p, n, a, b in ((5, 4, -2.0, 0.0), (5, 4, -2.0, 2.0), (5, 4, -1.5, 0.0),
                       (3, 2, -2.0, 0.0)):
        est = GeneralizedBayesShrinkage(n=n, a=a, b=b)
        for v in minimax_check(est, LAMBDA_GRID, ProblemDims(p, n), reps, seed):
            if not v.passed:
                bad.append(f"(p={p},a={a:g},b={b:g},lambda={v.estimate.lam:g})")
    return not bad, "all PASS" if not bad else "FAIL at " + ", ".join(bad)


def _dominance(cfg, reps, seed, **_):
    rows = dominance_check(GeneralizedBayesShrinkage(n=4), JamesStein(n=4),
                           LAMBDA_GRID, ProblemDims(5, 4), reps, seed)
    worst = max(r.mean_diff - 4 * r.std_err_diff for r in rows)
    return worst <= 0, f"max(mean_diff - 4 SE) {worst:.3g}"


def _equivariance(cfg, seed, **_):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(3, 9))
        n = int(rng.integers(1, 9))
        dims = ProblemDims(p, n)
        a = float(rng.uniform(-p / 2 - 1 + 0.05, n / 2))
        b = float(rng.uniform(-0.9, 3))
        spec = ShrinkSpec(dims, PriorHyper(a, b), cfg)
        x = rng.normal(size=p) * 10 ** rng.uniform(-1, 1)
        s = float(10 ** rng.uniform(-1, 1))
        c = float(10 ** rng.uniform(-2, 2))
        d1 = delta_star(Observation(c * x, c * c * s), spec)
        d0 = delta_star(Observation(x, s), spec)
        worst = max(worst, float(np.linalg.norm(d1 - c * d0) / np.linalg.norm(x)))
    return worst <= 1e-9, f"max relative deviation {worst:.3g}"


def _radial(cfg, seed, **_):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        p = int(rng.integers(1, 11))
        alpha = float(rng.uniform(-p / 2 + 0.05, 3))
        beta = alpha + float(rng.uniform(0.5, 4))
        got = radial_moment(p, alpha, beta, cfg).checked("radial moment")
        worst = max(worst, abs(got / radial_moment_exact(p, alpha, beta) - 1))
    return worst <= 1e-7, f"max relative error {worst:.3g}"


def _region(cfg, **_):
    dims = ProblemDims(5, 4)
    xi = xi_threshold(dims)
    bad = 0
    for a in np.arange(-3.5, 2.0 + 1e-9, 0.25):
        for b in np.arange(-0.5, 3.0 + 1e-9, 0.25):
            lab = classify(PriorHyper(float(a), float(b)), dims)
            if -3.5 < a < -2 and lab.admissibility is not Admissibility.INADMISSIBLE:
                bad += 1
            if a == -2 and (lab.admissibility is Admissibility.ADMISSIBLE_CASE_II) != (b >= 0):
                bad += 1
            if a > -2 and a <= -1 and lab.admissibility is not Admissibility.ADMISSIBLE_CASE_I:
                bad += 1
            if lab.minimax != (b >= 0 and a <= xi and a > -3.5):
                bad += 1
    return bad == 0, f"{bad} mislabeled cells"


CHECKS: dict[str, Callable] = {
    "closed_form": _closed_form,
    "identity": _identity,
    "finite_identity": _finite_identity,
    "h_integrals": _h_integrals,
    "k_bounds": _k_bounds,
    "blyth_products": _blyth,
    "minimax": _minimax,
    "dominance": _dominance,
    "equivariance": _equivariance,
    "radial": _radial,
    "region_map": _region,
}


def run_checks(cfg: QuadConfig | None = None, reps: int = 100_000, seed: int = 0,
               only=None) -> list[CheckResult]:
    """Run the named checks (all by default) in a fixed order."""
    cfg = cfg or QuadConfig()
    names = list(CHECKS) if only is None else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(CHECKS)}")
    out = []
    for name in names:
        passed, detail = CHECKS[name](cfg, reps=reps, seed=seed)
        out.append(CheckResult(name, bool(passed), detail))
    return out
