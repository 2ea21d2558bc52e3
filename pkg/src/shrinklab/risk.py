"""Monte Carlo risk under the scaled loss eta * |delta - theta|^2.

Equivariant estimators (1 - psi(w)) x have risk depending on (theta, eta)
only through lambda = eta |theta|^2, so simulations run at
theta = (sqrt(lambda), 0, ..., 0) and eta = 1.

Random numbers come in fixed blocks of replicates; block k of stream r is
drawn from a Philox generator keyed by (seed, r, k), so results do not
depend on how blocks are scheduled across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from ._parallel import ordered_map
from .core import Observation, ProblemDims

__all__ = [
    "RiskEstimate",
    "ComparisonRow",
    "MinimaxVerdict",
    "BLOCK_SIZE",
    "draw_standard",
    "sample_obs",
    "prepare_estimator",
    "risk_at",
    "risk_mc",
    "risk_curve",
    "minimax_check",
    "dominance_check",
]

BLOCK_SIZE = 8192
MARGIN = 4.0
MIN_REPS = 1000


@dataclass(frozen=True)
class RiskEstimate:
    lam: float
    mean_risk: float
    std_err: float
    reps: int
    seed: int


@dataclass(frozen=True)
class ComparisonRow:
    lam: float
    mean_diff: float
    std_err_diff: float
    reps: int

    @property
    def consistent_with_domination(self) -> bool:
        return self.mean_diff - MARGIN * self.std_err_diff <= 0


@dataclass(frozen=True)
class MinimaxVerdict:
    estimate: RiskEstimate
    bound: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def draw_standard(dims: ProblemDims, reps: int, seed: int, stream: int = 0):
    """Standard normals Z (reps, p) and chi-square(n) draws C (reps,)."""
    # whole blocks are always drawn so a run is a prefix of any longer run
    zs, cs = [], []
    for k in range(math.ceil(reps / BLOCK_SIZE)):
        rng = _block_rng(seed, stream, k)
        zs.append(rng.standard_normal((BLOCK_SIZE, dims.p)))
        cs.append(np.square(rng.standard_normal((BLOCK_SIZE, dims.n))).sum(axis=1))
    return np.concatenate(zs)[:reps], np.concatenate(cs)[:reps]


def sample_obs(theta, eta: float, dims: ProblemDims, seed: int) -> Observation:
    """One draw of X ~ N_p(theta, I/eta) and S ~ chi2_n / eta."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dims.p,):
        raise ValueError(f"theta must have length {dims.p}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    z, c = draw_standard(dims, 1, seed)
    return Observation(theta + z[0] / math.sqrt(eta), c[0] / eta)


def prepare_estimator(estimator, dims: ProblemDims):
    """Fitted copy of ``estimator`` for dimension p, interpolating where it can."""
    n = getattr(estimator, "n", dims.n)
    if n != dims.n:
        raise ValueError(f"estimator was built for n={n}, simulation uses n={dims.n}")
    est = clone(estimator)
    if "interpolate" in est.get_params():
        est.set_params(interpolate=True)
    return est.fit(np.zeros((1, dims.p)))


def _is_ready(estimator, dims):
    return getattr(estimator, "n_features_in_", None) == dims.p and (
        getattr(estimator, "table_", 0) is not None)


def _losses(estimator, theta, eta, z, c):
    x = theta[None, :] + z / math.sqrt(eta)
    s = c / eta
    delta = estimator.predict(x, s)
    return eta * np.square(delta - theta[None, :]).sum(axis=1)


def _summary(losses):
    reps = losses.size
    return float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(reps))


def _check_reps(reps):
    if reps < MIN_REPS:
        raise ValueError(f"reps must be at least {MIN_REPS}, got {reps}")


def risk_at(estimator, theta, eta: float, dims: ProblemDims, reps: int, seed: int,
            stream: int = 0) -> RiskEstimate:
    """Risk at an arbitrary (theta, eta), using the same draws as risk_mc."""
    _check_reps(reps)
    theta = np.asarray(theta, dtype=float)
    if not _is_ready(estimator, dims):
        estimator = prepare_estimator(estimator, dims)
    z, c = draw_standard(dims, reps, seed, stream)
    mean, se = _summary(_losses(estimator, theta, eta, z, c))
    return RiskEstimate(eta * float(theta @ theta), mean, se, reps, seed)


def _theta_for(lam, dims):
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    theta = np.zeros(dims.p)
    theta[0] = math.sqrt(lam)
    return theta


def risk_mc(estimator, lam: float, dims: ProblemDims, reps: int, seed: int,
            stream: int = 0) -> RiskEstimate:
    res = risk_at(estimator, _theta_for(lam, dims), 1.0, dims, reps, seed, stream)
    return RiskEstimate(float(lam), res.mean_risk, res.std_err, reps, seed)


def risk_curve(estimator, lambda_grid, dims: ProblemDims, reps: int, seed: int):
    """risk_mc over a grid; grid point k uses random stream k."""
    _check_reps(reps)
    est = estimator if _is_ready(estimator, dims) else prepare_estimator(estimator, dims)
    grid = list(enumerate(lambda_grid))
    return ordered_map(lambda kv: risk_mc(est, kv[1], dims, reps, seed, stream=kv[0]), grid)


def minimax_check(estimator, lambda_grid, dims: ProblemDims, reps: int, seed: int):
    """PASS at a point unless the risk exceeds p by more than four standard errors."""
    if dims.p < 3 or dims.n < 2:
        raise ValueError("minimaxity is checked for p >= 3 and n >= 2")
    out = []
    for est in risk_curve(estimator, lambda_grid, dims, reps, seed):
        out.append(MinimaxVerdict(est, float(dims.p),
                                  est.mean_risk - MARGIN * est.std_err <= dims.p))
    return out


def dominance_check(est_a, est_b, lambda_grid, dims: ProblemDims, reps: int, seed: int):
    """Paired risk differences risk(A) - risk(B) on common random numbers."""
    _check_reps(reps)
    a = est_a if _is_ready(est_a, dims) else prepare_estimator(est_a, dims)
    b = est_b if _is_ready(est_b, dims) else prepare_estimator(est_b, dims)

    def row(kv):
        k, lam = kv
        theta = _theta_for(lam, dims)
        z, c = draw_standard(dims, reps, seed, stream=k)
        diff = _losses(a, theta, 1.0, z, c) - _losses(b, theta, 1.0, z, c)
        mean, se = _summary(diff)
        return ComparisonRow(float(lam), mean, se, reps)

    return ordered_map(row, list(enumerate(lambda_grid)))
