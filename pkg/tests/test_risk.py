import math

import numpy as np
import pytest

from shrinklab.core import ProblemDims
from shrinklab.estimators import GeneralizedBayesShrinkage, JamesStein, ScaledIdentity
from shrinklab.risk import (
    draw_standard,
    dominance_check,
    minimax_check,
    prepare_estimator,
    risk_at,
    risk_curve,
    risk_mc,
    sample_obs,
)

D54 = ProblemDims(5, 4)
REPS = 20_000


def stein():
    return GeneralizedBayesShrinkage(n=4, a=-2.0, b=0.0)


class TestSampling:
    def test_deterministic(self):
        a = sample_obs(np.ones(5), 2.0, D54, seed=3)
        b = sample_obs(np.ones(5), 2.0, D54, seed=3)
        assert np.array_equal(a.x, b.x) and a.s == b.s
        c = sample_obs(np.ones(5), 2.0, D54, seed=4)
        assert not np.array_equal(a.x, c.x)

    def test_moments(self):
        theta, eta, reps = np.array([1.0, -2.0, 0.5, 0.0, 3.0]), 2.5, 100_000
        z, c = draw_standard(D54, reps, seed=1)
        x = theta + z / math.sqrt(eta)
        s = c / eta
        se_x = x.std(axis=0, ddof=1) / math.sqrt(reps)
        assert np.all(np.abs(x.mean(axis=0) - theta) <= 4 * se_x)
        es = eta * s
        assert abs(es.mean() - D54.n) <= 4 * es.std(ddof=1) / math.sqrt(reps)

    def test_sample_obs_consistent_with_blocks(self):
        obs = sample_obs(np.zeros(5), 4.0, D54, seed=9)
        z, c = draw_standard(D54, 1, seed=9)
        np.testing.assert_array_equal(obs.x, z[0] / 2.0)
        assert obs.s == c[0] / 4.0

    def test_prefix_stable_across_block_boundary(self):
        z1, c1 = draw_standard(D54, 10_000, seed=2)
        z2, c2 = draw_standard(D54, 20_000, seed=2)
        np.testing.assert_array_equal(z1, z2[:10_000])
        np.testing.assert_array_equal(c1, c2[:10_000])

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            sample_obs(np.ones(4), 1.0, D54, seed=0)
        with pytest.raises(ValueError):
            sample_obs(np.ones(5), 0.0, D54, seed=0)


class TestRiskMC:
    @pytest.mark.parametrize("lam", [0.0, 3.0, 50.0])
    def test_identity_constant_risk(self, lam):
        r = risk_mc(ScaledIdentity(n=4), lam, D54, REPS, seed=1)
        assert abs(r.mean_risk - 5) <= 4 * r.std_err

    def test_gain_at_origin(self):
        r = risk_mc(stein(), 0.0, D54, 100_000, seed=7)
        assert r.mean_risk < 4 - 4 * r.std_err
        assert r.mean_risk >= 0 and r.lam == 0.0 and r.reps == 100_000 and r.seed == 7

    def test_far_from_origin(self):
        r = risk_mc(stein(), 1e4, D54, 100_000, seed=7)
        assert abs(r.mean_risk - 5) <= 4 * r.std_err

    def test_min_reps(self):
        with pytest.raises(ValueError):
            risk_mc(stein(), 0.0, D54, 999, seed=0)

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            risk_mc(stein(), -1.0, D54, REPS, seed=0)

    def test_n_mismatch(self):
        with pytest.raises(ValueError):
            prepare_estimator(GeneralizedBayesShrinkage(n=3), D54)

    def test_prepare_does_not_mutate(self):
        est = stein()
        fitted = prepare_estimator(est, D54)
        assert fitted.interpolate and not est.interpolate
        assert not hasattr(est, "n_features_in_")

    def test_se_scaling(self):
        r1 = risk_mc(stein(), 4.0, D54, 10_000, seed=5)
        r4 = risk_mc(stein(), 4.0, D54, 40_000, seed=5)
        assert r4.std_err / r1.std_err == pytest.approx(0.5, rel=0.2)

    def test_scale_invariance_exact(self):
        lam, c = 6.0, 3.7
        est = prepare_estimator(stein(), D54)
        base = risk_mc(est, lam, D54, REPS, seed=11)
        theta = np.zeros(5)
        theta[0] = c * math.sqrt(lam)
        moved = risk_at(est, theta, c ** -2, D54, REPS, seed=11)
        assert moved.lam == pytest.approx(lam)
        assert moved.mean_risk == pytest.approx(base.mean_risk, rel=1e-10)
        assert moved.std_err == pytest.approx(base.std_err, rel=1e-8)

    def test_rotation_invariance_statistical(self):
        lam = 4.0
        rng = np.random.default_rng(0)
        direction = rng.normal(size=5)
        theta = math.sqrt(lam) * direction / np.linalg.norm(direction)
        a = risk_mc(stein(), lam, D54, 50_000, seed=1)
        b = risk_at(stein(), theta, 1.0, D54, 50_000, seed=2)
        assert abs(a.mean_risk - b.mean_risk) <= 4 * math.hypot(a.std_err, b.std_err)


class TestCurves:
    def test_curve_rows(self):
        rows = risk_curve(stein(), [0.0, 1.0, 1e4], D54, REPS, seed=3)
        assert [r.lam for r in rows] == [0.0, 1.0, 1e4]
        assert rows[0].mean_risk < rows[1].mean_risk < rows[2].mean_risk + 4 * rows[2].std_err
        assert abs(rows[2].mean_risk - 5) <= 4 * rows[2].std_err

    def test_curve_point_matches_single(self):
        rows = risk_curve(stein(), [0.0, 2.0], D54, REPS, seed=3)
        assert rows[1] == risk_mc(prepare_estimator(stein(), D54), 2.0, D54, REPS, 3, stream=1)

    def test_threads_bit_identical(self, monkeypatch):
        grid = [0.0, 1.0, 4.0, 16.0]
        serial = risk_curve(stein(), grid, D54, REPS, seed=8)
        monkeypatch.setenv("SHRINKLAB_THREADS", "4")
        assert risk_curve(stein(), grid, D54, REPS, seed=8) == serial

    def test_minimax_pass(self):
        grid = [0.0, 1.0, 4.0, 16.0, 100.0, 1e4]
        for b in (0.0, 2.0):
            out = minimax_check(GeneralizedBayesShrinkage(n=4, b=b), grid, D54, REPS, seed=1)
            assert all(v.verdict == "PASS" for v in out)

    def test_minimax_fails_for_doubling(self):
        out = minimax_check(ScaledIdentity(n=4, factor=2.0), [0.0], D54, REPS, seed=1)
        assert out[0].verdict == "FAIL"
        assert out[0].estimate.mean_risk == pytest.approx(20, rel=0.05)

    def test_minimax_domain(self):
        with pytest.raises(ValueError):
            minimax_check(ScaledIdentity(n=1), [0.0], ProblemDims(5, 1), REPS, seed=1)

    def test_dominance_identical(self):
        rows = dominance_check(stein(), stein(), [0.0, 5.0], D54, REPS, seed=2)
        assert all(r.mean_diff == 0.0 and r.std_err_diff == 0.0 for r in rows)

    def test_identity_loses_to_js_at_origin(self):
        row = dominance_check(ScaledIdentity(n=4), JamesStein(n=4), [0.0], D54, REPS, seed=2)[0]
        assert row.mean_diff - 4 * row.std_err_diff > 0
        assert not row.consistent_with_domination

    def test_stein_prior_vs_js(self):
        rows = dominance_check(stein(), JamesStein(n=4), [0.0, 1.0, 4.0, 16.0, 100.0],
                               D54, REPS, seed=4)
        assert all(r.consistent_with_domination for r in rows)
