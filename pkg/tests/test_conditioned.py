"""Conditioned-ensemble samplers against their exact and analytic oracles.

Oracle values used here:
  * 2x2 top-level closed form: lam_max = (a+b)/2 + sqrt((a-b)^2/4 + |c|^2),
    integrated by plain Monte Carlo with an unrelated generator family.
  * trace identity: E sum(lam_i^2) at time t equals sum(start^2) + d^2 t,
    from summing entry variances of the matrix model.
  * d=1 levels are plain Brownian motion: Var = t.
  * the particle route's normalizing constant and the survivor-weighted
    gap-product ratio estimate the same expectation, so they must agree.
"""

import logging
import math

import numpy as np
import pytest
import scipy.stats as sps

from owl import backend, conditioned as cond, harmonic, increments as inc
from owl.errors import ExtinctionError, FeasibilityError, PreconditionError
from owl.paths import positions_at
from owl.tolerances import DESK

GAUSS = inc.gaussian()


def _ecdf(x, w, grid):
    i = np.argsort(x, kind="stable")
    x, c = x[i], np.cumsum(w[i])
    c = c / c[-1]
    idx = np.searchsorted(x, grid, side="right")
    return np.where(idx > 0, c[np.minimum(idx, c.size) - 1], 0.0)


def _weighted_ks(a, wa, b, wb):
    grid = np.sort(np.concatenate([a, b]))
    return float(np.abs(_ecdf(a, wa, grid) - _ecdf(b, wb, grid)).max())


def _weighted_mean_se(x, w):
    m = float(np.sum(w * x))
    ess = 1.0 / float(np.sum(w * w))
    var = float(np.sum(w * (x - m) ** 2))
    return m, math.sqrt(var / ess)


# --- rejection sampler ------------------------------------------------------

class TestRejection:
    def test_d1_every_attempt_accepted(self):
        ens = cond.sample_ordered_rejection(1, [0.0], 5.0, GAUSS, 200, 200,
                                            seed=3)
        assert ens.acceptance_rate == 1.0
        assert ens.ess == 200.0
        assert np.all(ens.survived == 1)
        assert np.ptp(ens.weights) == 0.0

    def test_rate_decreases_when_horizon_doubles(self):
        a = cond.sample_ordered_rejection(2, (0.0, 1.0), 10.0, GAUSS,
                                          2000, 10 ** 6, seed=3)
        b = cond.sample_ordered_rejection(2, (0.0, 1.0), 20.0, GAUSS,
                                          2000, 10 ** 6, seed=3)
        assert 0.0 < b.acceptance_rate < a.acceptance_rate < 1.0

    def test_top_mean_exceeds_free_walk(self):
        n = 1000
        ens = cond.sample_ordered_rejection(3, (0.0, 1.0, 2.0), 10.0, GAUSS,
                                            n, 10 ** 6, seed=5)
        top = ens.final_pos[:, -1]
        st = backend.walk_stats(GAUSS, 17, 0x21, np.arange(4000),
                                np.array([0.0, 1.0, 2.0]), 10.0)
        free_top = st.final_pos[:, -1]
        gap = top.mean() - free_top.mean()
        pooled = math.hypot(top.std(ddof=1) / math.sqrt(n),
                            free_top.std(ddof=1) / math.sqrt(4000))
        assert gap > DESK.se_band * pooled

    def test_exhaustion_raises_with_diagnostics(self):
        with pytest.raises(FeasibilityError, match="attempts"):
            cond.sample_ordered_rejection(4, (0.0, 0.4, 0.8, 1.2), 50.0,
                                          GAUSS, 500, 600, seed=3)

    def test_result_independent_of_thread_count(self):
        kw = dict(d=2, start=(0.0, 1.0), horizon=6.0, law=GAUSS,
                  n_accept=300, max_attempts=10 ** 5, seed=11)
        a = cond.sample_ordered_rejection(**kw, threads=1)
        b = cond.sample_ordered_rejection(**kw, threads=2)
        assert np.array_equal(a.final_pos, b.final_pos)
        assert a.acceptance_rate == b.acceptance_rate

    def test_keep_paths_matches_summaries(self):
        ens = cond.sample_ordered_rejection(2, (0.0, 2.0), 3.0, GAUSS, 40,
                                            10 ** 5, seed=7, keep_paths=True)
        assert len(ens.replicas) == 40
        # Accumulation order differs between the walk kernel and the
        # materialized prefix sums, so agreement is to rounding, not bits.
        for r in range(40):
            final = positions_at(ens.replicas[r], 3.0)[0]
            np.testing.assert_allclose(final, ens.final_pos[r], rtol=1e-12,
                                       atol=1e-12)

    def test_gap_product_weights_tilt_upward(self):
        # Reweighting by the final gap product must push the top-level
        # mean up: wide configurations carry more gap product.
        ens = cond.sample_ordered_rejection(3, (0.0, 1.0, 2.0), 10.0, GAUSS,
                                            4000, 10 ** 6, seed=5)
        w = cond.gap_product_weights(ens)
        assert abs(w.sum() - 1.0) < 1e-12
        plain = ens.final_pos[:, -1].mean()
        tilted = float(np.sum(w * ens.final_pos[:, -1]))
        assert tilted > plain


# --- particle route ---------------------------------------------------------

class TestParticleRoute:
    def test_d1_degenerates_to_free_sampling(self):
        ens = cond.sample_ordered_smc(1, [0.0], 8.0, GAUSS, 500, 2.0, seed=9)
        assert np.all(ens.survived == 1)
        assert ens.resample_times == ()
        assert np.ptp(ens.weights) < 1e-15
        assert abs(ens.norm_constant - 1.0) < 1e-9
        assert abs(ens.ess - 500.0) < 1e-6

    def test_agrees_with_reweighted_rejection(self):
        n = 10 ** 4
        rej = cond.sample_ordered_rejection(3, (0.0, 1.0, 2.0), 10.0, GAUSS,
                                            n, 10 ** 6, seed=21)
        wr = cond.gap_product_weights(rej)
        sm = cond.sample_ordered_smc(3, (0.0, 1.0, 2.0), 10.0, GAUSS, n, 2.5,
                                     seed=22)
        for stat in (lambda p: p[:, -1], lambda p: p[:, 0],
                     lambda p: p[:, -1] - p[:, 0]):
            ks = _weighted_ks(stat(rej.final_pos), wr,
                              stat(sm.final_pos), sm.weights)
            assert ks <= DESK.ks_conditioned

    def test_norm_constant_matches_ratio_estimator(self):
        # Cross-module oracle: both quantities estimate the killed-path
        # gap-product expectation over its start value.
        x, t = (0.0, 15.0, 30.0), 100.0
        ratio = harmonic.ratio_V_over_delta(x, t, 0.1, GAUSS, 10 ** 4,
                                            seed=31)
        zs = [cond.sample_ordered_smc(3, x, t, GAUSS, 2000, 25.0,
                                      seed=40 + k).norm_constant
              for k in range(8)]
        z = np.array(zs)
        se = z.std(ddof=1) / math.sqrt(z.size)
        pooled = math.hypot(se, ratio.se)
        assert abs(z.mean() - ratio.mean) <= DESK.se_band_cross * pooled

    def test_extinction_raises_with_advice(self):
        with pytest.raises(ExtinctionError, match="resample_every"):
            cond.sample_ordered_smc(4, (0.0, 1.0, 2.0, 3.0), 100.0, GAUSS,
                                    200, 100.0, seed=13)

    def test_result_independent_of_thread_count(self):
        kw = dict(d=3, start=(0.0, 1.0, 2.0), horizon=4.0, law=GAUSS,
                  n_particles=6000, resample_every=1.0, seed=17)
        a = cond.sample_ordered_smc(**kw, threads=1)
        b = cond.sample_ordered_smc(**kw, threads=2)
        assert np.array_equal(a.final_pos, b.final_pos)
        assert np.array_equal(a.weights, b.weights)
        assert a.norm_constant == b.norm_constant

    def test_snapshots_track_ancestry(self):
        ens = cond.sample_ordered_smc(2, (0.0, 1.0), 4.0, GAUSS, 500, 1.0,
                                      seed=19, record_times=(2.0, 4.0))
        assert len(ens.snapshots) == 2
        # The horizon snapshot must be the final positions themselves;
        # any ancestry mix-up at the intermediate resamples breaks this.
        t_last, snap_last = ens.snapshots[-1]
        assert t_last == 4.0
        assert np.array_equal(snap_last, ens.final_pos)
        t_mid, snap_mid = ens.snapshots[0]
        assert t_mid == 2.0 and snap_mid.shape == (500, 2)
        live = ens.weights > 0
        assert np.all(np.diff(snap_mid[live], axis=1) > 0)

    def test_majorant_mode_brackets_gap_product_mode(self):
        # On a wide start the two tilts nearly coincide, so their
        # weighted top-level means must sit within noise of each other.
        kw = dict(d=2, start=(0.0, 20.0), horizon=50.0, law=GAUSS,
                  n_particles=4000, resample_every=10.0)
        lo = cond.sample_ordered_smc(**kw, seed=23)
        hi = cond.sample_ordered_smc(**kw, seed=23, weight_mode="majorant")
        assert hi.weight_mode == "majorant"
        m_lo, se_lo = _weighted_mean_se(lo.final_pos[:, -1], lo.weights)
        m_hi, se_hi = _weighted_mean_se(hi.final_pos[:, -1], hi.weights)
        assert abs(m_hi - m_lo) <= 5.0 * math.hypot(se_lo, se_hi)

    def test_packed_start_perturbed_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="owl.conditioned"):
            ens = cond.sample_ordered_smc(2, (0.0, 0.0), 2.0, GAUSS, 100,
                                          1.0, seed=3)
        assert any("perturbed" in r.message for r in caplog.records)
        assert ens.start[1] > ens.start[0]

    def test_packed_start_rejected_when_perturbation_disabled(self):
        with pytest.raises(PreconditionError, match="tie"):
            cond.sample_ordered_smc(2, (0.0, 0.0), 2.0, GAUSS, 100, 1.0,
                                    seed=3, allow_perturb=False)

    def test_validation(self):
        with pytest.raises(PreconditionError, match="resample_every"):
            cond.sample_ordered_smc(2, (0.0, 1.0), 2.0, GAUSS, 100, 3.0,
                                    seed=3)
        with pytest.raises(PreconditionError, match="nondecreasing"):
            cond.sample_ordered_smc(2, (1.0, 0.0), 2.0, GAUSS, 100, 1.0,
                                    seed=3)


# --- matrix-model marginals -------------------------------------------------

class TestMatrixMarginals:
    def test_d1_is_brownian_variance(self):
        t = 7.0
        arr = cond.nibm_eigen_array(1, [0.0], [t], 10 ** 5, seed=41)
        v = arr[:, 0, 0].var(ddof=1)
        assert abs(v - t) / t < DESK.variance_band

    def test_top_level_matches_2x2_closed_form(self):
        n = 2 * 10 ** 5
        arr = cond.nibm_eigen_array(2, [0.0, 0.0], [1.0], n, seed=43)
        top = arr[:, 0, 1]
        rng = np.random.default_rng(20260822)
        a, b = rng.standard_normal((2, 10 ** 6))
        cr, ci = rng.standard_normal((2, 10 ** 6)) / math.sqrt(2.0)
        oracle = (a + b) / 2 + np.sqrt((a - b) ** 2 / 4 + cr ** 2 + ci ** 2)
        pooled = math.hypot(top.std(ddof=1) / math.sqrt(n),
                            oracle.std(ddof=1) / 1000.0)
        assert abs(top.mean() - oracle.mean()) <= DESK.se_band * pooled

    def test_trace_identity(self):
        start = np.array([0.0, 1.0, 2.0, 3.0])
        t, n = 3.0, 3 * 10 ** 4
        arr = cond.nibm_eigen_array(4, start, [t], n, seed=47)
        sq = (arr[:, 0, :] ** 2).sum(axis=1)
        expect = float((start ** 2).sum() + 16.0 * t)
        se = sq.std(ddof=1) / math.sqrt(n)
        assert abs(sq.mean() - expect) <= DESK.se_band * se

    def test_brownian_scaling(self):
        n = 10 ** 5
        at4 = cond.nibm_eigen_array(3, np.zeros(3), [4.0], n, seed=53)
        at1 = cond.nibm_eigen_array(3, np.zeros(3), [1.0], n, seed=59)
        ks = sps.ks_2samp(at4[:, 0, -1], 2.0 * at1[:, 0, -1]).statistic
        assert ks <= DESK.ks_identity

    def test_marginal_rows_strictly_ordered(self):
        paths = cond.nibm_matrix_marginals(3, (0.0, 0.0, 0.0),
                                           [0.5, 1.0, 2.0], 200, seed=61)
        assert len(paths) == 200
        for p in paths[:20]:
            assert np.all(np.diff(p.values, axis=1) > 0)

    def test_replica_keyed_determinism_across_offsets(self):
        whole = cond.nibm_eigen_array(2, (0.0, 1.0), [1.0, 2.0], 50, seed=67)
        head = cond.nibm_eigen_array(2, (0.0, 1.0), [1.0, 2.0], 20, seed=67)
        tail = cond.nibm_eigen_array(2, (0.0, 1.0), [1.0, 2.0], 30, seed=67,
                                     offset=20)
        assert np.array_equal(whole, np.concatenate([head, tail]))

    def test_joint_grid_consistency(self):
        # The level at an early grid time must not depend on how much
        # grid follows it: increments accumulate forward only.
        joint = cond.nibm_eigen_array(2, (0.0, 1.0), [1.0, 3.0], 40, seed=71)
        single = cond.nibm_eigen_array(2, (0.0, 1.0), [1.0], 40, seed=71)
        assert np.array_equal(joint[:, 0, :], single[:, 0, :])

    def test_validation(self):
        with pytest.raises(PreconditionError, match="increasing"):
            cond.nibm_eigen_array(2, (0.0, 1.0), [2.0, 1.0], 5, seed=3)
        with pytest.raises(PreconditionError, match="nondecreasing"):
            cond.nibm_eigen_array(2, (1.0, 0.0), [1.0], 5, seed=3)
        with pytest.raises(PreconditionError):
            cond.EigenPath(d=2, times=np.array([1.0]),
                           values=np.array([[1.0, 0.0]]))


# --- coupled level SDE ------------------------------------------------------

class TestCoupledSde:
    def test_identical_starts_identical_paths(self):
        y, z = cond.dyson_sde_coupled(2, (0.0, 1.0), (0.0, 1.0), 1.0, 1e-3,
                                      seed=73)
        assert np.array_equal(y.values, z.values)

    def test_spacing_domination_d2(self):
        y, z = cond.dyson_sde_coupled(2, (0.0, 2.0), (0.0, 1.0), 1.0, 1e-3,
                                      seed=79)
        margin = np.diff(y.values, axis=1) - np.diff(z.values, axis=1)
        assert margin.min() >= -DESK.coupling_slack

    def test_domination_across_replicas(self):
        times, ys, zs = cond.dyson_coupled_batch(2, (0.0, 2.0), (0.0, 1.0),
                                                 0.5, 1e-3, 25, seed=83)
        margin = np.diff(ys, axis=2) - np.diff(zs, axis=2)
        assert margin.min() >= -DESK.coupling_slack

    def test_shifted_start_sandwich_d3(self):
        theta = 0.5
        y0 = np.array([0.0, 1.0, 2.0])
        y, z = cond.dyson_sde_coupled(3, y0, y0 - theta, 1.0, 1e-3, seed=89)
        hi = (z.values + theta + DESK.coupling_slack - y.values).min()
        lo = (y.values - (z.values - theta - DESK.coupling_slack)).min()
        assert hi >= 0.0 and lo >= 0.0

    def test_grid_and_precondition_validation(self):
        with pytest.raises(PreconditionError, match="whole number"):
            cond.dyson_sde_coupled(2, (0.0, 2.0), (0.0, 1.0), 1.0, 0.3,
                                   seed=3)
        with pytest.raises(PreconditionError, match="pair"):
            cond.dyson_sde_coupled(2, (0.0, 1.0), (0.0, 2.0), 1.0, 1e-2,
                                   seed=3)


# --- start sensitivity ------------------------------------------------------

class TestStartSensitivity:
    def test_zero_theta_gap_exactly_zero(self):
        est = cond.brownian_start_sensitivity(3, 0.0, 1.0, "top", 2000,
                                              seed=97)
        assert est.mean == 0.0 and est.se == 0.0

    def test_perturbed_start_scales_linearly(self):
        full = cond.perturbed_start(3, 1.0, seed=97)
        half = cond.perturbed_start(3, 0.5, seed=97)
        assert np.array_equal(half, 0.5 * full)
        assert np.all(np.diff(full) >= 0)
        assert np.abs(full).max() <= 1.0

    def test_gap_shrinks_when_theta_halves(self):
        n = 2 * 10 ** 4
        g1 = cond.brownian_start_sensitivity(3, 1.0, 1.0, "top", n, seed=101)
        g2 = cond.brownian_start_sensitivity(3, 0.5, 1.0, "top", n, seed=101)
        pooled = math.hypot(g1.se, g2.se)
        assert g2.mean <= 0.75 * g1.mean + DESK.se_band * pooled

    def test_small_theta_small_gap(self):
        est = cond.brownian_start_sensitivity(2, 0.1, 1.0, "top", 10 ** 5,
                                              seed=103)
        assert est.mean <= 0.1 + DESK.se_band * est.se

    def test_every_f_spec_runs(self):
        for f in ("top", "bottom", "gap-sum"):
            est = cond.brownian_start_sensitivity(2, 0.3, 1.0, f, 4000,
                                                  seed=107)
            assert est.mean >= 0.0 and math.isfinite(est.se)

    def test_unknown_f_spec_rejected(self):
        with pytest.raises(PreconditionError, match="f_spec"):
            cond.brownian_start_sensitivity(2, 0.3, 1.0, "median", 100,
                                            seed=3)
