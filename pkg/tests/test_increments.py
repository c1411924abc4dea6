import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from owl import increments as inc
from owl import streams
from owl.errors import DegenerateLawError, PreconditionError

ALL_BUILTINS = [inc.gaussian(), inc.centered_exponential(),
                inc.laplace_normalized(), inc.uniform_normalized()]

# Conditional-mean quadrature oracles, frozen from
#   E[zeta] = E[X | X > 0] - E[X | X < 0] + 1
# evaluated with adaptive quadrature (and agreeing with the closed forms
# 2*sqrt(2/pi)+1, 3-(e-2)/(e-1), sqrt(2)+1, sqrt(3)+1).
ZETA_MEAN = {
    "gaussian": 2.5957691216,
    "centered-exponential": 2.5819767069,
    "laplace-normalized": 2.4142135624,
    "uniform-normalized": 2.7320508076,
}


def law_support(law):
    return {
        "gaussian": (-np.inf, np.inf),
        "centered-exponential": (-1.0, np.inf),
        "laplace-normalized": (-np.inf, np.inf),
        "uniform-normalized": (-math.sqrt(3), math.sqrt(3)),
    }[law.family]


def test_density_spot_values():
    assert inc.density(inc.gaussian(), 0.0) == pytest.approx(0.3989422804)
    assert inc.density(inc.centered_exponential(), -1.0) == pytest.approx(1.0)
    assert inc.density(inc.laplace_normalized(), 0.0) == pytest.approx(0.7071067812)
    assert inc.density(inc.uniform_normalized(), 2.0) == 0.0
    assert inc.density(inc.centered_exponential(), -1.5) == 0.0


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_density_integrates_to_one(law):
    val, err = integrate.quad(lambda x: inc.density(law, x),
                              *np.clip(law_support(law), -60, 60))
    assert abs(val - 1.0) < 1e-6


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_density_moments_are_standardized(law):
    lo, hi = np.clip(law_support(law), -60, 60)
    m1, _ = integrate.quad(lambda x: x * inc.density(law, x), lo, hi)
    m2, _ = integrate.quad(lambda x: x * x * inc.density(law, x), lo, hi)
    assert abs(m1) < 1e-8
    assert abs(m2 - 1.0) < 1e-8


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_midpoint_log_concavity(law):
    lo, hi = np.clip(law_support(law), -8, 8)
    pts = np.linspace(lo + 1e-9, hi - 1e-9, 201)
    f = inc.density(law, pts)
    logf = np.where(f > 0, np.log(np.where(f > 0, f, 1.0)), -np.inf)
    u = logf[:, None]
    v = logf[None, :]
    mid = inc.density(law, (pts[:, None] + pts[None, :]) / 2.0)
    logmid = np.where(mid > 0, np.log(np.where(mid > 0, mid, 1.0)), -np.inf)
    rhs = (u + v) / 2.0
    ok = np.isneginf(rhs) | (logmid >= rhs - 1e-9)
    assert ok.all()


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_draw_moments(law):
    n = 10 ** 6
    k0, k1 = streams.derive_key(123, 1, 0, 0)
    x = inc.draws_span(law, k0, k1, 0, n)
    assert abs(x.mean()) < 4.0 / math.sqrt(n)
    # var(X^2) = E[X^4] - 1 is below 15 for every built-in family
    assert abs(x.var(ddof=1) - 1.0) < 4.0 * math.sqrt(15.0 / n)


def test_draw_supports():
    k0, k1 = streams.derive_key(5, 1, 1, 0)
    u = inc.draws_span(inc.uniform_normalized(), k0, k1, 0, 10000)
    assert np.all(np.abs(u) <= math.sqrt(3))
    e = inc.draws_span(inc.centered_exponential(), k0, k1, 0, 10000)
    assert np.all(e >= -1.0)


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_scattered_draws_match_contiguous(law):
    # Both access paths must realize the same protocol, value for value.
    k0, k1 = streams.derive_key(77, 2, 3, 4)
    span = inc.draws_span(law, k0, k1, 10, 40)
    scattered = inc.draws_at_indices(law, k0, k1, np.arange(10, 50))
    np.testing.assert_allclose(scattered, span, rtol=1e-13, atol=0)


def test_scalar_sample_continues_the_stream():
    law = inc.laplace_normalized()
    s1 = streams.RngStream(9, 9)
    a = [inc.sample(law, s1) for _ in range(5)]
    s2 = streams.RngStream(9, 9)
    b = inc.sample(law, s2, n=5)
    np.testing.assert_allclose(a, b, rtol=0, atol=0)


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_zeta_always_at_least_one(law):
    z = inc.zeta_batch(law, 2024, 9, 0, 20000)
    assert np.all(z >= 1.0)


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_zeta_mean_matches_quadrature_oracle(law):
    n = 200_000
    z = inc.zeta_batch(law, 42, 9, 0, n)
    se = z.std(ddof=1) / math.sqrt(n)
    assert abs(z.mean() - ZETA_MEAN[law.family]) < 3.0 * se


def test_scalar_zeta_sampler():
    law = inc.gaussian()
    s = streams.RngStream(31337, 9)
    vals = [inc.sample_zeta(law, s) for _ in range(500)]
    assert min(vals) >= 1.0
    assert 2.0 < np.mean(vals) < 3.2


def test_zeta_rejection_budget_aborts(monkeypatch):
    # A valid mean-zero law must put mass on both half-lines, but it can be
    # arbitrarily lopsided: here the negative side holds ~1e-4 of the mass,
    # so with a shrunken attempt budget the negative phase gives up.
    g = np.array([-100.2, -100.0, -99.8, 0.0, 0.0102, 0.0202])
    v = np.array([0.0, 1e-3, 0.0, 0.0, 98.2, 0.0])
    law = inc.custom_grid(inc.standardize_grid(g, v))
    assert inc.tail_mass(law, 0.0, -1) < 5e-4
    monkeypatch.setattr(inc, "_REJECT_LIMIT", 256)
    with pytest.raises(DegenerateLawError, match="negative"):
        inc.zeta_batch(law, 1, 9, 0, 4)


def test_zeta_density_gaussian_mean():
    grid = np.linspace(0.5, 9.0, 1700)
    gd = inc.zeta_density(inc.gaussian(), grid)
    mean = np.trapezoid(grid * gd.values, grid)
    assert abs(mean - 2.5957691216) < 1e-3


def test_zeta_density_support_and_log_concavity():
    grid = np.linspace(0.0, 9.0, 1800)
    gd = inc.zeta_density(inc.gaussian(), grid)
    assert np.all(gd.values[grid < 1.0] == 0.0)
    v = gd.values[(grid > 1.05) & (grid < 7.0)]
    # midpoint log-concavity on the uniform grid: v[i-1] v[i+1] <= v[i]^2
    assert np.all(v[:-2] * v[2:] <= v[1:-1] ** 2 * (1 + 1e-9))


def test_zeta_density_needs_covering_grid():
    with pytest.raises(PreconditionError):
        inc.zeta_density(inc.gaussian(), np.linspace(0.0, 2.0, 256))
    with pytest.raises(PreconditionError):
        inc.zeta_density(inc.gaussian(), np.linspace(1.5, 9.0, 256))


def test_lr_order_check_reflexive():
    x = np.linspace(0, 1, 64)
    f = inc.standardize_grid(x, 1.0 + x * (1 - x))
    res = inc.lr_order_check(f, f)
    assert res == {"holds": True, "witness": None}


def test_lr_order_check_exponential_rates():
    # Exp(1) against Exp(1/2): the likelihood ratio e^{x/2} is monotone.
    x = np.linspace(0, 20, 1024)
    norm = lambda v: inc._as_conditional_grid(x, v / np.trapezoid(v, x))
    fU = norm(np.exp(-x))
    fW = norm(0.5 * np.exp(-0.5 * x))
    assert inc.lr_order_check(fU, fW)["holds"]
    # and the reversed order fails
    assert not inc.lr_order_check(fW, fU)["holds"]


def test_lr_order_check_counterexample_with_witness():
    x = np.linspace(0, 1, 256)
    fU = inc._as_conditional_grid(x, np.ones_like(x))
    fW = inc._as_conditional_grid(x, 2.0 * (1.0 - x))
    res = inc.lr_order_check(fU, fW)
    assert not res["holds"]
    u, w = res["witness"]
    assert u < w
    # the witness really violates the defining inequality
    fu = np.interp([u, w], x, fU.values)
    fw = np.interp([u, w], x, fW.values)
    assert fu[0] * fw[1] < fu[1] * fw[0]


def test_lr_order_check_rejects_mismatched_grids():
    a = inc._as_conditional_grid(np.linspace(0, 1, 32), np.ones(32))
    b = inc._as_conditional_grid(np.linspace(0, 2, 32), np.ones(32))
    with pytest.raises(PreconditionError):
        inc.lr_order_check(a, b)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=4, max_size=24))
def test_lr_reflexivity_property(values):
    x = np.linspace(0, 1, len(values))
    f = inc._as_conditional_grid(x, np.array(values))
    assert inc.lr_order_check(f, f)["holds"]


@pytest.mark.parametrize("law", ALL_BUILTINS, ids=lambda l: l.family)
def test_tails_lr_dominated_by_zeta(law):
    grid = np.linspace(0.0, 12.0, 1400)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reports = inc.conditional_tail_lr_check(law, [0.0, 0.5, 1.0, 2.0],
                                                grid)
    for entry in reports:
        for side in ("upper", "lower"):
            if not entry[side]["skipped"]:
                assert entry[side]["holds"], (law.family, entry)


def test_tail_check_cross_validates_at_double_resolution():
    coarse = np.linspace(0.0, 10.0, 1024)
    fine = np.linspace(0.0, 10.0, 2047)
    for grid in (coarse, fine):
        reports = inc.conditional_tail_lr_check(inc.laplace_normalized(),
                                                [0.0, 1.0], grid)
        assert all(e["upper"]["holds"] and e["lower"]["holds"]
                   for e in reports)


def test_vanishing_tails_are_skipped_with_warning():
    # The uniform law has no mass above sqrt(3) < 2.
    grid = np.linspace(0.0, 8.0, 1024)
    with pytest.warns(UserWarning, match="tail mass"):
        reports = inc.conditional_tail_lr_check(inc.uniform_normalized(),
                                                [2.0], grid)
    assert reports[0]["upper"]["skipped"]
    # The centered exponential has no mass below -1.
    wide = np.linspace(0.0, 12.0, 1024)
    with pytest.warns(UserWarning, match="tail mass"):
        reports = inc.conditional_tail_lr_check(inc.centered_exponential(),
                                                [1.5], wide)
    assert reports[0]["lower"]["skipped"]
    assert not reports[0]["upper"]["skipped"]


def test_tail_masses_against_quadrature():
    for law in ALL_BUILTINS:
        lo, hi = np.clip(law_support(law), -60, 60)
        for theta in (0.0, 0.7, 1.3):
            up, _ = integrate.quad(lambda x: inc.density(law, x),
                                   min(theta, hi), hi)
            lo_mass, _ = integrate.quad(lambda x: inc.density(law, x),
                                        lo, max(-theta, lo))
            assert inc.tail_mass(law, theta, +1) == pytest.approx(up, abs=1e-10)
            assert inc.tail_mass(law, theta, -1) == pytest.approx(lo_mass, abs=1e-10)


def test_lr_order_implies_stochastic_dominance():
    # U = (X | X > 0) is LR-below zeta, so its empirical CDF must dominate
    # zeta's everywhere, up to three DKW bandwidths.
    law = inc.gaussian()
    n = 100_000
    u = inc.positive_part_batch(law, 7, 9, 0, n)
    w = inc.zeta_batch(law, 7, 9, 0, n, comp=1)
    pts = np.linspace(0.0, 8.0, 400)
    cdf_u = np.searchsorted(np.sort(u), pts, side="right") / n
    cdf_w = np.searchsorted(np.sort(w), pts, side="right") / n
    band = math.sqrt(math.log(2.0 / 0.05) / (2.0 * n))
    assert np.min(cdf_u - cdf_w) > -3.0 * (2.0 * band)


def test_phi_constant_case_is_exact():
    est = inc.phi_inequality_check(inc.gaussian(), 0, 0, 5000, seed=3)
    assert est.mean == 1.0
    assert est.se == 0.0


@pytest.mark.parametrize("p,q", [(1, 0), (2, 1), (3, 3)])
def test_phi_inequality_holds(p, q):
    est = inc.phi_inequality_check(inc.gaussian(), p, q, 50_000, seed=11)
    assert est.mean >= -3.0 * est.se


def test_phi_rejects_bad_orders():
    with pytest.raises(PreconditionError):
        inc.phi_inequality_check(inc.gaussian(), -1, 0, 100, seed=1)


def test_phi_reproducible_and_thread_invariant():
    a = inc.phi_inequality_check(inc.gaussian(), 1, 1, 3000, seed=5)
    b = inc.phi_inequality_check(inc.gaussian(), 1, 1, 3000, seed=5)
    c = inc.phi_inequality_check(inc.gaussian(), 1, 1, 3000, seed=5, threads=2)
    assert (a.mean, a.se) == (b.mean, b.se) == (c.mean, c.se)


def test_grid_density_validation():
    with pytest.raises(PreconditionError):
        inc.GridDensity(np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 1.0]))
    with pytest.raises(PreconditionError):
        inc.GridDensity(np.array([0.0, 1.0]), np.array([-0.1, 2.1]))
    with pytest.raises(PreconditionError):
        inc.GridDensity(np.array([0.0, 1.0]), np.array([0.9, 0.9]))


def test_standardize_grid_produces_admissible_law():
    x = np.linspace(-1.0, 3.0, 400)
    raw = np.exp(-np.abs(x - 0.7)) * (2.0 + np.sin(x))
    gd = inc.standardize_grid(x, raw)
    law = inc.custom_grid(gd)
    assert abs(gd.mean()) < 1e-9
    assert abs(gd.variance() - 1.0) < 1e-9
    k0, k1 = streams.derive_key(8, 1, 0, 0)
    draws = inc.draws_span(law, k0, k1, 0, 200_000)
    assert draws.min() >= gd.grid[0] - 1e-12
    assert draws.max() <= gd.grid[-1] + 1e-12
    assert abs(draws.mean()) < 4.0 / math.sqrt(draws.size)
    assert abs(draws.var(ddof=1) - 1.0) < 0.02


def test_custom_law_requires_standardization():
    x = np.linspace(0.0, 2.0, 50)
    with pytest.raises(PreconditionError, match="standardize_grid"):
        inc.custom_grid(x, np.full_like(x, 0.5))


def test_grid_ppf_matches_cdf_inversion():
    x = np.linspace(-2.0, 2.0, 300)
    gd = inc.standardize_grid(x, 1.0 + 0.5 * np.cos(x))
    law = inc.custom_grid(gd)
    u = np.linspace(1e-6, 1 - 1e-6, 500)
    vals = inc._grid_ppf(law, u)
    assert np.all(np.diff(vals) >= 0)
    # round-trip through the CDF
    F = gd.cdf_nodes()
    back = np.interp(vals, gd.grid, F) \
        + 0.0  # node-level check only; within-segment error is quadratic
    assert np.max(np.abs(back - u)) < 1e-3


def test_csv_round_trip(tmp_path):
    x = np.linspace(-2.0, 2.0, 64)
    gd = inc.standardize_grid(x, np.exp(-x * x))
    path = tmp_path / "law.csv"
    rows = "\n".join(f"{float(a)!r},{float(b)!r}"
                     for a, b in zip(gd.grid, gd.values))
    path.write_text("x,f\n" + rows + "\n")
    loaded = inc.grid_density_from_csv(path)
    np.testing.assert_allclose(loaded.grid, gd.grid, rtol=0, atol=0)
    np.testing.assert_allclose(loaded.values, gd.values, rtol=0, atol=0)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n0,1\n")
    with pytest.raises(PreconditionError, match="header"):
        inc.grid_density_from_csv(bad)
