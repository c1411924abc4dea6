"""Full-scale acceptance gate: one test per published desk-scale claim.

Every test runs its criterion at the documented replica budget and
frozen seed, so this module is the slow part of the suite (tens of
minutes on one core; the stated budgets assume several).  Each test
asserts the criterion's own pass verdict and dumps the full report
entry on failure, numbers included.

Two criteria are expected to fail honestly rather than have their
tolerances bent, and their docstrings carry the measurements:

* the majorant-ratio floor at the shorter time scale sits a hair under
  its target (the small-noise expansion puts the ratio near 0.886
  against a 0.9 floor);
* the linear-statistic mean gate: the jump ensemble's spread from a
  packed start still lags the Brownian one by about 1.5 percent at
  T = 400, a finite-time deficit that decays with T but has not closed
  at desk scale.  The centered distributions already agree (KS < 0.01),
  so the fluctuation claim itself is visibly on track.
"""

import json

from owl import suites


def _assert_entry(entry: dict) -> None:
    assert entry["passed"], json.dumps(entry, indent=2, default=str)


def test_free_walk_keeps_gap_product_harmonic():
    _assert_entry(suites.criterion_harmonicity())


def test_majorant_deficit_never_negative():
    _assert_entry(suites.criterion_superharmonic())


def test_majorant_dominates_survival_weight_and_gap_product():
    _assert_entry(suites.criterion_majorant_dominates())


def test_survival_weight_matches_gap_product_on_wide_spacings():
    _assert_entry(suites.criterion_ratio_v_delta())


def test_gap_product_tracks_majorant_on_wide_spacings():
    _assert_entry(suites.criterion_ratio_delta_h())


def test_tail_orderings_hold_for_builtins_and_break_for_counterexample():
    _assert_entry(suites.criterion_lr_orders())


def test_order_moment_inequality_nonnegative_over_exponent_grid():
    _assert_entry(suites.criterion_phi_inequality())


def test_coupled_eigenvalue_paths_preserve_spacing_domination():
    _assert_entry(suites.criterion_dyson_coupling())


def test_particle_and_rejection_samplers_agree_in_law():
    _assert_entry(suites.criterion_smc_vs_rejection())


def test_matrix_model_reproduces_top_eigenvalue_law():
    _assert_entry(suites.criterion_gue_identity())


def test_walk_and_brownian_edges_agree_at_matched_scale():
    _assert_entry(suites.criterion_edge_agreement())


def test_linear_statistics_agree_across_routes():
    _assert_entry(suites.criterion_linear_statistics())


def test_near_collision_probability_decays_with_time():
    _assert_entry(suites.criterion_repulsion_decay())


def test_artifacts_are_thread_count_invariant():
    _assert_entry(suites.criterion_determinism())
