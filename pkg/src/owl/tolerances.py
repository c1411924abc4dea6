"""Desk-scale tolerances, in one auditable place.

The limit theorems these checks probe are asymptotic with existential
constants, so every finite-n threshold below is an artifact decision,
not a derived quantity.  Estimator code takes its slack from here; tests
and the CLI may override a field but never hard-code a different number.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Desk:
    # Monte Carlo bands, in units of the standard error of the statistic
    se_band: float = 3.0           # one-estimator assertions
    se_band_cross: float = 4.0     # two independent estimators of one value

    # ratio checks that should sit near 1 at desk scale
    ratio_floor: float = 0.9

    # two-sample Kolmogorov-Smirnov thresholds
    ks_identity: float = 0.02      # same distribution by construction
    ks_conditioned: float = 0.05   # exact sampler vs weighted sampler
    ks_loose: float = 0.10         # asymptotic agreement at finite size

    # coupled-SDE ordering may be violated by roundoff only
    coupling_slack: float = 1e-6

    # grid renormalization / likelihood-ratio comparisons
    density_tolerance: float = 1e-6

    # relative band for exactly-known variances
    variance_band: float = 0.05


DESK = Desk()


def with_overrides(**kw) -> Desk:
    """A Desk with selected fields replaced; unknown names raise."""
    return replace(DESK, **kw)
