"""Estimators for the order-preserving harmonic function and its bounds.

The function that conditions d walkers to stay ordered has no closed
form.  What can be estimated: its truncations along the gap-product
martingale (two unbiased routes, one watching survivors and one watching
exits), a superharmonic majorant built from one-sided increment draws,
and the ratios that pin all three together on well-spaced starts.

Every spacing product runs in signed log space, and every estimator
accumulates in units of the start's own gap product, so magnitude stays
in the exponent until the final report and wide starts cost no precision.

Note on the majorant's index convention: the pairwise shift is the
partial-sum difference eta_j - eta_i (sum of zeta_i..zeta_{j-1}), not a
shifted variant; one display elsewhere is easy to misread on this point.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend
from . import increments as _inc
from .errors import PreconditionError
from .estimates import Accumulator, MCEstimate, map_chunks
from .logspace import LogSignedValue, signed_log_gap_product
from .paths import as_weyl
from .streams import seed_fingerprint

__all__ = [
    "vandermonde", "estimate_V_survival", "estimate_V_stopped",
    "estimate_h", "superharmonic_deficit", "ratio_V_over_delta",
    "ratio_delta_over_h", "moment_bound_probe",
]

_EXP_V_SURVIVAL = 0x11
_EXP_V_STOPPED = 0x12
_EXP_H = 0x13
_EXP_DEFICIT = 0x14
_EXP_RATIO_VD = 0x15
_EXP_RATIO_DH = 0x16
_EXP_MOMENT = 0x17


def vandermonde(x) -> LogSignedValue:
    """Signed log-space product of all ordered pairwise gaps.

    Sign 0 iff two coordinates tie; d = 1 is the empty product, +1.  The
    log-magnitudes sum through fsum, so permuting the input changes the
    result by sign alone, exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise PreconditionError("coordinates must be a finite 1-d vector")
    sign, terms = 1, []
    for i in range(x.size):
        for j in range(i + 1, x.size):
            gap = x[j] - x[i]
            if gap == 0.0:
                return LogSignedValue(0, -math.inf)
            sign = sign if gap > 0 else -sign
            terms.append(math.log(abs(gap)))
    return LogSignedValue(sign, math.fsum(terms))


def _delta_float(x) -> float:
    """Direct float gap product; exact whenever it fits in a double."""
    p = 1.0
    for i in range(x.size):
        for j in range(i + 1, x.size):
            p *= x[j] - x[i]
    return p


def _scaled(acc: Accumulator, x, delta: LogSignedValue,
            fp: str) -> MCEstimate:
    base = MCEstimate.from_accumulator(acc, fp)
    s = _delta_float(x)
    if not math.isfinite(s):
        s = delta.to_float()
    return MCEstimate(base.mean * s, base.se * abs(s), base.n, fp)


def _merge(parts) -> Accumulator:
    acc = Accumulator()
    for p in parts:
        acc.merge(p)
    return acc


def _fp(seed, experiment, label, x, law, **extra):
    params = {"x": [float(v) for v in x], "law": law.family, **extra}
    return seed_fingerprint(seed, experiment, label, params)


# ------------------------------------------------- martingale truncations


def _survival_chunk(args, lo, hi):
    law, seed, experiment, x, t, log_delta = args
    s = backend.walk_stats(law, seed, experiment,
                           np.arange(lo, hi, dtype=np.int64), x, t,
                           stop_on_exit=True)
    surv = s.survived == 1
    y = np.zeros(hi - lo)
    if surv.any():
        signs, logs = signed_log_gap_product(s.final_pos[surv])
        y[surv] = signs * np.exp(logs - log_delta)
    return Accumulator().push(y)


def estimate_V_survival(x, t: float, law: _inc.IncrementLaw, n: int,
                        seed: int, experiment: int = _EXP_V_SURVIVAL,
                        threads: int = 1) -> MCEstimate:
    """Mean gap product over still-ordered paths at time t.

    This is the horizon-t truncation of the limit that defines the
    conditioning function; the infinity-marker convention of module
    paths applies (survival means "ordered through t", nothing later).
    """
    x = as_weyl(x)
    if n < 100:
        raise PreconditionError(
            "n < 100 leaves the standard error meaningless")
    delta = vandermonde(x)
    args = (law, seed, experiment, x, float(t), delta.log_abs)
    acc = _merge(map_chunks(_survival_chunk, args, n, threads))
    return _scaled(acc, x, delta, _fp(seed, experiment, "v-survival", x, law,
                                   t=float(t), n=n))


def _stopped_chunk(args, lo, hi):
    law, seed, experiment, x, horizon, log_delta = args
    s = backend.walk_stats(law, seed, experiment,
                           np.arange(lo, hi, dtype=np.int64), x, horizon,
                           stop_on_exit=True)
    exited = s.survived == 0
    y = np.ones(hi - lo)
    if exited.any():
        signs, logs = signed_log_gap_product(s.exit_pos[exited])
        y[exited] -= signs * np.exp(logs - log_delta)
    return Accumulator().push(y)


def estimate_V_stopped(x, horizon: float, law: _inc.IncrementLaw, n: int,
                       seed: int, experiment: int = _EXP_V_STOPPED,
                       threads: int = 1) -> MCEstimate:
    """Start gap product minus the mean gap product at exits before horizon.

    Optional stopping makes this agree with estimate_V_survival at the
    same horizon in expectation; the pair is an internal cross-check.
    """
    x = as_weyl(x)
    delta = vandermonde(x)
    args = (law, seed, experiment, x, float(horizon), delta.log_abs)
    acc = _merge(map_chunks(_stopped_chunk, args, n, threads))
    return _scaled(acc, x, delta, _fp(seed, experiment, "v-stopped", x, law,
                                   horizon=float(horizon), n=n))


# --------------------------------------------------- superharmonic majorant


def _eta_log_products(x_rows, etas, log_delta):
    """log of prod_{i<j}(gap_ij + etagap_ij) - log_delta, batched.

    x_rows: (m, d) ordered rows; etas: (m, d) cumulative shifts.  All
    factors are positive because eta is strictly increasing in j.
    """
    m, d = x_rows.shape
    logs = np.zeros(m)
    for i in range(d):
        for j in range(i + 1, d):
            logs += np.log(x_rows[:, j] - x_rows[:, i]
                           + etas[:, j] - etas[:, i])
    return logs - log_delta


def _eta_rows(law, seed, experiment, lo, hi, d):
    zetas = np.stack([_inc.zeta_batch(law, seed, experiment, lo, hi, comp=c)
                      for c in range(d - 1)], axis=1) if d > 1 else \
        np.empty((hi - lo, 0))
    return np.concatenate([np.zeros((hi - lo, 1)), np.cumsum(zetas, axis=1)],
                          axis=1)


def _h_chunk(args, lo, hi):
    law, seed, experiment, x, log_delta = args
    etas = _eta_rows(law, seed, experiment, lo, hi, x.size)
    rows = np.broadcast_to(x, (hi - lo, x.size))
    y = np.exp(_eta_log_products(rows, etas, log_delta))
    return Accumulator().push(y)


def estimate_h(x, law: _inc.IncrementLaw, n: int, seed: int,
               experiment: int = _EXP_H, threads: int = 1) -> MCEstimate:
    """Superharmonic majorant: mean shifted-gap product over eta draws.

    Each shift gap is at least j - i >= 1 because every zeta is >= 1, so
    each integrand sample dominates the plain gap product pathwise.
    """
    x = as_weyl(x)
    delta = vandermonde(x)
    args = (law, seed, experiment, x, delta.log_abs)
    acc = _merge(map_chunks(_h_chunk, args, n, threads))
    return _scaled(acc, x, delta, _fp(seed, experiment, "h", x, law, n=n))


def _deficit_chunk(args, lo, hi):
    law, seed, experiment, x, t, log_delta = args
    d = x.size
    etas = _eta_rows(law, seed, experiment, lo, hi, d)
    rows = np.broadcast_to(x, (hi - lo, d))
    y = np.exp(_eta_log_products(rows, etas, log_delta))
    s = backend.walk_stats(law, seed, experiment,
                           np.arange(lo, hi, dtype=np.int64), x, t,
                           stop_on_exit=True)
    surv = s.survived == 1
    if surv.any():
        y[surv] -= np.exp(_eta_log_products(s.final_pos[surv], etas[surv],
                                            log_delta))
    return Accumulator().push(y)


def superharmonic_deficit(x, t: float, law: _inc.IncrementLaw, n: int,
                          seed: int, experiment: int = _EXP_DEFICIT,
                          threads: int = 1) -> MCEstimate:
    """Majorant at the start minus its mean over still-ordered paths at t.

    The majorant enters linearly, so one eta draw per path keeps the
    estimator unbiased; reusing that draw on both terms only cancels
    shared noise.  Nonnegative in expectation.
    """
    x = as_weyl(x)
    delta = vandermonde(x)
    args = (law, seed, experiment, x, float(t), delta.log_abs)
    acc = _merge(map_chunks(_deficit_chunk, args, n, threads))
    return _scaled(acc, x, delta, _fp(seed, experiment, "deficit", x, law,
                                   t=float(t), n=n))


# ------------------------------------------------------------ ratio probes


def _require_wide(x, t_scale: float, eps: float) -> None:
    if not t_scale > 1:
        raise PreconditionError("t_scale must exceed 1")
    if not 0 < eps < 0.5:
        raise PreconditionError("eps must lie in (0, 1/2)")
    thr = t_scale ** (0.5 - eps)
    gaps = np.diff(x)
    for j, g in enumerate(gaps):
        if not g > thr:
            raise PreconditionError(
                f"spacing between walkers {j} and {j + 1} is {g:g}, but the "
                f"wide region at (t={t_scale:g}, eps={eps:g}) needs "
                f"> {thr:g}")


def ratio_V_over_delta(x, t: float, eps: float, law: _inc.IncrementLaw,
                       n: int, seed: int, experiment: int = _EXP_RATIO_VD,
                       threads: int = 1) -> MCEstimate:
    """Survivor-mean gap product at time t over the start's gap product.

    Valid only on starts inside the wide region for the declared eps;
    there the ratio should sit near 1, approaching it as t grows.  The
    denominator is deterministic, so the sample SE is the full SE.
    """
    x = as_weyl(x)
    _require_wide(x, t, eps)
    delta = vandermonde(x)
    args = (law, seed, experiment, x, float(t), delta.log_abs)
    acc = _merge(map_chunks(_survival_chunk, args, n, threads))
    return MCEstimate.from_accumulator(
        acc, _fp(seed, experiment, "ratio-vdelta", x, law, t=float(t),
                 eps=float(eps), n=n))


def ratio_delta_over_h(x, t_scale: float, eps: float,
                       law: _inc.IncrementLaw, n: int, seed: int,
                       experiment: int = _EXP_RATIO_DH,
                       threads: int = 1) -> MCEstimate:
    """Start gap product over the estimated majorant, on wide starts.

    The numerator is exact, so the SE comes from the majorant estimate
    through the reciprocal's delta method.
    """
    x = as_weyl(x)
    _require_wide(x, t_scale, eps)
    delta = vandermonde(x)
    args = (law, seed, experiment, x, delta.log_abs)
    acc = _merge(map_chunks(_h_chunk, args, n, threads))
    base = MCEstimate.from_accumulator(
        acc, _fp(seed, experiment, "ratio-deltah", x, law,
                 t_scale=float(t_scale), eps=float(eps), n=n))
    return MCEstimate(1.0 / base.mean, base.se / base.mean ** 2, base.n,
                      base.seed_fingerprint)


def _moment_chunk(args, lo, hi):
    law, seed, experiment, x, t, p, log_norm = args
    s = backend.walk_stats(law, seed, experiment,
                           np.arange(lo, hi, dtype=np.int64), x, t)
    _, logs = signed_log_gap_product(s.final_pos)
    return Accumulator().push(np.exp(p * (logs - log_norm)))


def moment_bound_probe(x, t: float, p: float, law: _inc.IncrementLaw,
                       n: int, seed: int, experiment: int = _EXP_MOMENT,
                       threads: int = 1) -> MCEstimate:
    """Normalized p-norm of the free gap product at time t.

    The statistic is (mean |gap product|^p)^(1/p) divided by the start's
    gap product times t^(d*d); it should stay bounded in t.  Requires
    unit spacings at the start.  SE via the p-th-root delta method.
    """
    x = as_weyl(x)
    if not p >= 1:
        raise PreconditionError("p must be at least 1")
    gaps = np.diff(x)
    if gaps.size and gaps.min() < 1:
        j = int(np.argmin(gaps))
        raise PreconditionError(
            f"spacing between walkers {j} and {j + 1} is {gaps.min():g}; "
            f"the moment probe needs spacings >= 1")
    delta = vandermonde(x)
    log_norm = delta.log_abs + x.size ** 2 * math.log(t)
    args = (law, seed, experiment, x, float(t), float(p), log_norm)
    acc = _merge(map_chunks(_moment_chunk, args, n, threads))
    base = MCEstimate.from_accumulator(
        acc, _fp(seed, experiment, "moment-probe", x, law, t=float(t),
                 p=float(p), n=n))
    stat = base.mean ** (1.0 / p)
    se = base.se * stat / (p * base.mean) if base.mean > 0 else 0.0
    return MCEstimate(stat, se, base.n, base.seed_fingerprint)
