"""Edge-window rescaling, linear statistics, and two-sample comparison.

Near its top edge at a late time the ordered ensemble concentrates
around twice the square-root scale; the affine map here recenters a
window of width a fractional power of the horizon around that edge and
stretches both axes so different horizons (and the Brownian ensemble)
land on one common picture.  Everything in the module is a deterministic
transform of already-simulated levels; the only sampler is the matrix
oracle for the largest-level reference distribution.

The exponent pair works as (T, a) with a in (0, 1/2).  When a run wants
the walker count tied to the horizon the caller picks a = ln(d)/ln(T);
the transforms themselves treat the two as independent, which is what
makes desk-scale comparisons possible at all: the tied choice puts any
d >= 5 astronomically far out of reach, so tests match (d, T) across
ensembles directly and probe the approximation mechanism instead of the
literal double limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import conditioned
from .errors import PreconditionError
from .paths import PathEnsemble, positions_at
from .conditioned import EigenPath, WeightedEnsembleSet

__all__ = [
    "EdgeEnsemble", "LinearStatisticSpec", "polynomial_spec",
    "edge_window", "edge_rescale", "edge_rescale_levels",
    "top_particle_statistic", "top_statistic_array",
    "gue_max_eigenvalue_samples",
    "linear_statistic", "linear_statistic_array",
    "two_sample_report", "weighted_mean_se",
    "centered_statistic_samples", "ensemble_levels", "G_CATALOG",
]

_EXP_GUE = 0x31


# --- domain types -----------------------------------------------------------

@dataclass(frozen=True)
class EdgeEnsemble:
    """One replica's top-k lines in edge coordinates.

    Line 0 is the highest walker: the window transform reverses the
    bottom-up ordering of the source so the picture reads like the
    limiting line ensemble, top line first.  lines[i] therefore strictly
    dominates lines[i+1] at every grid time.
    """

    T: float
    a: float
    d: int
    k: int
    L: float
    time_grid: np.ndarray
    lines: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.time_grid, dtype=np.float64)
        lines = np.asarray(self.lines, dtype=np.float64)
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "lines", lines)
        if not 0.0 < self.a < 0.5:
            raise PreconditionError("a must lie in (0, 1/2)")
        if not 1 <= self.k <= self.d:
            raise PreconditionError(f"k = {self.k} outside 1..{self.d}")
        if grid.ndim != 1 or grid.size == 0 or np.any(np.abs(grid) > self.L):
            raise PreconditionError("grid must sit inside [-L, L]")
        if lines.shape != (self.k, grid.size):
            raise PreconditionError(
                f"lines shape {lines.shape} does not match "
                f"{(self.k, grid.size)}")
        if self.k > 1 and np.any(np.diff(lines, axis=0) >= 0):
            raise PreconditionError(
                "lines must be strictly ordered, top line first")


@dataclass(frozen=True)
class LinearStatisticSpec:
    """Sum-over-times polynomial observable of a rescaled replica.

    The statistic applies coeffs[i] (ascending powers, degree <= 4) to
    the rescaled level at eval_times[i], sums over times and walkers.
    Times live in [delta, 1] on the unit clock; the caller multiplies by
    the horizon when evaluating a source.
    """

    eval_times: np.ndarray
    coeffs: np.ndarray
    delta: float

    def __post_init__(self):
        t = np.asarray(self.eval_times, dtype=np.float64)
        c = np.asarray(self.coeffs, dtype=np.float64)
        object.__setattr__(self, "eval_times", t)
        object.__setattr__(self, "coeffs", c)
        if not 0.0 < self.delta <= 1.0:
            raise PreconditionError("delta must lie in (0, 1]")
        if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
            raise PreconditionError(
                "eval_times must be strictly increasing")
        if t[0] < self.delta or t[-1] > 1.0:
            raise PreconditionError(
                f"eval_times must lie in [{self.delta:g}, 1]")
        if c.shape[0] != t.size or c.ndim != 2 or c.shape[1] > 5:
            raise PreconditionError(
                "coeffs needs one row per time, degree at most 4")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("coefficients must be finite")


def polynomial_spec(eval_times, coeffs, delta: float | None = None
                    ) -> LinearStatisticSpec:
    """Spec from per-time coefficient lists, padded to a common degree."""
    rows = [np.asarray(c, dtype=np.float64).reshape(-1) for c in coeffs]
    width = max(r.size for r in rows)
    mat = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        mat[i, :r.size] = r
    t = np.asarray(eval_times, dtype=np.float64)
    return LinearStatisticSpec(t, mat, float(t.min(initial=1.0))
                               if delta is None else float(delta))


# --- the edge window --------------------------------------------------------

def edge_window(T: float, a: float, L: float, grid_size: int):
    """(window clock, absolute source times) for the edge transform."""
    if not 0.0 < a < 0.5:
        raise PreconditionError("a must lie in (0, 1/2)")
    if not T > 0 or not L > 0 or grid_size < 1:
        raise PreconditionError("T, L must be positive, grid_size >= 1")
    grid = np.linspace(-L, L, grid_size) if grid_size > 1 \
        else np.zeros(1)
    width = 2.0 * T ** (1.0 - a / 3.0)
    abs_times = T + width * grid
    if abs_times[0] < 0:
        raise PreconditionError(
            f"window reaches time {abs_times[0]:g} < 0; shrink L below "
            f"{T ** (a / 3.0) / 2.0:g}")
    return grid, abs_times


def _edge_affine(levels: np.ndarray, T: float, a: float, k: int,
                 grid: np.ndarray) -> np.ndarray:
    # levels (..., m, d) bottom-up -> (..., k, m) top-down in edge
    # coordinates, the affine map applied exactly as displayed.
    scale = T ** (a / 6.0 - 0.5)
    center = 2.0 * T ** (0.5 + a / 2.0)
    drift = 2.0 * T ** (0.5 + a / 6.0)
    top = levels[..., ::-1][..., :k]
    lines = np.swapaxes(top, -1, -2)
    return scale * (lines - center - drift * grid)


def _source_levels(source, times: np.ndarray) -> np.ndarray:
    if isinstance(source, PathEnsemble):
        if times[-1] > source.horizon:
            raise PreconditionError(
                f"window needs horizon >= {times[-1]:g}, source has "
                f"{source.horizon:g}")
        return positions_at(source, times)
    if isinstance(source, EigenPath):
        idx = np.searchsorted(source.times, times)
        idx = np.minimum(idx, source.times.size - 1)
        ref = max(1.0, float(times[-1]))
        if np.any(np.abs(source.times[idx] - times) > 1e-9 * ref):
            raise PreconditionError(
                "source grid lacks the required evaluation times; "
                "generate it on edge_window(...) absolute times")
        return source.values[idx]
    raise PreconditionError(
        f"unsupported source type {type(source).__name__}")


def edge_rescale(source, T: float, a: float, k: int, L: float,
                 grid_size: int) -> EdgeEnsemble:
    """Top-k lines of one replica in edge coordinates.

    Evaluates the source at the window's absolute times, then applies
    the affine recentering and the index reversal; an affine map of
    ordered levels stays ordered, so the result satisfies the
    EdgeEnsemble invariant by construction.
    """
    grid, abs_times = edge_window(T, a, L, grid_size)
    levels = _source_levels(source, abs_times)
    d = levels.shape[1]
    if k > d:
        raise PreconditionError(f"k = {k} exceeds walker count {d}")
    lines = _edge_affine(levels[None], T, a, k, grid)[0]
    return EdgeEnsemble(T=float(T), a=float(a), d=d, k=k, L=float(L),
                        time_grid=grid, lines=lines)


def edge_rescale_levels(levels: np.ndarray, T: float, a: float, k: int,
                        grid: np.ndarray) -> np.ndarray:
    """Bulk edge transform: (n, grid, d) levels to (n, k, grid) lines."""
    levels = np.asarray(levels, dtype=np.float64)
    if levels.ndim != 3 or levels.shape[1] != np.asarray(grid).size:
        raise PreconditionError("levels must be (replicas, grid, walkers)")
    if not 1 <= k <= levels.shape[2]:
        raise PreconditionError(
            f"k = {k} outside 1..{levels.shape[2]}")
    return _edge_affine(levels, T, a, k, np.asarray(grid, dtype=np.float64))


def top_statistic_array(top_levels: np.ndarray, T: float,
                        a: float) -> np.ndarray:
    """Edge statistic of highest-level values at the horizon, in bulk."""
    top_levels = np.asarray(top_levels, dtype=np.float64)
    return T ** (a / 6.0 - 0.5) * (top_levels - 2.0 * T ** (0.5 + a / 2.0))


def top_particle_statistic(source, T: float, a: float) -> float:
    """The highest walker at time T, recentered and rescaled."""
    if not 0.0 < a < 0.5:
        raise PreconditionError("a must lie in (0, 1/2)")
    levels = _source_levels(source, np.array([float(T)]))
    return float(top_statistic_array(levels[0, -1], T, a))


def gue_max_eigenvalue_samples(d: int, n: int, seed: int,
                               experiment: int = _EXP_GUE) -> np.ndarray:
    """Largest levels of n matrix draws at unit time from a zero start.

    Reuses the matrix-model sampler, so the entry normalization is the
    one every Brownian-side computation in the package uses; d = 1
    degenerates to standard normal samples.
    """
    arr = conditioned.nibm_eigen_array(d, np.zeros(d), [1.0], n, seed,
                                       experiment)
    return arr[:, 0, -1]


# --- linear statistics ------------------------------------------------------

def linear_statistic_array(levels: np.ndarray, spec: LinearStatisticSpec,
                           T: float, a: float) -> np.ndarray:
    """Per-replica statistic from (n, len(eval_times), d) levels."""
    levels = np.asarray(levels, dtype=np.float64)
    m = spec.eval_times.size
    if levels.ndim != 3 or levels.shape[1] != m:
        raise PreconditionError(
            f"levels must be (replicas, {m}, walkers)")
    w = T ** (-0.5 - a / 2.0) * levels
    out = np.zeros(levels.shape[0])
    for i in range(m):
        out += npoly.polyval(w[:, i, :], spec.coeffs[i]).sum(axis=1)
    return out


def linear_statistic(source, spec: LinearStatisticSpec, T: float,
                     a: float) -> float:
    """The statistic for one replica, evaluated at T times the unit clock."""
    levels = _source_levels(source, T * spec.eval_times)
    return float(linear_statistic_array(levels[None], spec, T, a)[0])


# --- two-sample comparison --------------------------------------------------

def weighted_mean_se(x: np.ndarray, weights: np.ndarray | None = None):
    """(mean, standard error); weights are renormalized internally.

    The error uses the effective sample count, so permuting replicas or
    scaling all weights by a positive constant changes nothing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise PreconditionError("empty sample")
    if weights is None:
        m = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return m, se
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != x.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise PreconditionError("weights must be nonnegative, one per value")
    tot = float(w.sum())
    if tot <= 0:
        raise PreconditionError("weights sum to zero")
    w = w / tot
    m = float(np.sum(w * x))
    ess = 1.0 / float(np.sum(w * w))
    var = float(np.sum(w * (x - m) ** 2))
    return m, math.sqrt(var / ess)


def _weighted_cdf(x: np.ndarray, w: np.ndarray | None, grid: np.ndarray):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if w is None:
        c = np.arange(1, x.size + 1, dtype=np.float64) / x.size
    else:
        c = np.cumsum(w[order])
        if not c[-1] > 0:
            raise PreconditionError("weights sum to zero")
        c = c / c[-1]
    idx = np.searchsorted(xs, grid, side="right")
    return np.where(idx > 0, c[np.minimum(idx, c.size) - 1], 0.0)


def two_sample_report(samples_a, samples_b, weights_a=None, weights_b=None
                      ) -> dict:
    """{ks, mean_gap, pooled_se} between two (optionally weighted) samples.

    The KS statistic is the exact sup-distance between the two empirical
    distribution functions over the union of jump points; tied values
    contribute their full mass at the tie, so ties need no auxiliary
    ordering.  mean_gap is mean(A) - mean(B).
    """
    x = np.asarray(samples_a, dtype=np.float64)
    y = np.asarray(samples_b, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise PreconditionError("both samples must be nonempty")
    grid = np.sort(np.concatenate([x, y]))
    fa = _weighted_cdf(x, None if weights_a is None
                       else np.asarray(weights_a, dtype=np.float64), grid)
    fb = _weighted_cdf(y, None if weights_b is None
                       else np.asarray(weights_b, dtype=np.float64), grid)
    ks = float(np.abs(fa - fb).max())
    ma, sa = weighted_mean_se(x, weights_a)
    mb, sb = weighted_mean_se(y, weights_b)
    return {"ks": ks, "mean_gap": ma - mb, "pooled_se": math.hypot(sa, sb)}


# --- centered statistics ----------------------------------------------------

G_CATALOG = {
    "identity-clipped": lambda x: np.clip(x, -5.0, 5.0),
    "tanh-like": np.tanh,
    "indicator-smoothed": lambda x: 0.5 * (1.0 + np.tanh(2.0 * x)),
}


def ensemble_levels(ens: WeightedEnsembleSet,
                    abs_times: np.ndarray) -> np.ndarray:
    """(n, len(abs_times), d) positions pulled from a replica set.

    Final positions stand in for the horizon itself; every other time
    must have been recorded as a snapshot when the sampler ran.
    """
    ref = max(1.0, float(ens.horizon))
    stack = []
    for t in abs_times:
        if abs(t - ens.horizon) <= 1e-9 * ref:
            stack.append(ens.final_pos)
            continue
        for ts, snap in ens.snapshots:
            if abs(t - ts) <= 1e-9 * ref:
                stack.append(snap)
                break
        else:
            raise PreconditionError(
                f"no recorded positions at time {t:g}; rerun the sampler "
                f"with record_times including it")
    return np.stack(stack, axis=1)


def centered_statistic_samples(source, spec: LinearStatisticSpec, T: float,
                               a: float, g: str,
                               weights: np.ndarray | None = None
                               ) -> np.ndarray:
    """g applied to the statistic minus its weighted sample mean.

    source is either a weighted replica set (positions pulled from its
    snapshots, weights from its own field unless overridden) or a raw
    (n, len(eval_times), d) level array.  g names a catalog entry; the
    catalog is finite on purpose, the theorems quantify over a class no
    test can enumerate.
    """
    if g not in G_CATALOG:
        raise PreconditionError(
            f"unknown g {g!r}; choose from {sorted(G_CATALOG)}")
    if isinstance(source, WeightedEnsembleSet):
        levels = ensemble_levels(source, T * spec.eval_times)
        if weights is None:
            weights = source.weights
    else:
        levels = np.asarray(source, dtype=np.float64)
    stat = linear_statistic_array(levels, spec, T, a)
    mean, _ = weighted_mean_se(stat, weights)
    return G_CATALOG[g](stat - mean)
