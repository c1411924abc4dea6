"""Event paths of independent walks and the ordered-region geometry.

A system of d walkers jumps at unit-rate Poisson times with i.i.d.
increments from a chosen law.  This module owns the materialized path
representation plus the derived quantities the estimators condition on:
the first exit from the strictly-ordered chamber (ties count as exits),
the first entry into the wide-spacing region, and running extrema of the
labelled top and bottom walkers.  Bulk statistics that never need full
paths go through backend.walk_stats instead; materialization is for small
ensembles, constructed test inputs, and path dumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fallback
from . import backend
from . import increments as _inc
from . import streams as _streams
from .errors import PreconditionError
from .estimates import Accumulator, MCEstimate, map_chunks

__all__ = [
    "WeylPoint", "PathEnsemble", "as_weyl", "simulate_free",
    "materialize_free", "positions_at", "exit_time", "hitting_time_W_eps",
    "extrema", "repulsion_probe",
]


@dataclass(frozen=True)
class WeylPoint:
    """A strictly increasing start configuration."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coords, dtype=np.float64)
        if c.ndim != 1 or c.size < 1:
            raise PreconditionError("coordinates must be a 1-d vector")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("coordinates must be finite")
        gaps = np.diff(c)
        if gaps.size and gaps.min() <= 0:
            j = int(np.argmin(gaps))
            raise PreconditionError(
                f"coordinates {j} and {j + 1} are not strictly increasing "
                f"({c[j]:g} vs {c[j + 1]:g})")
        object.__setattr__(self, "coords", c)

    @property
    def d(self) -> int:
        return self.coords.size


def as_weyl(x) -> np.ndarray:
    """Validated strictly-ordered coordinates from a point or array-like."""
    if isinstance(x, WeylPoint):
        return x.coords
    return WeylPoint(np.asarray(x, dtype=np.float64)).coords


@dataclass(frozen=True)
class PathEnsemble:
    """Materialized jump paths of d walkers over [0, horizon].

    times[j] holds walker j's jump times, strictly increasing within the
    horizon; values[j] the value right after each jump.  Paths are
    right-continuous step functions starting at start[j].  Cross-walker
    simultaneous jumps are rejected: they have probability zero, so one
    appearing in simulated input signals stream misuse.
    """

    d: int
    start: np.ndarray
    horizon: float
    times: tuple
    values: tuple

    def __post_init__(self):
        if self.d < 1 or len(self.times) != self.d or \
                len(self.values) != self.d:
            raise PreconditionError("one event list per walker required")
        if not self.horizon >= 0:
            raise PreconditionError("horizon must be nonnegative")
        start = np.ascontiguousarray(self.start, dtype=np.float64)
        if start.shape != (self.d,):
            raise PreconditionError("start length must equal walker count")
        times = tuple(np.ascontiguousarray(t, dtype=np.float64)
                      for t in self.times)
        values = tuple(np.ascontiguousarray(v, dtype=np.float64)
                       for v in self.values)
        for j, (t, v) in enumerate(zip(times, values)):
            if t.shape != v.shape or t.ndim != 1:
                raise PreconditionError(
                    f"walker {j}: times and values must be equal-length")
            if t.size and (np.diff(t).min(initial=np.inf) <= 0 or
                           t[0] <= 0 or t[-1] > self.horizon):
                raise PreconditionError(
                    f"walker {j}: jump times must be strictly increasing "
                    f"inside (0, horizon]")
        merged = np.concatenate(times) if self.d else np.empty(0)
        if merged.size != np.unique(merged).size:
            raise PreconditionError(
                "simultaneous jumps across walkers; this has probability "
                "zero and signals stream misuse")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def simulate_free(d: int, start, horizon: float, law: _inc.IncrementLaw,
                  seed: int, experiment: int, replica: int = 0,
                  segment: int = 0) -> PathEnsemble:
    """One free ensemble with materialized events.

    The stream path (seed, experiment, replica, walker, segment) fully
    determines the result; backend.walk_stats over the same path sees the
    identical trajectory.
    """
    [ens] = materialize_free(law, seed, experiment, [replica],
                             np.asarray(start, dtype=np.float64), horizon,
                             segment=segment)
    return ens


def materialize_free(law, seed, experiment, replicas, start, horizon,
                     segment: int = 0) -> list:
    """Materialized free ensembles for a batch of replica indices.

    start is one row per replica or a single shared row.  Memory is
    O(total events); meant for small-horizon ensembles and path dumps.
    """
    replicas = np.asarray(replicas, dtype=np.int64)
    start = np.asarray(start, dtype=np.float64)
    if start.ndim == 1:
        start = np.broadcast_to(start, (replicas.size, start.size))
    d = start.shape[1]
    if not 1 <= d <= backend.MAX_WALKERS:
        raise PreconditionError(
            f"walker count {d} outside 1..{backend.MAX_WALKERS}")
    tk0, tk1 = _fallback._stream_keys(seed, experiment, replicas,
                                      _streams.ROLE_TIMES, segment, d)
    ik0, ik1 = _fallback._stream_keys(seed, experiment, replicas,
                                      _streams.ROLE_INC, segment, d)
    times = _fallback._arrival_times(tk0, tk1, horizon)
    n_events = (times <= horizon).sum(axis=-1)
    inc = _inc.draws_span(law, ik0, ik1, 0, int(n_events.max(initial=0)))
    out = []
    for r in range(replicas.size):
        tr, vr = [], []
        for j in range(d):
            k = int(n_events[r, j])
            tr.append(times[r, j, :k].copy())
            vr.append(start[r, j] + np.cumsum(inc[r, j, :k]))
        out.append(PathEnsemble(d=d, start=start[r].copy(), horizon=horizon,
                                times=tuple(tr), values=tuple(vr)))
    return out


def _counts_at(ens: PathEnsemble, t, side: str = "right") -> np.ndarray:
    return np.stack([np.searchsorted(ens.times[j], t, side=side)
                     for j in range(ens.d)], axis=-1)


def positions_at(ens: PathEnsemble, times) -> np.ndarray:
    """Right-continuous evaluation at each requested time; (len, d)."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if t.size and (t.min() < 0 or t.max() > ens.horizon):
        raise PreconditionError(
            f"evaluation times must lie in [0, {ens.horizon:g}]")
    counts = _counts_at(ens, t)
    out = np.empty((t.size, ens.d))
    for j in range(ens.d):
        vpad = np.concatenate([[ens.start[j]], ens.values[j]])
        out[:, j] = vpad[counts[..., j]]
    return out


def _event_sweep(ens: PathEnsemble):
    """Globally ordered events with the position matrix after each one."""
    all_t = np.concatenate(ens.times)
    walker = np.repeat(np.arange(ens.d), [t.size for t in ens.times])
    order = np.argsort(all_t, kind="stable")
    pos = ens.start.copy()
    for i in order:
        j = int(walker[i])
        k = int(np.searchsorted(ens.times[j], all_t[i], side="right")) - 1
        pos[j] = ens.values[j][k]
        yield float(all_t[i]), j, pos


def exit_time(ens: PathEnsemble):
    """First time adjacent order is lost (ties count); None if never.

    None means "ordered throughout [0, horizon]", not "ordered forever".
    An unordered start returns 0.
    """
    if np.diff(ens.start).min(initial=np.inf) <= 0:
        return 0.0
    for t, j, pos in _event_sweep(ens):
        if (j > 0 and pos[j] <= pos[j - 1]) or \
                (j < ens.d - 1 and pos[j] >= pos[j + 1]):
            return t
    return None


def hitting_time_W_eps(ens: PathEnsemble, t_scale: float, eps: float):
    """First time every adjacent spacing exceeds t_scale^(1/2 - eps).

    0 when the start already qualifies; None if never within the horizon.
    """
    if not t_scale > 1:
        raise PreconditionError("t_scale must exceed 1")
    if not 0 < eps < 0.5:
        raise PreconditionError("eps must lie in (0, 1/2)")
    thr = t_scale ** (0.5 - eps)
    if np.diff(ens.start).min(initial=np.inf) > thr:
        return 0.0
    for t, _, pos in _event_sweep(ens):
        if np.diff(pos).min(initial=np.inf) > thr:
            return t
    return None


def extrema(ens: PathEnsemble, t: float):
    """(running max of the top walker, running min of the bottom) on [0, t].

    Top and bottom are by label: the walkers that started highest and
    lowest, whatever the ordering does later.
    """
    if not 0 <= t <= ens.horizon:
        raise PreconditionError(f"t must lie in [0, {ens.horizon:g}]")
    top_vals = ens.values[ens.d - 1][:np.searchsorted(
        ens.times[ens.d - 1], t, side="right")]
    bot_vals = ens.values[0][:np.searchsorted(ens.times[0], t, side="right")]
    m_top = max(float(ens.start[-1]), float(top_vals.max(initial=-np.inf)))
    m_bot = min(float(ens.start[0]), float(bot_vals.min(initial=np.inf)))
    return m_top, m_bot


_EXP_REPULSION = 0xB2


def _repulsion_chunk(args, lo, hi):
    law, seed, experiment, start, t, delta, segment = args
    s_window = float(t) ** (1.0 - delta)
    thr = float(t) ** (0.5 - delta)
    stats = backend.walk_stats(
        law, seed, experiment, np.arange(lo, hi, dtype=np.int64), start,
        horizon=s_window, segment=segment, spacing_threshold=thr,
        stop_on_exit=True)
    joint = (stats.survived == 1) & np.isinf(stats.nu_time)
    return Accumulator().push(joint.astype(np.float64))


def repulsion_probe(d: int, start, law: _inc.IncrementLaw, t_values,
                    delta: float, n: int, seed: int,
                    experiment: int = _EXP_REPULSION,
                    threads: int = 1) -> list:
    """P(still narrow and still ordered at time t^(1-delta)), per t.

    The wide-spacing region uses threshold t^(1/2 - delta); the estimates
    at successive t values use disjoint stream segments, so they are
    independent.
    """
    t_values = [float(t) for t in t_values]
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise PreconditionError("t_values must be increasing")
    if not 0 < delta < 0.5:
        raise PreconditionError("delta must lie in (0, 1/2)")
    if any(t <= 1 for t in t_values):
        raise PreconditionError("t values must exceed 1")
    start = np.asarray(start, dtype=np.float64)
    if start.shape != (d,):
        raise PreconditionError("start length must equal walker count")
    out = []
    for i, t in enumerate(t_values):
        args = (law, seed, experiment, start, t, delta, i)
        acc = Accumulator()
        for part in map_chunks(_repulsion_chunk, args, n, threads):
            acc.merge(part)
        fp = _streams.seed_fingerprint(seed, experiment, "repulsion-probe",
                                       {"t": t, "delta": delta, "d": d})
        out.append(MCEstimate.from_accumulator(acc, fp))
    return out
