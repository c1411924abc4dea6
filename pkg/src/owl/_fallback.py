"""Vectorized numpy twin of the compiled kernels.

Selected by the backend dispatcher when the extension is unavailable or
explicitly disabled.  Every routine here consumes the same streams at the
same indices with the same formulas as the compiled code; the only licensed
divergence is last-ulp libm noise inside log1p/cos/sin.  The walk engine
trades the event loop for per-walker cumulative sums and an adjacent-pair
merge, which changes the work layout but not a single drawn value.
"""

from __future__ import annotations

import math

import numpy as np

from . import increments as _inc
from . import streams as _streams

BACKEND_NAME = "vectorized"

_MAXD = 64
_MAXDEPTH = 20

# Working-set budget for one sub-batch of the walk engine, in bytes.  The
# pair merge holds a handful of (replicas, d-1, 2K) float64/int64 arrays.
_TARGET_BYTES = 48 << 20

_FAMILY_IDS = {
    "gaussian": 0,
    "centered-exponential": 1,
    "laplace-normalized": 2,
    "uniform-normalized": 3,
    "custom-grid-density": 4,
}

_FAMILY_BY_ID = {v: k for k, v in _FAMILY_IDS.items()}


def _law_from_wire(family: int, g, f):
    if family == 4:
        return _inc.custom_grid(_inc.GridDensity(np.asarray(g), np.asarray(f)))
    return _inc.make_law(_FAMILY_BY_ID[family])


# --- introspection twins ----------------------------------------------------

def derive_key64(seed, experiment, replica, lane):
    k0, k1 = _streams.derive_key(seed, experiment, np.uint64(replica),
                                 np.uint64(lane))
    return int(k0), int(k1)


def uniform_run(seed, experiment, replica, lane, count):
    k0, k1 = _streams.derive_key(seed, experiment, np.uint64(replica),
                                 np.uint64(lane))
    return _streams.uniform_span(k0, k1, 0, count)


def law_run(family, g, f, F, seed, experiment, replica, lane, count):
    del F  # the numpy path rebuilds the cdf from the tabulation
    law = _law_from_wire(family, g, f)
    k0, k1 = _streams.derive_key(seed, experiment, np.uint64(replica),
                                 np.uint64(lane))
    return _inc.draws_span(law, k0, k1, 0, count)


# --- event-driven walk, vectorized ------------------------------------------

def _stream_keys(seed, experiment, replicas, role, segment, d):
    """Keys for (replica, walker) streams of one role; shape (R, d) each."""
    lanes = np.array([_streams.pack_lane(role, segment, j) for j in range(d)],
                     dtype=np.uint64)
    return _streams.derive_key(seed, experiment,
                               np.asarray(replicas, dtype=np.uint64)[:, None],
                               lanes[None, :])


def _arrival_times(k0, k1, horizon):
    """Cumulative jump times per (replica, walker), padded past the horizon.

    Columns beyond a stream's drawn range are +inf placeholders; every
    finite entry is the exact running sum the scalar loop would hold.
    """
    count = max(8, int(horizon + 6.0 * math.sqrt(max(horizon, 1.0)) + 16.0))
    u = _streams.uniform_span(k0, k1, 0, count)
    times = np.cumsum(-np.log1p(-u), axis=-1)
    while True:
        short = times[..., -1] <= horizon
        if not short.any():
            return times
        k0s, k1s = k0[short], k1[short]
        ext = _streams.uniform_span(k0s, k1s, count, count)
        ext = times[short][:, -1:] + np.cumsum(-np.log1p(-ext), axis=-1)
        grown = np.full(times.shape[:-1] + (2 * count,), np.inf)
        grown[..., :count] = times
        grown[short, count:] = ext
        times = grown
        count *= 2


def _postjump_positions(start, inc, n_events):
    """Per-walker cumulative positions with a leading start column.

    Returns (R, d, K+1): column m is the walker's value after its first m
    jumps, summed in event order exactly like the scalar loop.
    """
    masked = np.where(np.arange(inc.shape[-1]) < n_events[..., None], inc, 0.0)
    cpad = np.concatenate(
        [np.zeros(masked.shape[:-1] + (1,)), np.cumsum(masked, axis=-1)],
        axis=-1)
    return start[..., None] + cpad


def _pair_exit_times(times, pos, n_events, horizon):
    """First time each adjacent labelled gap closes (<= 0), else +inf.

    Merges the two walkers' event sequences per pair and evaluates the gap
    after every merged event from the same per-walker sums the scalar loop
    uses, so the comparison is bitwise the kernel's `v <= neighbour`.
    Padding slots sort past every real event and are masked off.
    """
    nrep, d, K = times.shape
    if d == 1:
        return np.full(nrep, np.inf)
    tl, tr = times[:, :-1, :], times[:, 1:, :]
    merged = np.concatenate([tl, tr], axis=-1)                 # (R, d-1, 2K)
    order = np.argsort(merged, axis=-1, kind="stable")
    sorted_t = np.take_along_axis(merged, order, axis=-1)
    from_right = order >= K
    cr = np.minimum(np.cumsum(from_right, axis=-1), n_events[:, 1:, None])
    cl = np.minimum(np.cumsum(~from_right, axis=-1), n_events[:, :-1, None])
    pl = np.take_along_axis(pos[:, :-1, :], cl, axis=-1)
    pr = np.take_along_axis(pos[:, 1:, :], cr, axis=-1)
    hit = (pr - pl <= 0.0) & (sorted_t <= horizon)
    first = hit.argmax(axis=-1)
    any_hit = hit.any(axis=-1)
    pair_tau = np.where(
        any_hit, np.take_along_axis(sorted_t, first[..., None], -1)[..., 0],
        np.inf)
    return pair_tau.min(axis=-1)


def _region_entry_times(times, pos, start, n_events, horizon, cutoff, thr):
    """First event time with every adjacent spacing strictly above thr.

    0 when the start already qualifies; +inf when never before min(horizon,
    cutoff).  Walks every replica's globally merged event sequence.
    """
    nrep, d, K = times.shape
    at_start = np.all(np.diff(start, axis=-1) > thr, axis=-1)
    nu = np.where(at_start, 0.0, np.inf)
    if d == 1 or K == 0:
        return nu
    flat = times.reshape(nrep, d * K)                  # walker-major: ties
    order = np.argsort(flat, axis=-1, kind="stable")   # break low walker first
    sorted_t = np.take_along_axis(flat, order, axis=-1)
    walker = order // K
    counts = np.cumsum(walker[:, None, :] == np.arange(d)[None, :, None],
                       axis=-1)                        # (R, d, dK)
    counts = np.minimum(counts, n_events[..., None])
    vals = np.take_along_axis(pos, counts, axis=-1)    # walker value per step
    wide = np.all(np.diff(vals, axis=1) > thr, axis=1)
    hit = wide & (sorted_t <= np.minimum(horizon, cutoff[:, None]))
    any_hit = hit.any(axis=-1)
    first = hit.argmax(axis=-1)
    found = np.take_along_axis(sorted_t, first[:, None], -1)[:, 0]
    return np.where(at_start, 0.0, np.where(any_hit, found, np.inf))


def _walk_batch(seed, experiment, replicas, start, segment, horizon,
                law, spacing_threshold, stop_on_exit,
                survived, exit_time, exit_pos, final_pos,
                run_max, run_min, nu_time, jump_counts):
    nrep, d = start.shape
    tk0, tk1 = _stream_keys(seed, experiment, replicas, _streams.ROLE_TIMES,
                            segment, d)
    ik0, ik1 = _stream_keys(seed, experiment, replicas, _streams.ROLE_INC,
                            segment, d)
    times = _arrival_times(tk0, tk1, horizon)
    n_events = (times <= horizon).sum(axis=-1)
    n_draw = int(n_events.max(initial=0))
    inc = _inc.draws_span(law, ik0, ik1, 0, n_draw)
    pos = _postjump_positions(start, inc, n_events)

    start_ok = np.all(np.diff(start, axis=-1) > 0.0, axis=-1)
    tau = np.where(start_ok, _pair_exit_times(times, pos, n_events, horizon),
                   0.0)
    exited = tau <= horizon                       # inf == never within window

    # The scalar loop stops at the exit event when asked; every per-walker
    # reduction below then runs to min(tau, horizon) instead of the horizon.
    cutoff = np.where(exited & bool(stop_on_exit), tau, horizon)
    counts = (times <= cutoff[:, None, None]).sum(axis=-1)
    final = np.take_along_axis(pos, counts[..., None], axis=-1)[..., 0]

    top = np.where(np.arange(pos.shape[-1] - 1) < counts[:, -1, None],
                   pos[:, -1, 1:], -np.inf)
    bot = np.where(np.arange(pos.shape[-1] - 1) < counts[:, 0, None],
                   pos[:, 0, 1:], np.inf)
    run_max[:] = np.maximum(start[:, -1], top.max(axis=-1, initial=-np.inf))
    run_min[:] = np.minimum(start[:, 0], bot.min(axis=-1, initial=np.inf))

    if spacing_threshold >= 0.0:
        nu_time[:] = _region_entry_times(times, pos, start, n_events, horizon,
                                         cutoff, spacing_threshold)
    else:
        nu_time[:] = np.inf

    survived[:] = (~exited).astype(np.uint8)
    exit_time[:] = np.where(exited, tau, np.inf)
    exit_counts = np.minimum((times <= tau[:, None, None]).sum(axis=-1),
                             n_events)
    at_exit = np.take_along_axis(pos, exit_counts[..., None], axis=-1)[..., 0]
    exit_pos[:] = np.where(exited[:, None], at_exit, np.nan)
    final_pos[:] = final
    jump_counts[:] = counts


def walk_terminal(seed, experiment, replicas, start, segment, horizon,
                  family, g, f, F, spacing_threshold, stop_on_exit,
                  survived, exit_time, exit_pos, final_pos,
                  run_max, run_min, nu_time, jump_counts):
    """Drop-in twin of the compiled walk loop; see its docstring."""
    del F
    replicas = np.asarray(replicas, dtype=np.int64)
    start = np.asarray(start, dtype=np.float64)
    nrep, d = start.shape
    if not 1 <= d <= _MAXD:
        raise ValueError(f"walker count {d} outside 1..{_MAXD}")
    if replicas.shape[0] != nrep:
        raise ValueError("start must have one row per replica")
    law = _law_from_wire(family, g, f)

    events = max(horizon, 1.0)
    per_rep = d * events * 8 * 14
    if spacing_threshold >= 0.0:
        per_rep += d * d * events * 8 * 3
    step = max(1, int(_TARGET_BYTES / max(per_rep, 1.0)))
    for lo in range(0, nrep, step):
        hi = min(lo + step, nrep)
        s = slice(lo, hi)
        _walk_batch(seed, experiment, replicas[s], start[s], segment, horizon,
                    law, spacing_threshold, stop_on_exit,
                    survived[s], exit_time[s], exit_pos[s], final_pos[s],
                    run_max[s], run_min[s], nu_time[s], jump_counts[s])


# --- coupled Dyson integrator, scalar mirror --------------------------------

class _ScalarStream:
    """Sequential reader over one stream, prefetching uniform blocks."""

    _CHUNK = 1024
    __slots__ = ("k0", "k1", "pos", "buf", "lo", "z1", "have_z1")

    def __init__(self, seed, experiment, replica, lane):
        self.k0, self.k1 = _streams.derive_key(
            seed, experiment, np.uint64(replica), np.uint64(lane))
        self.pos = 0
        self.buf = None
        self.lo = 0
        self.z1 = 0.0
        self.have_z1 = False

    def uniform(self):
        i = self.pos
        if self.buf is None or not self.lo <= i < self.lo + self._CHUNK:
            self.lo = i
            self.buf = _streams.uniform_span(self.k0, self.k1, i, self._CHUNK)
        self.pos = i + 1
        return float(self.buf[i - self.lo])

    def gauss(self):
        if self.have_z1:
            self.have_z1 = False
            return self.z1
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log1p(-u1))
        ang = 2.0 * math.pi * u2
        self.z1 = r * math.sin(ang)
        self.have_z1 = True
        return r * math.cos(ang)


def _min_spacing(x):
    return math.inf if x.size < 2 else float(np.diff(x).min())


def _euler_step(x, dt, noise):
    # Scalar accumulation in the kernel's loop order keeps the two backends
    # bit-identical; systems are small, so no vectorization is lost.
    clamp = 1.0 / math.sqrt(dt)
    sq = math.sqrt(dt)
    d = x.size
    out = np.empty_like(x)
    for i in range(d):
        drift = 0.0
        xi = x[i]
        for j in range(d):
            if j != i:
                drift += 1.0 / (xi - x[j])
        if drift > clamp:
            drift = clamp
        elif drift < -clamp:
            drift = -clamp
        out[i] = xi + sq * noise[i] + drift * dt
    return out


def _advance_pair(y, z, dt, depth, stream):
    if depth < _MAXDEPTH and (_min_spacing(y) < 10.0 * math.sqrt(dt) or
                              _min_spacing(z) < 10.0 * math.sqrt(dt)):
        _advance_pair(y, z, dt * 0.5, depth + 1, stream)
        _advance_pair(y, z, dt * 0.5, depth + 1, stream)
        return
    if _min_spacing(y) < 1e-12 or _min_spacing(z) < 1e-12:
        raise FloatingPointError(
            "spacing collapse below 1e-12; the step is too coarse")
    noise = np.array([stream.gauss() for _ in range(y.size)])
    ny = _euler_step(y, dt, noise)
    nz = _euler_step(z, dt, noise)
    if np.diff(ny).min(initial=np.inf) <= 0.0 or \
            np.diff(nz).min(initial=np.inf) <= 0.0:
        if depth >= _MAXDEPTH:
            raise FloatingPointError(
                "level crossing persisted at maximal refinement; "
                "the step is too coarse")
        _advance_pair(y, z, dt * 0.5, depth + 1, stream)
        _advance_pair(y, z, dt * 0.5, depth + 1, stream)
        return
    y[:] = ny
    z[:] = nz


def dyson_pair(seed, experiment, replicas, y0, z0, step, nsteps,
               out_y, out_z):
    """Drop-in twin of the compiled coupled integrator; see its docstring."""
    replicas = np.asarray(replicas, dtype=np.int64)
    y0 = np.asarray(y0, dtype=np.float64)
    z0 = np.asarray(z0, dtype=np.float64)
    d = y0.shape[0]
    if not 1 <= d <= _MAXD:
        raise ValueError(f"system size {d} outside 1..{_MAXD}")
    lane = _streams.pack_lane(_streams.ROLE_SDE, 0, 0)
    for r, rep in enumerate(replicas):
        stream = _ScalarStream(seed, experiment, int(rep), lane)
        y = y0.copy()
        z = z0.copy()
        out_y[r, 0] = y
        out_z[r, 0] = z
        for k in range(nsteps):
            try:
                _advance_pair(y, z, step, 0, stream)
            except FloatingPointError as exc:
                raise FloatingPointError(
                    f"{exc} (replica {int(rep)} near time "
                    f"{(k + 1) * step:g})") from None
            out_y[r, k + 1] = y
            out_z[r, k + 1] = z
