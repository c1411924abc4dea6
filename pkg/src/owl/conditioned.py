"""Samplers for order-conditioned walks and non-intersecting diffusions.

Two routes produce the conditioned walk ensemble.  Rejection keeps free
replicas whose walkers never meet before the horizon: exact, but priced
at the survival probability, so it only works when that probability is
visible.  The particle route propagates a population between checkpoints,
kills crossers, reweights survivors by the gap-product ratio, and
resamples when the weights degenerate; its final weighted set targets the
gap-product-tilted law, the computable stand-in for the true conditioning.

The Brownian side needs no conditioning trick: eigenvalues of a matrix
of independent Brownian entries are the non-intersecting motion exactly,
so marginals come from accumulating Hermitian increments and calling an
eigensolver.  A shared-noise Euler integrator for the eigenvalue SDE
exists alongside it solely for coupling experiments, where two systems
must see identical driving noise.

Particle streams are keyed by particle index and segment, never by
worker, so every result here is reproducible from (seed, experiment)
alone regardless of batching or thread count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from . import increments as _inc
from . import streams
from .errors import ExtinctionError, FeasibilityError, OwlError, \
    PreconditionError
from .estimates import Accumulator, MCEstimate, map_chunks
from .logspace import signed_log_gap_product
from .paths import as_weyl, materialize_free
from .streams import RngStream, pack_lane, seed_fingerprint

__all__ = [
    "WeightedEnsembleSet", "EigenPath",
    "sample_ordered_rejection", "sample_ordered_smc",
    "gap_product_weights", "equal_weight_indices",
    "nibm_eigen_array", "nibm_matrix_marginals",
    "dyson_sde_coupled", "dyson_coupled_batch",
    "perturbed_start", "brownian_start_sensitivity",
]

_log = logging.getLogger(__name__)

_EXP_REJECTION = 0x21
_EXP_SMC = 0x22
_EXP_NIBM = 0x23
_EXP_COUPLING = 0x24
_EXP_SENSITIVITY = 0x25

_GAUSS = _inc.gaussian()
_SQRT2 = math.sqrt(2.0)


# --- domain types -----------------------------------------------------------

@dataclass(frozen=True)
class EigenPath:
    """One replica's ordered levels on a time grid.

    Rows are nondecreasing; strictness holds almost surely away from a
    degenerate start, and the samplers treat a tie at positive time as a
    numerics failure rather than a value.  `meta` is free-form per-path
    bookkeeping (the coupled integrator records which grid steps entered
    its refinement regime there).
    """

    d: int
    times: np.ndarray
    values: np.ndarray
    meta: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.size == 0:
            raise PreconditionError("times must be a nonempty 1-d vector")
        if np.any(np.diff(times) <= 0):
            raise PreconditionError("times must be strictly increasing")
        if values.shape != (times.size, self.d):
            raise PreconditionError(
                f"values shape {values.shape} does not match "
                f"{(times.size, self.d)}")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("levels must be finite")
        if self.d > 1 and np.any(np.diff(values, axis=1) < 0):
            raise PreconditionError("each row must be ordered")


@dataclass(frozen=True)
class WeightedEnsembleSet:
    """A weighted population of conditioned-walk replicas at the horizon.

    Both samplers summarize each replica by its final position (at the
    horizon for survivors, at the exit for killed particles, which carry
    weight zero).  `replicas` optionally holds materialized paths when
    the producer was asked to keep them; the particle route records
    checkpoint diagnostics and, on request, ancestry-aligned position
    snapshots instead, because keeping every path at population scale
    would dwarf the statistics being estimated.

    `weights` are normalized; `ess` is the reciprocal sum of squared
    weights, the usual effective-sample count.  `norm_constant` (particle
    route only) estimates the ratio of the tilt function's killed-path
    expectation at the horizon to its start value.
    """

    d: int
    method: str
    horizon: float
    start: np.ndarray
    final_pos: np.ndarray
    survived: np.ndarray
    weights: np.ndarray
    ess: float
    resample_times: tuple = ()
    ess_history: tuple = ()
    norm_constant: float | None = None
    acceptance_rate: float | None = None
    snapshots: tuple = ()
    replicas: tuple | None = None
    weight_mode: str = "gap-product"

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def __post_init__(self):
        for name in ("start", "final_pos", "survived", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        if self.method not in ("rejection", "smc"):
            raise PreconditionError(f"unknown method {self.method!r}")
        n = self.weights.size
        if self.final_pos.shape != (n, self.d) or self.survived.shape != (n,):
            raise PreconditionError("replica arrays disagree on n or d")
        if self.start.shape != (self.d,):
            raise PreconditionError("start must have one coordinate per walker")
        w = self.weights
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise PreconditionError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise PreconditionError("weights must sum to 1 within 1e-12")
        if np.any(w[self.survived == 0] != 0.0):
            raise PreconditionError("killed replicas must carry weight zero")
        ssq = float((w * w).sum())
        if abs(self.ess * ssq - 1.0) > 1e-9:
            raise PreconditionError("ess must equal 1/sum(w^2)")
        if not 1.0 - 1e-9 <= self.ess <= n * (1.0 + 1e-9):
            raise PreconditionError(f"ess {self.ess:g} outside [1, {n}]")
        if self.method == "rejection" and (np.ptp(w) != 0.0
                                           or not np.all(self.survived == 1)):
            raise PreconditionError(
                "rejection sets have equal weights and only survivors")


def gap_product_weights(ens: WeightedEnsembleSet) -> np.ndarray:
    """Weights retargeting `ens` to the gap-product-tilted law.

    Multiplies each surviving replica's weight by the gap product of its
    final position and renormalizes.  Applied to a rejection set (plain
    conditioning, equal weights) this lands on exactly the law the
    particle route targets, which is what makes the two comparable.
    """
    signs, logs = signed_log_gap_product(ens.final_pos)
    lw = np.full(ens.n, -np.inf)
    live = (ens.survived == 1) & (ens.weights > 0) & (signs > 0)
    lw[live] = np.log(ens.weights[live]) + logs[live]
    if not np.any(live):
        raise FeasibilityError("no surviving replicas to reweight")
    mx = lw[live].max()
    w = np.exp(lw - mx)
    return w / w.sum()


def equal_weight_indices(ens: WeightedEnsembleSet, seed: int,
                         experiment: int = 0x26) -> np.ndarray:
    """Ancestor indices that flatten a weighted set to equal weights.

    One systematic comb: a single uniform places n equally spaced points
    on the cumulative weights, so zero-weight replicas can never be
    drawn and duplication is the price of exactness.  Use it when an
    artifact format has no weight column.
    """
    w = np.asarray(ens.weights, dtype=np.float64)
    if not w.sum() > 0:
        raise FeasibilityError("no positive-weight replicas to draw from")
    cum = np.cumsum(w)
    cum /= cum[-1]
    n = w.size
    u = float(RngStream(seed, experiment, 0,
                        pack_lane(streams.ROLE_RESAMPLE, 0, 0)).take(1)[0])
    pts = (u + np.arange(n)) / n
    return np.minimum(np.searchsorted(cum, pts, side="left"), n - 1)


# --- start preparation ------------------------------------------------------

def _prepare_start(start, d: int, horizon: float,
                   allow_perturb: bool) -> np.ndarray:
    x = np.array(start, dtype=np.float64).reshape(-1)
    if x.size != d:
        raise PreconditionError(f"start has {x.size} coordinates, d = {d}")
    if not np.all(np.isfinite(x)):
        raise PreconditionError("start coordinates must be finite")
    if np.any(np.diff(x) < 0):
        raise PreconditionError("start coordinates must be nondecreasing")
    if np.all(np.diff(x) > 0):
        return x
    if not allow_perturb:
        j = int(np.nonzero(np.diff(x) <= 0)[0][0])
        raise PreconditionError(
            f"start coordinates {j} and {j + 1} tie and perturbation "
            "is disabled")
    # Ties are opened to a spacing far below every scale the walk can
    # resolve over this horizon; the conditioned law from exact ties is
    # not something the samplers define.
    eps = 1e-9 * math.sqrt(horizon) if horizon > 0 else 1e-9
    for i in range(1, d):
        if x[i] <= x[i - 1]:
            x[i] = x[i - 1] + eps
    _log.warning("tied start coordinates perturbed to spacing %.3g", eps)
    return x


# --- exact rejection --------------------------------------------------------

def _rejection_chunk(args, lo, hi):
    d, start, horizon, law, seed, experiment = args
    reps = np.arange(lo, hi, dtype=np.int64)
    st = backend.walk_stats(law, seed, experiment, reps, start, horizon,
                            stop_on_exit=True)
    return st.survived.astype(np.uint8), st.final_pos


def sample_ordered_rejection(d: int, start, horizon: float,
                             law: _inc.IncrementLaw, n_accept: int,
                             max_attempts: int, seed: int,
                             experiment: int = _EXP_REJECTION,
                             keep_paths: bool = False,
                             allow_perturb: bool = True,
                             threads: int = 1) -> WeightedEnsembleSet:
    """Free replicas conditioned on staying ordered, by rejection.

    Replica indices are scanned in order and the first n_accept survivors
    are kept, so the accepted set does not depend on batch size or thread
    count.  The reported acceptance rate counts exactly the attempts up
    to and including the last accepted index.
    """
    if n_accept < 1:
        raise PreconditionError("n_accept must be at least 1")
    if max_attempts < n_accept:
        raise PreconditionError("max_attempts below n_accept cannot succeed")
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    x0 = _prepare_start(start, d, horizon, allow_perturb)

    taken_idx: list[int] = []
    taken_rows: list[np.ndarray] = []
    attempts = 0
    block = 8192 * max(1, threads)
    while attempts < max_attempts and len(taken_idx) < n_accept:
        m = min(block, max_attempts - attempts)
        parts = map_chunks(_rejection_chunk,
                           (d, x0, horizon, law, seed, experiment),
                           m, threads, offset=attempts)
        base = attempts
        for surv, fin in parts:
            hit = np.nonzero(surv)[0]
            for k in hit:
                taken_idx.append(base + int(k))
                taken_rows.append(fin[k].copy())
            base += surv.size
        attempts += m
        # Size the next block from the observed rate, with headroom, so a
        # thin acceptance probability does not mean thousands of rounds.
        if len(taken_idx) < n_accept:
            rate = max(len(taken_idx) / attempts, 1.0 / attempts)
            need = (n_accept - len(taken_idx)) / rate
            block = int(min(max(8192 * max(1, threads), 1.3 * need), 2 ** 20))

    if len(taken_idx) < n_accept:
        rate = len(taken_idx) / attempts if attempts else 0.0
        raise FeasibilityError(
            f"rejection accepted {len(taken_idx)}/{n_accept} in {attempts} "
            f"attempts (rate {rate:.2e}); raise max_attempts, shorten the "
            "horizon, or switch to the particle route")

    idx = np.array(taken_idx[:n_accept], dtype=np.int64)
    final = np.stack(taken_rows[:n_accept])
    rate = n_accept / float(idx[-1] + 1)
    paths = None
    if keep_paths:
        paths = tuple(materialize_free(law, seed, experiment, idx, x0,
                                       horizon))
    w = np.full(n_accept, 1.0 / n_accept)
    return WeightedEnsembleSet(
        d=d, method="rejection", horizon=float(horizon), start=x0,
        final_pos=final, survived=np.ones(n_accept, dtype=np.uint8),
        weights=w, ess=float(n_accept), acceptance_rate=rate,
        replicas=paths)


# --- particle route ---------------------------------------------------------

def _smc_prop_chunk(args, lo, hi):
    law, seed, experiment, reps, rows, seg_idx, dt = args
    st = backend.walk_stats(law, seed, experiment, reps[lo:hi], rows[lo:hi],
                            dt, segment=seg_idx, stop_on_exit=True)
    return st.survived, st.final_pos


def _checkpoint_schedule(horizon: float, resample_every: float,
                         record_times) -> list[tuple[float, bool, bool]]:
    cps = []
    k = 1
    while True:
        t = k * resample_every
        if t >= horizon * (1.0 - 1e-12):
            break
        cps.append(t)
        k += 1
    cps.append(float(horizon))
    recs = sorted({float(t) for t in record_times})
    for t in recs:
        if not 0.0 < t <= horizon:
            raise PreconditionError(
                f"record time {t:g} outside (0, {horizon:g}]")
    cpset = set(cps)
    times = sorted(cpset | set(recs))
    return [(t, t in cpset, t in recs) for t in times]


def _eta_partial_sums(law, seed, experiment, m, d, block):
    cols = [np.zeros(m)]
    for c in range(d - 1):
        cols.append(_inc.zeta_batch(law, seed, experiment, 0, m,
                                    comp=block * (d - 1) + c))
    return np.cumsum(np.stack(cols, axis=1), axis=1)


def _log_majorant(x: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Row-wise log of the averaged shifted gap product; x (n, d), eta (m, d)."""
    d = x.shape[1]
    acc = np.zeros((x.shape[0], eta.shape[0]))
    for i in range(d - 1):
        for j in range(i + 1, d):
            gap = (x[:, j] - x[:, i])[:, None] + (eta[:, j] - eta[:, i])[None, :]
            acc += np.log(gap)
    mx = acc.max(axis=1)
    return mx + np.log(np.exp(acc - mx[:, None]).mean(axis=1))


def sample_ordered_smc(d: int, start, horizon: float, law: _inc.IncrementLaw,
                       n_particles: int, resample_every: float, seed: int,
                       experiment: int = _EXP_SMC, record_times=(),
                       weight_mode: str = "gap-product",
                       majorant_draws: int = 32,
                       allow_perturb: bool = True,
                       threads: int = 1) -> WeightedEnsembleSet:
    """Checkpointed particle population targeting the tilted ordered law.

    Between checkpoints every particle runs as a free walk on its own
    index-keyed stream; at each checkpoint crossers are killed and the
    survivors' log-weights pick up the tilt-function ratio since the
    previous checkpoint.  Systematic resampling (one uniform per event,
    from a dedicated lane) fires when the effective sample size drops
    below half the population, except at the horizon, where the weighted
    set itself is the result.

    `weight_mode` selects the tilt: "gap-product" is the standard proxy
    for the conditioning, "majorant" replaces it with the one-sided
    majorant estimated from `majorant_draws` shared offset rows, giving
    the bracket run from the other side.  `record_times` adds position
    snapshots whose rows are remapped through every later resampling, so
    they stay aligned with the final particles' ancestry.
    """
    n = int(n_particles)
    if n < 2:
        raise PreconditionError("a population needs at least 2 particles")
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    if not 0 < resample_every <= horizon:
        raise PreconditionError("resample_every must lie in (0, horizon]")
    if weight_mode not in ("gap-product", "majorant"):
        raise PreconditionError(f"unknown weight_mode {weight_mode!r}")
    if weight_mode == "majorant" and majorant_draws < 2:
        raise PreconditionError("majorant mode needs at least 2 offset rows")
    x0 = _prepare_start(start, d, horizon, allow_perturb)
    bounds = _checkpoint_schedule(horizon, resample_every, record_times)

    def tilt(rows: np.ndarray, block: int) -> np.ndarray:
        if weight_mode == "gap-product" or d == 1:
            return signed_log_gap_product(rows)[1]
        eta = _eta_partial_sums(law, seed, experiment, majorant_draws, d,
                                block)
        return _log_majorant(rows, eta)

    pos = np.tile(x0, (n, 1))
    alive = np.ones(n, dtype=bool)
    lw = np.full(n, -math.log(n))
    ref = np.full(n, float(tilt(x0[None, :], 0)[0]))
    log_norm = 0.0
    resampled: list[float] = []
    ess_hist: list[tuple[float, float]] = []
    snaps: list[list] = []
    t_prev = 0.0
    for seg_idx, (t_b, is_cp, is_rec) in enumerate(bounds):
        dt = t_b - t_prev
        idx = np.nonzero(alive)[0]
        if idx.size:
            if threads <= 1 or idx.size < 4096:
                st = backend.walk_stats(law, seed, experiment, idx, pos[idx],
                                        dt, segment=seg_idx,
                                        stop_on_exit=True)
                surv, fin = st.survived, st.final_pos
            else:
                parts = map_chunks(_smc_prop_chunk,
                                   (law, seed, experiment, idx, pos[idx],
                                    seg_idx, dt), idx.size, threads)
                surv = np.concatenate([p[0] for p in parts])
                fin = np.concatenate([p[1] for p in parts])
            pos[idx] = fin
            alive[idx[surv == 0]] = False
            lw[~alive] = -np.inf
        if is_cp:
            la = np.nonzero(alive)[0]
            if la.size == 0:
                raise ExtinctionError(
                    f"every particle exited by the checkpoint at t = "
                    f"{t_b:g}; shorten resample_every or raise n_particles")
            logphi = tilt(pos[la], seg_idx + 1)
            lw[la] += logphi - ref[la]
            ref[la] = logphi
            mx = lw[la].max()
            z = math.log(np.exp(lw[la] - mx).sum()) + mx
            lw[la] -= z
            log_norm += z
            w = np.exp(lw[la])
            ess = 1.0 / float((w * w).sum())
            ess_hist.append((t_b, ess))
        if is_rec:
            snaps.append([t_b, pos.copy()])
        if is_cp and t_b < horizon and ess < 0.5 * n:
            wf = np.exp(lw)
            wf[~alive] = 0.0
            cum = np.cumsum(wf)
            cum /= cum[-1]
            u = float(RngStream(seed, experiment, 0,
                                pack_lane(streams.ROLE_RESAMPLE, seg_idx,
                                          0)).take(1)[0])
            pts = (u + np.arange(n)) / n
            anc = np.minimum(np.searchsorted(cum, pts, side="left"), n - 1)
            pos = pos[anc]
            alive = alive[anc]
            ref = ref[anc]
            lw = np.full(n, -math.log(n))
            for s in snaps:
                s[1] = s[1][anc]
            resampled.append(t_b)
        t_prev = t_b

    w = np.exp(lw)
    w[~alive] = 0.0
    w /= w.sum()
    ess = 1.0 / float((w * w).sum())
    return WeightedEnsembleSet(
        d=d, method="smc", horizon=float(horizon), start=x0, final_pos=pos,
        survived=alive.astype(np.uint8), weights=w, ess=ess,
        resample_times=tuple(resampled), ess_history=tuple(ess_hist),
        norm_constant=math.exp(log_norm),
        snapshots=tuple((t, p) for t, p in snaps), weight_mode=weight_mode)


# --- matrix-model marginals -------------------------------------------------

def _matrix_draws(seed, experiment, reps, count, phase):
    lane = pack_lane(streams.ROLE_MATRIX, phase, 0)
    k0, k1 = streams.derive_key(seed, experiment,
                                np.asarray(reps, dtype=np.uint64),
                                np.uint64(lane))
    return _inc.draws_span(_GAUSS, k0, k1, 0, count)


def _herm_step(H, zz, dt, iu, ju, d):
    # Entry layout per step: d diagonal draws, then (re, im) pairs down
    # the upper triangle in row-major order.
    sd = math.sqrt(dt)
    didx = np.arange(d)
    H[..., didx, didx] += sd * zz[..., :d]
    if iu.size:
        re = zz[..., d::2]
        im = zz[..., d + 1::2]
        c = (sd / _SQRT2) * (re + 1j * im)
        H[..., iu, ju] += c
        H[..., ju, iu] += np.conj(c)


def _eigen_paths(z, d, start, dts, iu, ju):
    rows = z.shape[0]
    H = np.zeros((rows, d, d), dtype=np.complex128)
    didx = np.arange(d)
    H[:, didx, didx] = start
    out = np.empty((rows, dts.size, d))
    for s in range(dts.size):
        _herm_step(H, z[:, s, :], dts[s], iu, ju, d)
        out[:, s, :] = np.linalg.eigvalsh(H)
    return out


def _eigen_paths_rowwise(z, d, start, dts, iu, ju, seed, experiment, reps):
    out = np.empty((z.shape[0], dts.size, d))
    for r in range(z.shape[0]):
        try:
            out[r] = _eigen_paths(z[r:r + 1], d, start, dts, iu, ju)[0]
        except np.linalg.LinAlgError:
            fresh = _matrix_draws(seed, experiment, reps[r:r + 1], z[0].size,
                                  phase=1).reshape(1, dts.size, -1)
            try:
                out[r] = _eigen_paths(fresh, d, start, dts, iu, ju)[0]
            except np.linalg.LinAlgError:
                raise OwlError(
                    f"eigenvalue solve failed twice for replica "
                    f"{int(reps[r])}") from None
    return out


def nibm_eigen_array(d: int, start, times, n: int, seed: int,
                     experiment: int = _EXP_NIBM,
                     offset: int = 0) -> np.ndarray:
    """Ordered level marginals as one (n, len(times), d) array.

    The matrix accumulates independent Gaussian increments per grid step
    (real diagonal at variance dt, complex off-diagonal at dt split
    evenly between parts), so a replica's levels are exact in
    distribution at every grid time jointly.  A failed eigensolve gets
    one retry from a reserve draw stream before giving up.
    """
    start = np.asarray(start, dtype=np.float64)
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if start.shape != (d,) or not np.all(np.isfinite(start)):
        raise PreconditionError("start must be d finite coordinates")
    if np.any(np.diff(start) < 0):
        raise PreconditionError("start must be nondecreasing")
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0) \
            or times[0] < 0:
        raise PreconditionError(
            "times must be increasing and nonnegative")
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if not 1 <= d <= backend.MAX_WALKERS:
        raise PreconditionError(
            f"walker count {d} outside 1..{backend.MAX_WALKERS}")
    per = d * d
    total = times.size * per
    dts = np.diff(times, prepend=0.0)
    iu, ju = np.triu_indices(d, 1)
    out = np.empty((n, times.size, d))
    slab = max(1, int(8_000_000 // total))
    for lo in range(0, n, slab):
        hi = min(n, lo + slab)
        reps = np.arange(offset + lo, offset + hi, dtype=np.int64)
        z = _matrix_draws(seed, experiment, reps, total, phase=0) \
            .reshape(hi - lo, times.size, per)
        try:
            out[lo:hi] = _eigen_paths(z, d, start, dts, iu, ju)
        except np.linalg.LinAlgError:
            out[lo:hi] = _eigen_paths_rowwise(z, d, start, dts, iu, ju,
                                              seed, experiment, reps)
    return out


def nibm_matrix_marginals(d: int, start, times, n: int, seed: int,
                          experiment: int = _EXP_NIBM,
                          offset: int = 0) -> list[EigenPath]:
    """Per-replica EigenPath view of nibm_eigen_array.

    A level collision at positive time has probability zero, so one in
    the output indicates a numerics bug and raises rather than returning.
    """
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    arr = nibm_eigen_array(d, start, times, n, seed, experiment,
                           offset=offset)
    if d > 1:
        late = arr[:, times > 0, :]
        if late.size and np.diff(late, axis=2).min() <= 0:
            raise OwlError(
                "level collision at positive time; the eigensolver or the "
                "increment accumulation is broken")
    return [EigenPath(d=d, times=times.copy(), values=arr[r].copy())
            for r in range(n)]


# --- coupled eigenvalue SDE -------------------------------------------------

def _dyson_grid(horizon: float, step: float) -> int:
    if not step > 0 or not horizon > 0:
        raise PreconditionError("horizon and step must be positive")
    nsteps = int(round(horizon / step))
    if nsteps < 1 or abs(nsteps * step - horizon) > 1e-9 * max(1.0, horizon):
        raise PreconditionError(
            f"horizon {horizon:g} is not a whole number of steps {step:g}")
    return nsteps


def _require_domination(y0: np.ndarray, z0: np.ndarray):
    d = y0.size
    for i in range(d - 1):
        for j in range(i + 1, d):
            dy = y0[j] - y0[i]
            dz = z0[j] - z0[i]
            if dy < dz:
                raise PreconditionError(
                    f"spacing domination fails at pair ({i}, {j}): "
                    f"{dy:g} < {dz:g}")


def _refined_steps(y: np.ndarray, z: np.ndarray, step: float) -> tuple:
    # A grid step refines when either system enters it below the spacing
    # guard; recomputing the trigger from the (steps+1, d) outputs records
    # exactly the top-level halving decisions.
    if y.shape[1] < 2:
        return ()
    guard = 10.0 * math.sqrt(step)
    gaps = np.minimum(np.diff(y, axis=1).min(axis=1),
                      np.diff(z, axis=1).min(axis=1))
    return tuple(int(k) for k in np.nonzero(gaps[:-1] < guard)[0])


def dyson_coupled_batch(d: int, y0, z0, horizon: float, step: float, n: int,
                        seed: int, experiment: int = _EXP_COUPLING,
                        offset: int = 0):
    """Shared-noise coupled level paths for replicas offset..offset+n-1.

    Returns (times, y_paths, z_paths) with paths shaped (n, steps+1, d).
    Both systems integrate the repelling-level SDE with identical
    Gaussian increments, which is the whole point: differences between
    them isolate the start configurations.
    """
    y0 = as_weyl(y0)
    z0 = as_weyl(z0)
    if y0.size != d or z0.size != d:
        raise PreconditionError("start vectors must have d coordinates")
    _require_domination(y0, z0)
    nsteps = _dyson_grid(horizon, step)
    if n < 1:
        raise PreconditionError("n must be at least 1")
    reps = np.arange(offset, offset + n, dtype=np.int64)
    ys, zs = backend.dyson_pair(seed, experiment, reps, y0, z0, step, nsteps)
    times = np.arange(nsteps + 1) * step
    return times, ys, zs


def dyson_sde_coupled(d: int, y0, z0, horizon: float, step: float, seed: int,
                      experiment: int = _EXP_COUPLING,
                      replica: int = 0) -> tuple[EigenPath, EigenPath]:
    """One coupled pair; see dyson_coupled_batch for the construction.

    The shared `meta` tuple lists grid steps whose entry spacing sat
    below the refinement guard, the steps where halving (and possibly
    drift clamping) engaged.
    """
    times, ys, zs = dyson_coupled_batch(d, y0, z0, horizon, step, 1, seed,
                                        experiment, offset=replica)
    meta = _refined_steps(ys[0], zs[0], step)
    return (EigenPath(d=d, times=times, values=ys[0], meta=meta),
            EigenPath(d=d, times=times, values=zs[0], meta=meta))


# --- start sensitivity of the Brownian ensemble -----------------------------

_F_SPECS = {
    "top": lambda e: e[:, -1],
    "bottom": lambda e: e[:, 0],
    "gap-sum": lambda e: e[:, -1] - e[:, 0],
}


def perturbed_start(d: int, theta: float, seed: int,
                    experiment: int = _EXP_SENSITIVITY) -> np.ndarray:
    """The ordered start in [-theta, theta] the sensitivity probe uses.

    One fixed unit draw, sorted, scales linearly with theta, so halving
    theta halves every coordinate of the same configuration instead of
    drawing a new one; that is what makes shrink-rate checks meaningful.
    """
    if theta < 0:
        raise PreconditionError("theta must be nonnegative")
    u = RngStream(seed, experiment, 0,
                  pack_lane(streams.ROLE_PERTURB, 0, 0)).take(d)
    return theta * np.sort(2.0 * u - 1.0)


def _sensitivity_chunk(args, lo, hi):
    d, y, horizon, f_name, seed, experiment = args
    reps = np.arange(lo, hi, dtype=np.int64)
    z = _matrix_draws(seed, experiment, reps, d * d, phase=0)
    iu, ju = np.triu_indices(d, 1)
    H = np.zeros((reps.size, d, d), dtype=np.complex128)
    _herm_step(H, z, horizon, iu, ju, d)
    f = _F_SPECS[f_name]
    base = f(np.linalg.eigvalsh(H))
    shifted = f(np.linalg.eigvalsh(H + np.diag(y)))
    return Accumulator().push(shifted - base)


def brownian_start_sensitivity(d: int, theta: float, horizon: float,
                               f_spec: str, n: int, seed: int,
                               experiment: int = _EXP_SENSITIVITY,
                               threads: int = 1) -> MCEstimate:
    """|E f(levels from the perturbed start) - E f(levels from zero)|.

    Paired design: both ensembles ride the same Hermitian increments, so
    the difference has the start configurations as its only source and
    its standard error reflects the coupling, not two independent runs.
    f_spec picks the functional of the final-time levels.
    """
    if not horizon > 0:
        raise PreconditionError("horizon must be positive")
    if n < 2:
        raise PreconditionError("n must be at least 2")
    if f_spec not in _F_SPECS:
        raise PreconditionError(
            f"unknown f_spec {f_spec!r}; choose from "
            f"{sorted(_F_SPECS)}")
    y = perturbed_start(d, theta, seed, experiment)
    acc = Accumulator()
    for part in map_chunks(_sensitivity_chunk,
                           (d, y, horizon, f_spec, seed, experiment),
                           n, threads):
        acc.merge(part)
    fp = seed_fingerprint(seed, experiment, "start-sensitivity",
                          {"d": d, "theta": theta, "horizon": horizon,
                           "f": f_spec, "n": n})
    est = MCEstimate.from_accumulator(acc, fp)
    return MCEstimate(abs(est.mean), est.se, est.n, est.seed_fingerprint)
