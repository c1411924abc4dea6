"""Backend selection and the array-level simulation entry points.

The compiled extension is preferred when importable; the vectorized numpy
twin is the fallback.  Set OWL_BACKEND=python to force the fallback or
OWL_BACKEND=compiled to fail loudly when the extension is missing.  Both
backends consume identical stream indices, so swapping them never changes
which random numbers a replica sees, only the floating-point path that
turns uniforms into values (last-ulp libm differences at most).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _fallback
from . import increments as _inc
from .errors import FeasibilityError, PreconditionError

try:
    from . import _kernel
except ImportError:          # pragma: no cover - build-environment dependent
    _kernel = None

_choice = os.environ.get("OWL_BACKEND", "")
if _choice == "python":
    _impl = _fallback
elif _choice == "compiled":
    if _kernel is None:
        raise ImportError("OWL_BACKEND=compiled but the extension is missing")
    _impl = _kernel
elif _choice == "":
    _impl = _kernel if _kernel is not None else _fallback
else:
    raise ImportError(f"unknown OWL_BACKEND value {_choice!r}")

name: str = _impl.BACKEND_NAME

MAX_WALKERS = 64


def law_wire(law: _inc.IncrementLaw):
    """(family id, grid, density, cdf) quadruple both backends accept."""
    fid = _fallback._FAMILY_IDS[law.family]
    if law.grid is None:
        empty = np.empty(0)
        return fid, empty, empty, empty
    return (fid, np.ascontiguousarray(law.grid.grid),
            np.ascontiguousarray(law.grid.values),
            np.ascontiguousarray(law.grid.cdf_nodes()))


@dataclass(frozen=True)
class WalkStats:
    """Terminal statistics of one batch of free-walk replicas.

    Arrays are row-aligned with the replica index vector that produced
    them.  exit_time and nu_time use +inf for "not within the horizon";
    exit_pos rows are NaN for survivors.
    """

    survived: np.ndarray
    exit_time: np.ndarray
    exit_pos: np.ndarray
    final_pos: np.ndarray
    run_max: np.ndarray
    run_min: np.ndarray
    nu_time: np.ndarray
    jump_counts: np.ndarray


def walk_stats(law: _inc.IncrementLaw, seed: int, experiment: int,
               replicas, start, horizon: float, segment: int = 0,
               spacing_threshold: float | None = None,
               stop_on_exit: bool = False) -> WalkStats:
    """Simulate free replicas and collect terminal statistics.

    start is one row per replica (or a single row, shared).  Streams are
    keyed by (seed, experiment, replica index, walker, segment), so any
    partition of the replica vector reproduces the same per-replica values.
    """
    replicas = np.ascontiguousarray(replicas, dtype=np.int64)
    start = np.asarray(start, dtype=np.float64)
    if start.ndim == 1:
        start = np.broadcast_to(start, (replicas.size, start.size))
    start = np.ascontiguousarray(start)
    n, d = start.shape
    if n != replicas.size:
        raise PreconditionError("one start row per replica required")
    if not 1 <= d <= MAX_WALKERS:
        raise PreconditionError(f"walker count {d} outside 1..{MAX_WALKERS}")
    if not 0 <= segment < (1 << 32):
        raise PreconditionError(f"segment index {segment} out of range")
    if not horizon >= 0.0:
        raise PreconditionError("horizon must be nonnegative")
    fid, g, f, F = law_wire(law)
    thr = -1.0 if spacing_threshold is None else float(spacing_threshold)
    if spacing_threshold is not None and thr < 0.0:
        raise PreconditionError("spacing threshold must be nonnegative")

    out = WalkStats(
        survived=np.zeros(n, dtype=np.uint8),
        exit_time=np.zeros(n),
        exit_pos=np.zeros((n, d)),
        final_pos=np.zeros((n, d)),
        run_max=np.zeros(n),
        run_min=np.zeros(n),
        nu_time=np.zeros(n),
        jump_counts=np.zeros((n, d), dtype=np.int64),
    )
    _impl.walk_terminal(int(seed), int(experiment), replicas, start,
                        int(segment), float(horizon), fid, g, f, F,
                        thr, int(bool(stop_on_exit)),
                        out.survived, out.exit_time, out.exit_pos,
                        out.final_pos, out.run_max, out.run_min,
                        out.nu_time, out.jump_counts)
    return out


def dyson_pair(seed: int, experiment: int, replicas, y0, z0,
               step: float, nsteps: int):
    """Coupled eigenvalue-SDE pairs on the grid k*step, shared noise.

    Returns (out_y, out_z) of shape (n_replicas, nsteps+1, d).  Translates
    the integrator's numeric failure (collapse or persistent crossing at
    maximal refinement) into a FeasibilityError naming the step.
    """
    replicas = np.ascontiguousarray(replicas, dtype=np.int64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    if y0.shape != z0.shape or y0.ndim != 1:
        raise PreconditionError("start vectors must be equal-length 1-d")
    d = y0.size
    if not 1 <= d <= MAX_WALKERS:
        raise PreconditionError(f"system size {d} outside 1..{MAX_WALKERS}")
    if not step > 0.0:
        raise PreconditionError("step must be positive")
    out_y = np.zeros((replicas.size, nsteps + 1, d))
    out_z = np.zeros((replicas.size, nsteps + 1, d))
    try:
        _impl.dyson_pair(int(seed), int(experiment), replicas, y0, z0,
                         float(step), int(nsteps), out_y, out_z)
    except FloatingPointError as exc:
        raise FeasibilityError(str(exc)) from None
    return out_y, out_z


def uniform_run(seed, experiment, replica, lane, count):
    """Sequential uniforms from the active backend (parity/benchmark hook)."""
    return _impl.uniform_run(int(seed), int(experiment), int(replica),
                             int(lane), int(count))


def law_run(law: _inc.IncrementLaw, seed, experiment, replica, lane, count):
    """Sequential law draws from the active backend (parity hook)."""
    fid, g, f, F = law_wire(law)
    return _impl.law_run(fid, g, f, F, int(seed), int(experiment),
                         int(replica), int(lane), int(count))


def backends():
    """The importable backend modules, keyed by their public names."""
    found = {_fallback.BACKEND_NAME: _fallback}
    if _kernel is not None:
        found[_kernel.BACKEND_NAME] = _kernel
    return found
