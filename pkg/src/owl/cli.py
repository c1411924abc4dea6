"""Command-line driver: every experiment as one reproducible invocation.

    python3 -m owl --experiment nibm --d 3 --start 0,1,2 \
        --times 0.5,1 --n 2000 --seed 7 --out runs/nibm

Each run writes its artifacts (CSV with a JSON sidecar, or a plain JSON
result) under --out and appends one line to run-log.jsonl there.  A
run is a pure function of its resolved configuration: --threads and
--out never enter any artifact, so re-running with a different worker
count or directory produces byte-identical files.

--config FILE supplies defaults as flat ``key = value`` lines ('#'
starts a comment); explicit command-line flags win over the file.
--seed is mandatory everywhere: there is no wall-clock fallback.

Exit codes: 0 on success, 2 when a precondition is violated (bad
arguments included), 3 when a sampler is infeasible at the requested
size (particle extinction, acceptance budget exhausted).

--suite NAME instead runs a named acceptance bundle, prints one
PASS/FAIL line per criterion, and writes suite-<name>.json; criterion
failures are report entries, not process errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

import numpy as np

from . import artifacts as art
from . import conditioned as cond
from . import harmonic
from . import increments as inc
from . import paths as pathmod
from . import scaling
from . import suites
from .errors import FeasibilityError, OwlError, PreconditionError
from .streams import seed_fingerprint

EXPERIMENTS = (
    "free-sim", "estimate-v", "estimate-h", "superharmonic",
    "ratio-vdelta", "ratio-deltah", "lr-check", "zeta-check", "phi-check",
    "ordered-rejection", "ordered-smc", "nibm", "coupling",
    "edge", "top-stat", "linstat", "compare",
    "repulsion-probe", "moment-probe",
)

_PATH_DUMP_CAP = 200


# -- configuration ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="owl", description="ordered-walk laboratory driver")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--experiment", choices=EXPERIMENTS)
    mode.add_argument("--suite", choices=sorted(suites.BUNDLES))
    ap.add_argument("--config", help="key = value defaults file")
    ap.add_argument("--law", help="increment law name (default gaussian)")
    ap.add_argument("--law-csv", help="x,f density table for custom-grid")
    ap.add_argument("--d", type=int, help="number of walkers")
    ap.add_argument("--T", type=float,
                    help="evaluation time, or reference time for rescaling")
    ap.add_argument("--a", type=float, help="edge-window exponent in (0, 1/2)")
    ap.add_argument("--horizon", type=float, help="sampler time horizon")
    ap.add_argument("--n", type=int, help="replica or particle count")
    ap.add_argument("--seed", type=int, help="root seed (required)")
    ap.add_argument("--out", help="artifact directory (default owl-out)")
    ap.add_argument("--threads", type=int,
                    help="worker count (default $OWL_THREADS or 1)")
    ap.add_argument("--start", help="comma list of start levels")
    ap.add_argument("--z-start", help="second start for the coupling run")
    ap.add_argument("--times", help="comma list of evaluation times")
    ap.add_argument("--record-times", help="comma list of snapshot times")
    ap.add_argument("--eval-times", help="comma list in (0, 1] for linstat")
    ap.add_argument("--coeffs",
                    help="polynomial rows 'c0,c1,...;c0,...' for linstat")
    ap.add_argument("--g", help="centering transform name for linstat")
    ap.add_argument("--centered", action="store_true",
                    help="write centered g-values instead of raw sums")
    ap.add_argument("--delta", type=float,
                    help="spacing threshold or lower time cutoff")
    ap.add_argument("--eps", type=float, help="wide-region exponent margin")
    ap.add_argument("--theta", help="comma list of tilt parameters")
    ap.add_argument("--p", type=float, help="moment or product exponent")
    ap.add_argument("--q", type=float, help="second product exponent")
    ap.add_argument("--resample-every", type=float, help="checkpoint spacing")
    ap.add_argument("--max-attempts", type=int,
                    help="rejection budget (default 1000000)")
    ap.add_argument("--step", type=float, help="SDE step (default 1e-3)")
    ap.add_argument("--k", type=int, help="top lines kept by the edge map")
    ap.add_argument("--L", type=float, help="edge window half-width")
    ap.add_argument("--grid-size", type=int, help="edge window grid points")
    ap.add_argument("--source", choices=("nibm", "smc", "rejection", "gue"),
                    help="sampler feeding top-stat/linstat/edge")
    ap.add_argument("--in-a", help="first statistic CSV for compare")
    ap.add_argument("--in-b", help="second statistic CSV for compare")
    ap.add_argument("--stopped", action="store_true",
                    help="estimate-v: use the stopped-product route")
    ap.add_argument("--no-perturb", action="store_true",
                    help="fail on tied starts instead of nudging them")
    ap.add_argument("--dump-paths", action="store_true",
                    help="also write per-replica event paths (capped)")
    ap.add_argument("--replica-offset", type=int,
                    help="global index of the first replica (default 0)")
    ap.add_argument("--quick", action="store_true",
                    help="suite: 1%% replica budget smoke run")
    ap.add_argument("--scale", type=float,
                    help="suite: replica budget multiplier")
    return ap


_BOOL_KEYS = {"centered", "stopped", "no_perturb", "dump_paths", "quick"}
_INT_KEYS = {"d", "n", "seed", "threads", "max_attempts", "k", "grid_size",
             "replica_offset"}
_FLOAT_KEYS = {"T", "a", "horizon", "delta", "eps", "p", "q",
               "resample_every", "step", "L", "scale"}


def _read_config(path: str) -> dict:
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as ex:
        raise PreconditionError(f"cannot read config file: {ex}") from None
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PreconditionError(
                f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip().replace("-", "_")
        val = val.strip()
        if key in _BOOL_KEYS:
            if val not in ("true", "false", "1", "0"):
                raise PreconditionError(
                    f"{path}:{lineno}: {key} must be true/false")
            out[key] = val in ("true", "1")
        elif key in _INT_KEYS:
            out[key] = int(val)
        elif key in _FLOAT_KEYS:
            out[key] = float(val)
        else:
            out[key] = val
    return out


def _resolve(argv: Sequence[str] | None) -> argparse.Namespace:
    ap = _build_parser()
    ns = ap.parse_args(argv)
    if ns.config:
        file_vals = _read_config(ns.config)
        unknown = set(file_vals) - {a.dest for a in ap._actions}
        if unknown:
            raise PreconditionError(
                f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, val in file_vals.items():
            if getattr(ns, key, None) in (None, False):
                setattr(ns, key, val)
    if ns.threads is None:
        ns.threads = int(os.environ.get("OWL_THREADS", "1"))
    if ns.out is None:
        ns.out = "owl-out"
    if ns.law is None:
        ns.law = "gaussian"
    if ns.replica_offset is None:
        ns.replica_offset = 0
    if not ns.experiment and not ns.suite:
        raise PreconditionError("pass --experiment or --suite")
    if ns.experiment and ns.seed is None:
        raise PreconditionError(
            "--seed is required; runs must be reproducible")
    return ns


# -- small parsing helpers --------------------------------------------------

def _floats(text: str | None, flag: str) -> np.ndarray:
    if not text:
        raise PreconditionError(f"{flag} is required for this experiment")
    try:
        vals = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise PreconditionError(f"{flag}: cannot parse {text!r}") from None
    if not vals:
        raise PreconditionError(f"{flag} is empty")
    return np.asarray(vals, dtype=np.float64)


def _coeff_rows(text: str | None) -> list[list[float]]:
    if not text:
        raise PreconditionError("--coeffs is required for this experiment")
    rows = []
    for row in str(text).split(";"):
        rows.append([float(tok) for tok in row.split(",") if tok.strip()])
    return rows


def _need(ns, *names):
    for name in names:
        if getattr(ns, name) is None:
            flag = "--" + name.replace("_", "-")
            raise PreconditionError(f"{flag} is required for this experiment")


def _no_shard(ns) -> None:
    if ns.replica_offset:
        raise PreconditionError(
            "interacting particle runs do not shard; --replica-offset "
            "only applies to independent-replica experiments")


def _law_of(ns) -> inc.IncrementLaw:
    return inc.make_law(ns.law, grid_csv=ns.law_csv)


def _start_of(ns) -> np.ndarray:
    if ns.start is not None:
        x = _floats(ns.start, "--start")
        if ns.d is not None and x.size != ns.d:
            raise PreconditionError(
                f"--start has {x.size} levels but --d is {ns.d}")
        return x
    _need(ns, "d")
    return np.arange(ns.d, dtype=np.float64)


def _params_of(ns) -> dict:
    # Everything that determines artifact bytes.  --threads and --out
    # are deliberately absent so worker count never leaks into output.
    skip = {"threads", "out", "config", "suite", "quick", "scale"}
    out = {}
    for key, val in sorted(vars(ns).items()):
        if key in skip or val in (None, False):
            continue
        out[key] = val
    return out


def _emit(ns, op: str, payload: dict, files: list[str]) -> None:
    record = {"op": op, "params": _params_of(ns), **payload,
              "files": sorted(files)}
    art.append_run_log(ns.out, record)
    mean, se = payload.get("mean"), payload.get("se")
    if mean is not None and se is not None:
        print(f"{op}: mean={mean:.6g} se={se:.6g}")
    else:
        print(f"{op}: wrote {', '.join(sorted(files)) or 'run-log only'}")


def _est_payload(est) -> dict:
    return {"mean": est.mean, "se": est.se, "n": est.n,
            "seed_fingerprint": est.seed_fingerprint}


# -- experiment bodies ------------------------------------------------------

def _run_free_sim(ns) -> None:
    _need(ns, "d", "horizon", "n")
    law, start = _law_of(ns), _start_of(ns)
    from .backend import walk_stats
    stats = walk_stats(law, ns.seed, 0x11, np.arange(ns.n) + ns.replica_offset,
                       start, ns.horizon)
    rows = []
    for i in range(ns.n):
        rep = i + ns.replica_offset
        for j in range(start.size):
            rows.append((rep, ns.horizon, j + 1, stats.final_pos[i, j]))
    path = os.path.join(ns.out, "free-levels.csv")
    art.write_csv(path, art.LEVELS_HEADER, rows)
    art.write_sidecar(path, _params_of(ns))
    files = [os.path.basename(path)]
    if ns.dump_paths:
        files.append(_dump_free_paths(ns, law, start))
    top = stats.final_pos[:, -1]
    payload = {"mean": float(top.mean()),
               "se": float(top.std(ddof=1) / np.sqrt(ns.n)) if ns.n > 1 else 0.0,
               "n": ns.n,
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x11, "free-sim",
                   {"d": start.size, "horizon": ns.horizon})}
    _emit(ns, "free-sim", payload, files)


def _dump_free_paths(ns, law, start) -> str:
    n_dump = min(ns.n, _PATH_DUMP_CAP)
    ensembles = pathmod.materialize_free(
        law, ns.seed, 0x11, np.arange(n_dump) + ns.replica_offset,
        start, ns.horizon)
    rows = []
    for i, ens in enumerate(ensembles):
        rep = i + ns.replica_offset
        for j in range(ens.d):
            rows.append((rep, j + 1, 0.0, ens.start[j]))
            for t, v in zip(ens.times[j], ens.values[j]):
                rows.append((rep, j + 1, t, v))
    path = os.path.join(ns.out, "free-paths.csv")
    art.write_csv(path, ("replica", "walker", "time", "value"), rows)
    art.write_sidecar(path, _params_of(ns))
    return os.path.basename(path)


def _run_estimate_v(ns) -> None:
    _need(ns, "T", "n")
    law, x = _law_of(ns), _start_of(ns)
    if ns.stopped:
        est = harmonic.estimate_V_stopped(x, ns.T, law, ns.n, ns.seed,
                                          threads=ns.threads)
    else:
        est = harmonic.estimate_V_survival(x, ns.T, law, ns.n, ns.seed,
                                           threads=ns.threads)
    _write_estimate(ns, "estimate-v", est,
                    extra={"vandermonde": harmonic.vandermonde(x).to_float()})


def _run_estimate_h(ns) -> None:
    _need(ns, "n")
    law, x = _law_of(ns), _start_of(ns)
    est = harmonic.estimate_h(x, law, ns.n, ns.seed, threads=ns.threads)
    _write_estimate(ns, "estimate-h", est)


def _run_superharmonic(ns) -> None:
    _need(ns, "T", "n")
    law, x = _law_of(ns), _start_of(ns)
    est = harmonic.superharmonic_deficit(x, ns.T, law, ns.n, ns.seed,
                                         threads=ns.threads)
    _write_estimate(ns, "superharmonic", est)


def _run_ratio_vdelta(ns) -> None:
    _need(ns, "T", "n")
    law, x = _law_of(ns), _start_of(ns)
    eps = 0.05 if ns.eps is None else ns.eps
    est = harmonic.ratio_V_over_delta(x, ns.T, eps, law, ns.n, ns.seed,
                                      threads=ns.threads)
    _write_estimate(ns, "ratio-vdelta", est)


def _run_ratio_deltah(ns) -> None:
    _need(ns, "T", "n")
    law, x = _law_of(ns), _start_of(ns)
    eps = 0.05 if ns.eps is None else ns.eps
    est = harmonic.ratio_delta_over_h(x, ns.T, eps, law, ns.n, ns.seed,
                                      threads=ns.threads)
    _write_estimate(ns, "ratio-deltah", est)


def _write_estimate(ns, op: str, est, extra: dict | None = None) -> None:
    payload = _est_payload(est)
    if extra:
        payload.update(extra)
    path = os.path.join(ns.out, f"{op}.json")
    art.write_json(path, {"op": op, "params": _params_of(ns), **payload})
    _emit(ns, op, payload, [os.path.basename(path)])


def _run_lr_check(ns) -> None:
    law = _law_of(ns)
    thetas = (_floats(ns.theta, "--theta") if ns.theta is not None
              else np.array([0.0, 0.5, 1.0, 2.0]))
    hi = 12.0 if ns.T is None else ns.T
    size = 1400 if ns.grid_size is None else ns.grid_size
    grid = np.linspace(0.0, hi, size)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = inc.conditional_tail_lr_check(law, thetas, grid)
    holds = all(side["holds"] for entry in report
                for side in (entry["upper"], entry["lower"])
                if not side["skipped"])
    path = os.path.join(ns.out, "lr-check.json")
    art.write_json(path, {"op": "lr-check", "params": _params_of(ns),
                          "holds_all": holds, "entries": report})
    _emit(ns, "lr-check", {"holds_all": holds}, [os.path.basename(path)])
    print(f"lr-check: holds_all={holds}")


def _run_zeta_check(ns) -> None:
    _need(ns, "n")
    law = _law_of(ns)
    draws = inc.zeta_batch(law, ns.seed, 0x12, ns.replica_offset,
                           ns.replica_offset + ns.n)
    grid = np.linspace(1.0, float(draws.max()) * 1.25 + 4.0, 4096)
    dens = inc.zeta_density(law, grid)
    mean_d = float(np.trapezoid(dens.grid * dens.values, dens.grid))
    mean_s = float(draws.mean())
    se_s = float(draws.std(ddof=1) / np.sqrt(ns.n))
    payload = {"mean": mean_s, "se": se_s, "n": ns.n,
               "density_mean": mean_d,
               "gap_se_units": abs(mean_s - mean_d) / se_s if se_s else 0.0,
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x12, "zeta-check", {"law": law.family})}
    path = os.path.join(ns.out, "zeta-check.json")
    art.write_json(path, {"op": "zeta-check", "params": _params_of(ns),
                          **payload})
    _emit(ns, "zeta-check", payload, [os.path.basename(path)])


def _run_phi_check(ns) -> None:
    _need(ns, "n")
    law = _law_of(ns)
    if (ns.p is None) != (ns.q is None):
        raise PreconditionError("--p and --q go together for phi-check")
    pairs = ([(int(ns.p), int(ns.q))] if ns.p is not None
             else [(p, q) for p in range(4) for q in range(4)])
    entries = []
    for p, q in pairs:
        est = inc.phi_inequality_check(law, p, q, ns.n, ns.seed,
                                       threads=ns.threads)
        entries.append({"p": p, "q": q, **_est_payload(est),
                        "nonnegative": est.mean >= -3.0 * est.se})
    ok = all(e["nonnegative"] for e in entries)
    path = os.path.join(ns.out, "phi-check.json")
    art.write_json(path, {"op": "phi-check", "params": _params_of(ns),
                          "all_nonnegative": ok, "entries": entries})
    _emit(ns, "phi-check", {"all_nonnegative": ok}, [os.path.basename(path)])
    print(f"phi-check: all_nonnegative={ok}")


def _run_ordered_rejection(ns) -> None:
    _need(ns, "horizon", "n")
    _no_shard(ns)
    law, start = _law_of(ns), _start_of(ns)
    budget = 10**6 if ns.max_attempts is None else ns.max_attempts
    ens = cond.sample_ordered_rejection(
        start.size, start, ns.horizon, law, ns.n, budget, ns.seed,
        allow_perturb=not ns.no_perturb, threads=ns.threads)
    _write_ensemble(ns, "ordered-rejection", ens)


def _run_ordered_smc(ns) -> None:
    _need(ns, "horizon", "n", "resample_every")
    _no_shard(ns)
    law, start = _law_of(ns), _start_of(ns)
    record = (tuple(_floats(ns.record_times, "--record-times"))
              if ns.record_times else ())
    ens = cond.sample_ordered_smc(
        start.size, start, ns.horizon, law, ns.n, ns.resample_every,
        ns.seed, record_times=record, allow_perturb=not ns.no_perturb,
        threads=ns.threads)
    _write_ensemble(ns, "ordered-smc", ens)


def _write_ensemble(ns, op: str, ens) -> None:
    path = os.path.join(ns.out, f"{op}.csv")
    art.ensemble_csv(path, ens)
    art.write_sidecar(path, _params_of(ns))
    top = ens.final_pos[:, -1]
    mean, se = scaling.weighted_mean_se(top, ens.weights)
    payload = {"mean": mean, "se": se, "n": int(ens.final_pos.shape[0]),
               "ess": ens.ess, "norm_constant": ens.norm_constant,
               "acceptance_rate": ens.acceptance_rate,
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0, op, {"d": ens.d, "horizon": ns.horizon})}
    _emit(ns, op, payload, [os.path.basename(path)])


def _run_nibm(ns) -> None:
    _need(ns, "n")
    start = _start_of(ns)
    times = _floats(ns.times, "--times")
    paths = cond.nibm_matrix_marginals(start.size, start, times, ns.n,
                                       ns.seed, offset=ns.replica_offset)
    path = os.path.join(ns.out, "nibm-levels.csv")
    art.levels_csv(path, paths, offset=ns.replica_offset)
    art.write_sidecar(path, _params_of(ns))
    top = np.array([p.values[-1, -1] for p in paths])
    payload = {"mean": float(top.mean()),
               "se": float(top.std(ddof=1) / np.sqrt(len(paths)))
               if len(paths) > 1 else 0.0,
               "n": len(paths),
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x23, "nibm", {"d": start.size})}
    _emit(ns, "nibm", payload, [os.path.basename(path)])


def _run_coupling(ns) -> None:
    _need(ns, "horizon", "n")
    y0 = _start_of(ns)
    z0 = _floats(ns.z_start, "--z-start")
    if z0.size != y0.size:
        raise PreconditionError(
            f"--z-start has {z0.size} levels but --start has {y0.size}")
    step = 1e-3 if ns.step is None else ns.step
    times, ys, zs = cond.dyson_coupled_batch(y0.size, y0, z0, ns.horizon,
                                             step, ns.n, ns.seed)
    margins = ys - zs if np.all(y0 >= z0) else zs - ys
    worst = float(margins.min())
    violations = int(np.count_nonzero(margins.min(axis=(1, 2)) < -1e-6))
    payload = {"min_margin": worst, "violating_replicas": violations,
               "n": ns.n, "steps": len(times),
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x24, "coupling", {"d": y0.size, "step": step})}
    path = os.path.join(ns.out, "coupling.json")
    art.write_json(path, {"op": "coupling", "params": _params_of(ns),
                          **payload})
    _emit(ns, "coupling", payload, [os.path.basename(path)])
    print(f"coupling: min_margin={worst:.3e} violations={violations}")


def _edge_geometry(ns):
    _need(ns, "T", "a")
    L = 1.0 if ns.L is None else ns.L
    size = 5 if ns.grid_size is None else ns.grid_size
    return scaling.edge_window(ns.T, ns.a, L, size), L, size


def _run_edge(ns) -> None:
    _need(ns, "n", "d")
    (grid, abs_times), L, size = _edge_geometry(ns)
    start = _start_of(ns)
    k = start.size if ns.k is None else ns.k
    source = ns.source or "nibm"
    if source == "nibm":
        levels = cond.nibm_eigen_array(start.size, start, abs_times, ns.n,
                                       ns.seed, offset=ns.replica_offset)
    elif source == "smc":
        _need(ns, "resample_every")
        _no_shard(ns)
        ens = cond.sample_ordered_smc(
            start.size, start, float(abs_times[-1]), _law_of(ns), ns.n,
            ns.resample_every, ns.seed,
            record_times=tuple(float(t) for t in abs_times[:-1]),
            allow_perturb=not ns.no_perturb, threads=ns.threads)
        # The lines format has no weight column, so flatten the weighted
        # set by one systematic draw instead of writing dead replicas.
        anc = cond.equal_weight_indices(ens, ns.seed)
        levels = scaling.ensemble_levels(ens, abs_times)[anc]
    else:
        raise PreconditionError(
            "edge runs need --source nibm or smc; rescale other samplers "
            "through top-stat instead")
    lines = scaling.edge_rescale_levels(levels, ns.T, ns.a, k, grid)
    ensembles = [
        scaling.EdgeEnsemble(T=ns.T, a=ns.a, d=start.size, k=k, L=L,
                             time_grid=grid, lines=lines[i])
        for i in range(lines.shape[0])]
    path = os.path.join(ns.out, "edge-lines.csv")
    art.edge_csv(path, ensembles, offset=ns.replica_offset)
    art.write_sidecar(path, _params_of(ns))
    top_mid = lines[:, 0, size // 2]
    payload = {"mean": float(top_mid.mean()),
               "se": float(top_mid.std(ddof=1) / np.sqrt(ns.n))
               if ns.n > 1 else 0.0,
               "n": ns.n,
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x23, "edge", {"T": ns.T, "a": ns.a, "k": k})}
    _emit(ns, "edge", payload, [os.path.basename(path)])


def _sampled_top(ns, start, T: float):
    """(values, weights) for the top particle at time T, by --source."""
    source = ns.source or "nibm"
    if source == "gue":
        vals = scaling.gue_max_eigenvalue_samples(start.size, ns.n, ns.seed)
        return vals * np.sqrt(T), None
    if source == "nibm":
        arr = cond.nibm_eigen_array(start.size, start, np.array([T]), ns.n,
                                    ns.seed, offset=ns.replica_offset)
        return arr[:, -1, -1], None
    law = _law_of(ns)
    _no_shard(ns)
    if source == "smc":
        _need(ns, "resample_every")
        ens = cond.sample_ordered_smc(
            start.size, start, T, law, ns.n, ns.resample_every, ns.seed,
            allow_perturb=not ns.no_perturb, threads=ns.threads)
        return ens.final_pos[:, -1], ens.weights
    budget = 10**6 if ns.max_attempts is None else ns.max_attempts
    ens = cond.sample_ordered_rejection(
        start.size, start, T, law, ns.n, budget, ns.seed,
        allow_perturb=not ns.no_perturb, threads=ns.threads)
    return ens.final_pos[:, -1], cond.gap_product_weights(ens)


def _run_top_stat(ns) -> None:
    _need(ns, "T", "a", "n", "d")
    start = _start_of(ns)
    vals, weights = _sampled_top(ns, start, ns.T)
    stat = scaling.top_statistic_array(vals, ns.T, ns.a)
    path = os.path.join(ns.out, "top-stat.csv")
    art.statistic_csv(path, stat, weights, offset=ns.replica_offset)
    art.write_sidecar(path, _params_of(ns))
    mean, se = scaling.weighted_mean_se(stat, weights)
    payload = {"mean": mean, "se": se, "n": int(stat.size),
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x23, "top-stat", {"T": ns.T, "a": ns.a})}
    _emit(ns, "top-stat", payload, [os.path.basename(path)])


def _run_linstat(ns) -> None:
    _need(ns, "T", "a", "n", "d")
    start = _start_of(ns)
    eval_times = _floats(ns.eval_times, "--eval-times")
    spec = scaling.polynomial_spec(eval_times, _coeff_rows(ns.coeffs),
                                   delta=ns.delta)
    abs_times = ns.T * spec.eval_times
    source = ns.source or "nibm"
    weights = None
    if source == "nibm":
        levels = cond.nibm_eigen_array(start.size, start, abs_times, ns.n,
                                       ns.seed, offset=ns.replica_offset)
    elif source == "smc":
        _need(ns, "resample_every")
        _no_shard(ns)
        interior = tuple(float(t) for t in abs_times
                         if t < float(abs_times[-1]))
        ens = cond.sample_ordered_smc(
            start.size, start, float(abs_times[-1]), _law_of(ns), ns.n,
            ns.resample_every, ns.seed, record_times=interior,
            allow_perturb=not ns.no_perturb, threads=ns.threads)
        levels = scaling.ensemble_levels(ens, abs_times)
        weights = ens.weights
    else:
        raise PreconditionError("linstat runs need --source nibm or smc")
    if ns.centered:
        g_name = ns.g or "identity-clipped"
        vals = scaling.centered_statistic_samples(levels, spec, ns.T, ns.a,
                                                  g_name, weights=weights)
    else:
        vals = scaling.linear_statistic_array(levels, spec, ns.T, ns.a)
    path = os.path.join(ns.out, "linstat.csv")
    art.statistic_csv(path, vals, weights, offset=ns.replica_offset)
    art.write_sidecar(path, _params_of(ns))
    mean, se = scaling.weighted_mean_se(vals, weights)
    payload = {"mean": mean, "se": se, "n": int(vals.size),
               "seed_fingerprint": seed_fingerprint(
                   ns.seed, 0x23, "linstat", {"T": ns.T, "a": ns.a})}
    _emit(ns, "linstat", payload, [os.path.basename(path)])


def _run_compare(ns) -> None:
    _need(ns, "in_a", "in_b")
    va, wa = art.read_statistic_csv(ns.in_a)
    vb, wb = art.read_statistic_csv(ns.in_b)
    report = scaling.two_sample_report(va, vb, wa, wb)
    payload = {"ks": report["ks"], "mean": report["mean_gap"],
               "se": report["pooled_se"],
               "n": int(min(va.size, vb.size))}
    path = os.path.join(ns.out, "compare.json")
    art.write_json(path, {"op": "compare", "params": _params_of(ns),
                          **payload})
    _emit(ns, "compare", payload, [os.path.basename(path)])
    print(f"compare: ks={report['ks']:.4f}")


def _run_repulsion_probe(ns) -> None:
    _need(ns, "n", "delta")
    law, start = _law_of(ns), _start_of(ns)
    t_values = _floats(ns.times, "--times")
    ests = pathmod.repulsion_probe(start.size, start, law, t_values,
                                   ns.delta, ns.n, ns.seed,
                                   threads=ns.threads)
    entries = [{"t": float(t), **_est_payload(est)}
               for t, est in zip(t_values, ests)]
    path = os.path.join(ns.out, "repulsion-probe.json")
    art.write_json(path, {"op": "repulsion-probe", "params": _params_of(ns),
                          "entries": entries})
    _emit(ns, "repulsion-probe",
          {"entries": len(entries)}, [os.path.basename(path)])
    for e in entries:
        print(f"  t={e['t']:g}: p={e['mean']:.3e} se={e['se']:.3e}")


def _run_moment_probe(ns) -> None:
    _need(ns, "T", "n")
    law, x = _law_of(ns), _start_of(ns)
    p = 2.0 if ns.p is None else ns.p
    est = harmonic.moment_bound_probe(x, ns.T, p, law, ns.n, ns.seed,
                                      threads=ns.threads)
    _write_estimate(ns, "moment-probe", est)


_DISPATCH = {
    "free-sim": _run_free_sim,
    "estimate-v": _run_estimate_v,
    "estimate-h": _run_estimate_h,
    "superharmonic": _run_superharmonic,
    "ratio-vdelta": _run_ratio_vdelta,
    "ratio-deltah": _run_ratio_deltah,
    "lr-check": _run_lr_check,
    "zeta-check": _run_zeta_check,
    "phi-check": _run_phi_check,
    "ordered-rejection": _run_ordered_rejection,
    "ordered-smc": _run_ordered_smc,
    "nibm": _run_nibm,
    "coupling": _run_coupling,
    "edge": _run_edge,
    "top-stat": _run_top_stat,
    "linstat": _run_linstat,
    "compare": _run_compare,
    "repulsion-probe": _run_repulsion_probe,
    "moment-probe": _run_moment_probe,
}


def _run_suite(ns) -> int:
    scale = 0.01 if ns.quick else (ns.scale if ns.scale is not None else 1.0)
    kwargs = {"threads": ns.threads, "scale": scale}
    if ns.seed is not None:
        kwargs["seed"] = ns.seed
    report = suites.run_bundle(ns.suite, **kwargs)
    for entry in report["entries"]:
        tag = "PASS" if entry["passed"] else "FAIL"
        n_ok = sum(1 for c in entry["checks"] if c.get("ok"))
        print(f"[{tag}] {entry['criterion']} "
              f"({n_ok}/{len(entry['checks'])} checks)")
    path = os.path.join(ns.out, f"suite-{ns.suite}.json")
    art.write_json(path, report)
    print(("all passed" if report["all_passed"] else "failures above")
          + f"; report at {path}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = _resolve(argv)
        os.makedirs(ns.out, exist_ok=True)
        if ns.suite:
            return _run_suite(ns)
        _DISPATCH[ns.experiment](ns)
        return 0
    except PreconditionError as ex:
        print(f"precondition: {ex}", file=sys.stderr)
        return 2
    except FeasibilityError as ex:
        print(f"feasibility: {ex}", file=sys.stderr)
        return 3
    except OwlError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
