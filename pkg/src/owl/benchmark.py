"""Throughput check: the compiled event loop against its vectorized twin.

    python3 -m owl.benchmark [--n N] [--horizon H] [--repeat R]

Both backends run the identical free-walk and coupled-SDE workloads;
the table reports events (or steps) per second and the speed ratio.
Numbers move with machine load, so nothing here asserts anything.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import backend
from . import increments as inc


def _walk_workload(mod, law, n: int, d: int, horizon: float) -> tuple:
    fid, g, f, F = backend.law_wire(law)
    replicas = np.arange(n, dtype=np.int64)
    start = np.ascontiguousarray(
        np.broadcast_to(np.arange(d, dtype=np.float64), (n, d)))
    out = {
        "survived": np.zeros(n, dtype=np.uint8),
        "exit_time": np.zeros(n), "exit_pos": np.zeros((n, d)),
        "final_pos": np.zeros((n, d)), "run_max": np.zeros(n),
        "run_min": np.zeros(n), "nu_time": np.zeros(n),
        "jump_counts": np.zeros((n, d), dtype=np.int64),
    }
    t0 = time.perf_counter()
    mod.walk_terminal(2024, 0x70, replicas, start, 0, horizon,
                      fid, g, f, F, -1.0, 0,
                      out["survived"], out["exit_time"], out["exit_pos"],
                      out["final_pos"], out["run_max"], out["run_min"],
                      out["nu_time"], out["jump_counts"])
    elapsed = time.perf_counter() - t0
    return int(out["jump_counts"].sum()), elapsed, out["final_pos"]


def _dyson_workload(mod, n: int, d: int, nsteps: int) -> tuple:
    replicas = np.arange(n, dtype=np.int64)
    y0 = 1.5 * np.arange(d, dtype=np.float64)
    z0 = np.arange(d, dtype=np.float64)
    out_y = np.zeros((n, nsteps + 1, d))
    out_z = np.zeros((n, nsteps + 1, d))
    t0 = time.perf_counter()
    mod.dyson_pair(2024, 0x71, replicas, y0, z0, 1e-3, nsteps,
                   out_y, out_z)
    elapsed = time.perf_counter() - t0
    return 2 * n * nsteps * d, elapsed, out_y


def _best(fn, repeat: int):
    runs = [fn() for _ in range(repeat)]
    return min(runs, key=lambda r: r[1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="owl.benchmark",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="walk replicas")
    ap.add_argument("--horizon", type=float, default=50.0)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--sde-n", type=int, default=50)
    ap.add_argument("--sde-steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3,
                    help="passes per cell, best kept")
    ns = ap.parse_args(argv)

    mods = backend.backends()
    law = inc.gaussian()
    print(f"backends: {', '.join(mods)} (active: {backend.name})")
    if "compiled" not in mods:
        print("compiled extension missing; timing the fallback only")

    rows = []
    finals = {}
    for bname, mod in mods.items():
        units, secs, final = _best(
            lambda m=mod: _walk_workload(m, law, ns.n, ns.d, ns.horizon),
            ns.repeat)
        rows.append(("free walk", bname, units, secs))
        finals.setdefault("walk", []).append(final)
        units, secs, final = _best(
            lambda m=mod: _dyson_workload(m, ns.sde_n, ns.d, ns.sde_steps),
            ns.repeat)
        rows.append(("coupled SDE", bname, units, secs))
        finals.setdefault("sde", []).append(final)

    print(f"\n{'workload':<12} {'backend':<11} {'units':>10} "
          f"{'seconds':>9} {'rate/s':>12}")
    rates: dict = {}
    for work, bname, units, secs in rows:
        rate = units / secs if secs > 0 else float("inf")
        rates.setdefault(work, {})[bname] = rate
        print(f"{work:<12} {bname:<11} {units:>10} {secs:>9.4f} "
              f"{rate:>12.3e}")
    for work, by in rates.items():
        if len(by) == 2:
            print(f"{work}: compiled / vectorized = "
                  f"{by['compiled'] / by['vectorized']:.1f}x")
    for key, arrays in finals.items():
        if len(arrays) == 2 and not np.allclose(arrays[0], arrays[1],
                                                rtol=1e-9, atol=1e-9):
            print(f"WARNING: {key} outputs disagree across backends")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
