"""Byte-stable result files: CSVs, JSON sidecars, and the run log.

Writers emit LF-terminated ASCII with repr round-trip floats and no
timestamps, so a configuration rerun on any thread count reproduces
every output byte.  Each CSV gets a JSON sidecar at <csv>.json holding
the full parameter set and the seed fingerprint of the producing run.

Schemas, one row per line after a mandatory header:

    ensemble  CSV  replica,weight,top_final,bottom_final,tau_survived
    levels    CSV  replica,time,rank,value        (rank 1 = lowest)
    edge      CSV  replica,line,grid_time,value   (line 1 = top)
    statistic CSV  replica,value,weight
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import PreconditionError

STATISTIC_HEADER = ("replica", "value", "weight")
EDGE_HEADER = ("replica", "line", "grid_time", "value")
LEVELS_HEADER = ("replica", "time", "rank", "value")
ENSEMBLE_HEADER = ("replica", "weight", "top_final", "bottom_final",
                   "tau_survived")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if "," in s or "\n" in s:
        raise PreconditionError(f"cell value {s!r} would break the schema")
    return s


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def write_json(path, obj: dict) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def write_sidecar(csv_path, params: dict) -> None:
    write_json(str(csv_path) + ".json", params)


def append_run_log(out_dir, record: dict) -> None:
    """One JSON line per estimate: op, params, mean, se, n, fingerprint."""
    path = os.path.join(out_dir, "run-log.jsonl")
    with open(path, "a", newline="\n") as f:
        f.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")


# --- typed writers ----------------------------------------------------------

def statistic_csv(path, values, weights=None, offset: int = 0) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise PreconditionError("statistic values must be a nonempty vector")
    if weights is None:
        weights = np.ones(values.size)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != values.shape:
        raise PreconditionError("one weight per value")
    write_csv(path, STATISTIC_HEADER,
              ((offset + i, values[i], weights[i])
               for i in range(values.size)))


def ensemble_csv(path, ens) -> None:
    """Terminal summary of a weighted replica set, one row per particle."""
    rows = ((i, ens.weights[i], ens.final_pos[i, -1], ens.final_pos[i, 0],
             ens.survived[i]) for i in range(ens.n))
    write_csv(path, ENSEMBLE_HEADER, rows)


def levels_csv(path, paths, offset: int = 0) -> None:
    """Ordered level paths; rank counts from the lowest level up.

    offset shifts the replica column so sharded runs pool cleanly.
    """
    def rows():
        for r, p in enumerate(paths, start=offset):
            for ti, t in enumerate(p.times):
                for j in range(p.d):
                    yield r, float(t), j + 1, p.values[ti, j]
    write_csv(path, LEVELS_HEADER, rows())


def edge_csv(path, ensembles, offset: int = 0) -> None:
    """Edge-window lines; line numbering starts at the top."""
    def rows():
        for r, e in enumerate(ensembles, start=offset):
            for li in range(e.k):
                for ti, t in enumerate(e.time_grid):
                    yield r, li + 1, float(t), e.lines[li, ti]
    write_csv(path, EDGE_HEADER, rows())


def read_statistic_csv(path):
    """(values, weights) from a statistic CSV, schema-checked."""
    with open(path) as f:
        header = f.readline().strip()
        want = ",".join(STATISTIC_HEADER)
        if header != want:
            raise PreconditionError(
                f"{path}: expected columns {want!r}, found {header!r}")
        body = np.loadtxt(f, delimiter=",", dtype=np.float64, ndmin=2)
    if body.size == 0:
        raise PreconditionError(f"{path}: no replica rows")
    if body.shape[1] != 3:
        raise PreconditionError(f"{path}: rows must have 3 columns")
    return body[:, 1], body[:, 2]
