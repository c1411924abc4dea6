"""Monte Carlo estimates with exact, schedule-independent pooling.

Replicas are processed in fixed chunks of CHUNK indices.  Chunk boundaries
depend only on the replica count, and chunk results are combined
left-to-right in index order on the coordinator, so the merged estimate is
bit-identical for any worker count.  Two shards pool exactly the same way
offline when their boundary is chunk-aligned.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK = 1024


@dataclass
class Accumulator:
    """Running (count, mean, M2) in the numerically stable pairwise form."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, values: np.ndarray) -> "Accumulator":
        values = np.asarray(values, dtype=np.float64)
        if values.size:
            other = Accumulator(
                int(values.size), float(values.mean()),
                float(((values - values.mean()) ** 2).sum()))
            self.merge(other)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta * delta * self.count * other.count / n
        self.count = n
        return self


@dataclass(frozen=True)
class MCEstimate:
    """A mean, its standard error, the replica count, and a seed tag."""

    mean: float
    se: float
    n: int
    seed_fingerprint: str

    @classmethod
    def from_accumulator(cls, acc: Accumulator, fingerprint: str) -> "MCEstimate":
        se = math.sqrt(acc.m2 / (acc.count - 1) / acc.count) \
            if acc.count > 1 else float("nan")
        return cls(acc.mean, se, acc.count, fingerprint)

    def merge(self, other: "MCEstimate") -> "MCEstimate":
        """Pool two estimates of the same quantity from disjoint replicas."""
        a = Accumulator(self.n, self.mean, self.se ** 2 * self.n * (self.n - 1))
        b = Accumulator(other.n, other.mean,
                        other.se ** 2 * other.n * (other.n - 1))
        a.merge(b)
        tag = self.seed_fingerprint if self.seed_fingerprint == \
            other.seed_fingerprint else f"{self.seed_fingerprint}+{other.seed_fingerprint}"
        return MCEstimate.from_accumulator(a, tag)


def pooled_se(a: MCEstimate, b: MCEstimate) -> float:
    """Standard error of the difference of two independent estimates."""
    return math.hypot(a.se, b.se)


def chunk_ranges(n: int, offset: int = 0):
    """Fixed [lo, hi) chunks aligned to absolute replica indices.

    Alignment is to the global index grid, so a shard starting at a
    CHUNK-multiple offset produces exactly the chunks a longer run would.
    """
    out = []
    lo = offset
    while lo < offset + n:
        hi = min(offset + n, (lo // CHUNK + 1) * CHUNK)
        out.append((lo, hi))
        lo = hi
    return out


def _call(task):
    fn, args, lo, hi = task
    return fn(args, lo, hi)


def map_chunks(fn, args: tuple, n: int, threads: int = 1, offset: int = 0):
    """Run fn(args, lo, hi) over the chunk grid, results in chunk order.

    fn must be a module-level function (it crosses process boundaries when
    threads > 1).  The caller merges results left-to-right; that order is
    what makes output independent of `threads`.
    """
    ranges = chunk_ranges(n, offset)
    tasks = [(fn, args, lo, hi) for lo, hi in ranges]
    if threads <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_call, tasks, chunksize=1))
