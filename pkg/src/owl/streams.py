"""Counter-based random number streams.

Every random draw in the package comes from a Philox4x64-10 block cipher
keyed by (seed, experiment, replica, lane).  A stream is an indexed sequence
of uniforms: the value at index i depends only on the key and i, never on
how many draws were made before.  That random access is what lets the
vectorized backend generate draws for thousands of replicas at once while
the compiled backend walks the same streams one value at a time, and it is
why results cannot depend on worker count or chunk schedule.

Lanes separate the roles draws play (jump times vs increment values vs
auxiliary-variable sampling and so on) so that consuming more draws in one
role never shifts another role's sequence.  Within one (replica, role),
segments give SMC checkpointing and similar schemes a fresh stream per leg.

The generator is implemented here with 32-bit-limb arithmetic on uint64
arrays; the compiled kernel has a scalar C twin.  Both are checked against
numpy's Philox bit generator in the test suite.
"""

from __future__ import annotations

import numpy as np

# Philox4x64 round constants (Random123).
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)

_LO32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_U53 = 2.0 ** -53

# Fourth counter word during key derivation; marks derivation blocks so they
# can never collide with generation blocks (whose keys are derived outputs).
_DERIVE_TAG = np.uint64(0x6F776C2D6B657931)  # "owl-key1"

# Stream roles.  Packed into the lane's high bits.
ROLE_TIMES = 0      # jump arrival inter-times
ROLE_INC = 1        # jump increment values
ROLE_AUX = 2        # auxiliary-variable draws (signed-part pairs, offsets)
ROLE_MATRIX = 3     # matrix-model Gaussian entries
ROLE_RESAMPLE = 4   # resampling decisions
ROLE_SDE = 5        # diffusion integrator noise
ROLE_PERTURB = 6    # start-configuration perturbations


def pack_lane(role: int, segment: int = 0, walker: int = 0) -> int:
    """Pack (role, segment, walker) into one 64-bit lane value."""
    if not 0 <= walker < (1 << 16):
        raise ValueError(f"walker index {walker} out of range")
    if not 0 <= segment < (1 << 32):
        raise ValueError(f"segment index {segment} out of range")
    if not 0 <= role < (1 << 16):
        raise ValueError(f"role {role} out of range")
    return (role << 48) | (segment << 16) | walker


def _mulhi(a, b):
    # High 64 bits of a*b via 32-bit limbs; numpy uint64 wraps additions,
    # but the limb sum reconstructs the true high word without overflow.
    ahi, alo = a >> _SH32, a & _LO32
    bhi, blo = b >> _SH32, b & _LO32
    t0 = alo * blo
    t1 = ahi * blo
    t2 = alo * bhi
    carry = ((t0 >> _SH32) + (t1 & _LO32) + (t2 & _LO32)) >> _SH32
    return ahi * bhi + (t1 >> _SH32) + (t2 >> _SH32) + carry


def philox4(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block.  All arguments broadcast as uint64 arrays.

    Returns the four output words.  Matches numpy.random.Philox bit for bit.
    """
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    c2 = np.asarray(c2, dtype=np.uint64)
    c3 = np.asarray(c3, dtype=np.uint64)
    k0 = np.asarray(k0, dtype=np.uint64)
    k1 = np.asarray(k1, dtype=np.uint64)
    # Additions and low products wrap mod 2^64 by design.
    with np.errstate(over="ignore"):
        for r in range(10):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0 = _mulhi(_M0, c0)
            lo0 = _M0 * c0
            hi1 = _mulhi(_M1, c2)
            lo1 = _M1 * c2
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def derive_key(seed: int, experiment: int, replica, lane):
    """Child key for one stream: a single Philox block over the stream path.

    replica and lane may be arrays; the results broadcast.  Distinct paths
    get independent keys (128-bit child key space).
    """
    if not 0 <= int(seed) < (1 << 64):
        raise ValueError("seed must be an unsigned 64-bit integer")
    if not 0 <= int(experiment) < (1 << 64):
        raise ValueError("experiment id must be an unsigned 64-bit integer")
    w0, w1, _, _ = philox4(
        np.uint64(experiment), replica, lane, _DERIVE_TAG,
        np.uint64(seed), _W0,
    )
    return w0, w1


def _word_span(k0, k1, start: int, count: int):
    """Raw 64-bit words at indices [start, start+count) of each stream.

    k0, k1: scalars or equal-shape arrays of stream keys.  Output shape is
    key_shape + (count,).  Word i lives in block i >> 2, word i & 3.
    """
    if count == 0:
        shape = np.broadcast_shapes(np.shape(k0), np.shape(k1)) + (0,)
        return np.empty(shape, dtype=np.uint64)
    b0 = start >> 2
    b1 = (start + count - 1) >> 2
    nblocks = b1 - b0 + 1
    blocks = np.arange(b0, b1 + 1, dtype=np.uint64)
    k0 = np.asarray(k0, dtype=np.uint64)[..., None]
    k1 = np.asarray(k1, dtype=np.uint64)[..., None]
    zero = np.uint64(0)
    w0, w1, w2, w3 = philox4(blocks, zero, zero, zero, k0, k1)
    words = np.stack([w0, w1, w2, w3], axis=-1).reshape(
        k0.shape[:-1] + (nblocks * 4,))
    off = start - 4 * b0
    return words[..., off:off + count]


def uniform_span(k0, k1, start: int, count: int):
    """Uniforms in [0, 1) at indices [start, start+count), vectorized."""
    return (_word_span(k0, k1, start, count) >> _SH11) * _U53


def uniform_at(k0, k1, idx):
    """Uniforms at arbitrary stream indices.

    idx is any uint64-compatible array; keys broadcast against it.  Costs a
    full block per element, so contiguous reads should prefer uniform_span;
    this exists for rejection samplers whose streams sit at unequal
    positions.
    """
    idx = np.asarray(idx, dtype=np.uint64)
    w0, w1, w2, w3 = philox4(idx >> np.uint64(2), 0, 0, 0, k0, k1)
    sel = (idx & np.uint64(3)).astype(np.int64)
    out = np.where(sel == 0, w0, np.where(sel == 1, w1,
                   np.where(sel == 2, w2, w3)))
    return (out >> _SH11) * _U53


class RngStream:
    """One addressable uniform stream with a movable read position.

    The position is pure bookkeeping: `take` reads at the current position
    and advances it, while `at` reads anywhere without touching it.  Two
    streams with the same path over the same seed always agree.  `draws`
    is a separate cursor counting law-level draws (a law may consume two
    uniforms per value); mixing take() and law sampling on one stream is
    not supported.
    """

    __slots__ = ("key0", "key1", "pos", "draws")

    def __init__(self, seed: int, experiment: int, replica: int = 0,
                 lane: int = 0):
        k0, k1 = derive_key(seed, experiment, np.uint64(replica),
                            np.uint64(lane))
        self.key0 = np.uint64(k0)
        self.key1 = np.uint64(k1)
        self.pos = 0
        self.draws = 0

    def take(self, count: int) -> np.ndarray:
        out = uniform_span(self.key0, self.key1, self.pos, count)
        self.pos += count
        return out

    def at(self, start: int, count: int) -> np.ndarray:
        return uniform_span(self.key0, self.key1, start, count)


def seed_fingerprint(seed: int, experiment: int, label: str,
                     params: dict | None = None) -> str:
    """Short reproducibility tag stored on estimates and output metadata."""
    import hashlib
    import json

    blob = json.dumps(
        {"seed": int(seed), "experiment": int(experiment), "label": label,
         "params": params or {}},
        sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
