# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: the event-driven walk loop and the coupled SDE step.

Scalar twin of the vectorized routines in ``streams`` / ``_fallback``: the
same Philox4x64-10 cipher, the same uniform readout, and the same
draw-to-increment formulas, consumed one value at a time.  Any divergence
between the two backends beyond last-ulp libm noise is a bug, and the test
suite compares them directly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, cos, fabs, log1p, sin, sqrt

cnp.import_array()

ctypedef unsigned long long u64
ctypedef cnp.uint8_t u8
ctypedef cnp.int64_t i64

cdef extern from *:
    ctypedef unsigned long long u128 "__uint128_t"

# Philox4x64 round constants (Random123); must match streams.py.
cdef u64 M0 = 0xD2E7470EE14C6C93ULL
cdef u64 M1 = 0xCA5A826395121157ULL
cdef u64 W0 = 0x9E3779B97F4A7C15ULL
cdef u64 W1 = 0xBB67AE8584CAA73BULL
cdef u64 DERIVE_TAG = 0x6F776C2D6B657931ULL

cdef double U53 = 2.0 ** -53
cdef double TWO_PI = 6.283185307179586
cdef double SQRT2 = 1.4142135623730951
cdef double SQRT3 = 1.7320508075688772

BACKEND_NAME = "compiled"

# Increment families, by wire id; must match the backend adapter.
cdef enum:
    FAM_GAUSSIAN = 0
    FAM_CEXP = 1
    FAM_LAPLACE = 2
    FAM_UNIFORM = 3
    FAM_CUSTOM = 4

cdef enum:
    MAXD = 64
    MAXDEPTH = 20


cdef inline u64 mulhi(u64 a, u64 b) noexcept:
    # gcc/clang 128-bit product; exact high word, same as the limb version.
    return <u64>((<u128>a * <u128>b) >> 64)


cdef inline void philox_block(u64 c0, u64 c1, u64 c2, u64 c3,
                              u64 k0, u64 k1, u64* out) noexcept:
    cdef int r
    cdef u64 hi0, lo0, hi1, lo1
    for r in range(10):
        if r:
            k0 += W0
            k1 += W1
        hi0 = mulhi(M0, c0)
        lo0 = M0 * c0
        hi1 = mulhi(M1, c2)
        lo1 = M1 * c2
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef struct Stream:
    u64 k0
    u64 k1
    u64 blk        # cached block index; valid iff filled
    u64 w[4]
    u64 nxt        # next uniform index
    int filled
    int have_z1    # cached Box-Muller partner
    double z1


cdef inline void stream_init(Stream* s, u64 seed, u64 experiment,
                             u64 replica, u64 lane) noexcept:
    cdef u64 out[4]
    philox_block(experiment, replica, lane, DERIVE_TAG, seed, W0, out)
    s.k0 = out[0]
    s.k1 = out[1]
    s.blk = 0
    s.nxt = 0
    s.filled = 0
    s.have_z1 = 0
    s.z1 = 0.0


cdef inline double stream_uniform(Stream* s) noexcept:
    cdef u64 i = s.nxt
    cdef u64 b = i >> 2
    if not s.filled or s.blk != b:
        philox_block(b, 0, 0, 0, s.k0, s.k1, s.w)
        s.blk = b
        s.filled = 1
    s.nxt = i + 1
    return <double>(s.w[i & 3] >> 11) * U53


cdef inline double exp_next(Stream* s) noexcept:
    return -log1p(-stream_uniform(s))


cdef inline double gauss_next(Stream* s) noexcept:
    # Box-Muller pair in draw-index order: even index cos leg, odd sin leg.
    cdef double u1, u2, r, ang
    if s.have_z1:
        s.have_z1 = 0
        return s.z1
    u1 = stream_uniform(s)
    u2 = stream_uniform(s)
    r = sqrt(-2.0 * log1p(-u1))
    ang = TWO_PI * u2
    s.z1 = r * sin(ang)
    s.have_z1 = 1
    return r * cos(ang)


cdef struct Law:
    int family
    int m                 # grid node count (custom only)
    const double* g
    const double* f
    const double* F


cdef inline int upper_bound(const double* a, int n, double x) noexcept:
    # First index with a[i] > x: numpy searchsorted side="right".
    cdef int lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double grid_ppf(Law* law, double u) noexcept:
    cdef int k = upper_bound(law.F, law.m, u) - 1
    if k < 0:
        k = 0
    elif k > law.m - 2:
        k = law.m - 2
    cdef double h = law.g[k + 1] - law.g[k]
    cdef double c2 = (law.f[k + 1] - law.f[k]) / (2.0 * h)
    cdef double c1 = law.f[k]
    cdef double t = u - law.F[k]
    cdef double disc = c1 * c1 + 4.0 * c2 * t
    if disc < 0.0:
        disc = 0.0
    disc = sqrt(disc)
    cdef double s = 0.0
    if c1 + disc > 0.0:
        s = 2.0 * t / (c1 + disc)
    if s > h:
        s = h
    return law.g[k] + s


cdef inline double draw_next(Law* law, Stream* s) noexcept:
    cdef double e1, e2
    if law.family == FAM_GAUSSIAN:
        return gauss_next(s)
    if law.family == FAM_CEXP:
        return -log1p(-stream_uniform(s)) - 1.0
    if law.family == FAM_LAPLACE:
        e1 = -log1p(-stream_uniform(s))
        e2 = -log1p(-stream_uniform(s))
        return (e1 - e2) / SQRT2
    if law.family == FAM_UNIFORM:
        return SQRT3 * (2.0 * stream_uniform(s) - 1.0)
    return grid_ppf(law, stream_uniform(s))


cdef inline void law_from_arrays(Law* law, int family,
                                 const double[::1] g, const double[::1] f,
                                 const double[::1] F) noexcept:
    law.family = family
    law.m = <int>g.shape[0]
    law.g = NULL
    law.f = NULL
    law.F = NULL
    if law.m > 0:
        law.g = &g[0]
        law.f = &f[0]
        law.F = &F[0]


# --- introspection twins for the parity tests -------------------------------

def derive_key64(seed, experiment, replica, lane):
    """Child stream key, as the vectorized streams module computes it."""
    cdef u64 out[4]
    philox_block(<u64>experiment, <u64>replica, <u64>lane, DERIVE_TAG,
                 <u64>seed, W0, out)
    return int(out[0]), int(out[1])


def uniform_run(seed, experiment, replica, lane, Py_ssize_t count):
    """Sequential uniforms from one stream, for cross-backend comparison."""
    cdef Stream s
    stream_init(&s, <u64>seed, <u64>experiment, <u64>replica, <u64>lane)
    out = np.empty(count)
    cdef double[::1] v = out
    cdef Py_ssize_t i
    for i in range(count):
        v[i] = stream_uniform(&s)
    return out


def law_run(int family, const double[::1] g, const double[::1] f,
            const double[::1] F, seed, experiment, replica, lane,
            Py_ssize_t count):
    """Sequential law draws from one stream (draw indices 0..count-1)."""
    cdef Law law
    law_from_arrays(&law, family, g, f, F)
    cdef Stream s
    stream_init(&s, <u64>seed, <u64>experiment, <u64>replica, <u64>lane)
    out = np.empty(count)
    cdef double[::1] v = out
    cdef Py_ssize_t i
    for i in range(count):
        v[i] = draw_next(&law, &s)
    return out


# --- event-driven walk ------------------------------------------------------

def walk_terminal(seed, experiment, const i64[::1] replicas,
                  const double[:, ::1] start, segment, double horizon,
                  int family, const double[::1] g, const double[::1] f,
                  const double[::1] F,
                  double spacing_threshold, int stop_on_exit,
                  u8[::1] survived, double[::1] exit_time,
                  double[:, ::1] exit_pos, double[:, ::1] final_pos,
                  double[::1] run_max, double[::1] run_min,
                  double[::1] nu_time, i64[:, ::1] jump_counts):
    """Simulate free ordered-walk replicas to a horizon, one event at a time.

    Row r of every output corresponds to replicas[r]; start has one row per
    replica.  Exit means some adjacent pair became equal or inverted
    (checked against the jumping walker's neighbours).  nu_time records the
    first event time (0 at the start) with every adjacent spacing strictly
    above spacing_threshold; pass a negative threshold to skip tracking.
    Survivor rows keep exit_time at +inf and exit_pos at NaN; with
    stop_on_exit the final positions of a dead replica are its exit state.
    """
    cdef u64 sd = <u64>seed, ex = <u64>experiment, seg = <u64>segment
    cdef Py_ssize_t nrep = replicas.shape[0]
    cdef int d = <int>start.shape[1]
    if d < 1 or d > MAXD:
        raise ValueError(f"walker count {d} outside 1..{MAXD}")
    if start.shape[0] != nrep:
        raise ValueError("start must have one row per replica")

    cdef Law law
    law_from_arrays(&law, family, g, f, F)

    cdef Stream times[MAXD]
    cdef Stream incs[MAXD]
    cdef double pos[MAXD]
    cdef double arrival[MAXD]
    cdef Py_ssize_t r
    cdef int j, jmin, exited, in_region, want_nu
    cdef u64 rep, lane_times, lane_inc
    cdef double t, v, dx, rmax, rmin, nu, texit
    cdef double thr = spacing_threshold

    want_nu = thr >= 0.0

    for r in range(nrep):
        rep = <u64>replicas[r]
        for j in range(d):
            # Lane layout (role, segment, walker) must match pack_lane.
            lane_times = (<u64>0 << 48) | (seg << 16) | <u64>j
            lane_inc = (<u64>1 << 48) | (seg << 16) | <u64>j
            stream_init(&times[j], sd, ex, rep, lane_times)
            stream_init(&incs[j], sd, ex, rep, lane_inc)
            pos[j] = start[r, j]
            arrival[j] = exp_next(&times[j])
            jump_counts[r, j] = 0

        exited = 0
        texit = INFINITY
        for j in range(d - 1):
            if pos[j] >= pos[j + 1]:
                exited = 1
                texit = 0.0
                break
        nu = INFINITY
        if want_nu:
            in_region = 1
            for j in range(d - 1):
                if pos[j + 1] - pos[j] <= thr:
                    in_region = 0
                    break
            if in_region:
                nu = 0.0
        rmax = pos[d - 1]
        rmin = pos[0]

        if exited:
            for j in range(d):
                exit_pos[r, j] = pos[j]
        else:
            for j in range(d):
                exit_pos[r, j] = NAN

        while not (exited and stop_on_exit):
            jmin = 0
            for j in range(1, d):
                if arrival[j] < arrival[jmin]:
                    jmin = j
            t = arrival[jmin]
            if t > horizon:
                break
            dx = draw_next(&law, &incs[jmin])
            v = pos[jmin] + dx
            pos[jmin] = v
            jump_counts[r, jmin] += 1
            if jmin == d - 1 and v > rmax:
                rmax = v
            if jmin == 0 and v < rmin:
                rmin = v
            if not exited:
                if (jmin > 0 and v <= pos[jmin - 1]) or \
                        (jmin < d - 1 and v >= pos[jmin + 1]):
                    exited = 1
                    texit = t
                    for j in range(d):
                        exit_pos[r, j] = pos[j]
            if want_nu and nu == INFINITY:
                in_region = 1
                for j in range(d - 1):
                    if pos[j + 1] - pos[j] <= thr:
                        in_region = 0
                        break
                if in_region:
                    nu = t
            arrival[jmin] = t + exp_next(&times[jmin])

        survived[r] = 0 if exited else 1
        exit_time[r] = texit
        nu_time[r] = nu
        run_max[r] = rmax
        run_min[r] = rmin
        for j in range(d):
            final_pos[r, j] = pos[j]


# --- coupled Dyson integrator -----------------------------------------------

cdef inline double min_spacing(const double* x, int d) noexcept:
    cdef double m = INFINITY
    cdef int j
    for j in range(d - 1):
        if x[j + 1] - x[j] < m:
            m = x[j + 1] - x[j]
    return m


cdef inline void euler_step(const double* x, int d, double dt,
                            const double* noise, double* out) noexcept:
    # dX_i = dB_i + sum_{j != i} dt / (X_i - X_j), drift clamped to the
    # scale the substep can resolve.
    cdef double clamp = 1.0 / sqrt(dt)
    cdef double sq = sqrt(dt)
    cdef int i, j
    cdef double drift
    for i in range(d):
        drift = 0.0
        for j in range(d):
            if j != i:
                drift += 1.0 / (x[i] - x[j])
        if drift > clamp:
            drift = clamp
        elif drift < -clamp:
            drift = -clamp
        out[i] = x[i] + sq * noise[i] + drift * dt


cdef int advance_pair(double* y, double* z, int d, double dt, int depth,
                      Stream* s) noexcept:
    """Advance both systems by dt with shared noise.  0 ok, 1 collapse,
    2 crossing at maximal refinement."""
    cdef double noise[MAXD]
    cdef double ny[MAXD]
    cdef double nz[MAXD]
    cdef int j, rc, crossed
    if depth < MAXDEPTH and (min_spacing(y, d) < 10.0 * sqrt(dt) or
                             min_spacing(z, d) < 10.0 * sqrt(dt)):
        rc = advance_pair(y, z, d, dt * 0.5, depth + 1, s)
        if rc:
            return rc
        return advance_pair(y, z, d, dt * 0.5, depth + 1, s)
    if min_spacing(y, d) < 1e-12 or min_spacing(z, d) < 1e-12:
        return 1
    for j in range(d):
        noise[j] = gauss_next(s)
    euler_step(y, d, dt, noise, ny)
    euler_step(z, d, dt, noise, nz)
    crossed = 0
    for j in range(d - 1):
        if ny[j + 1] <= ny[j] or nz[j + 1] <= nz[j]:
            crossed = 1
            break
    if crossed:
        if depth >= MAXDEPTH:
            return 2
        # Retry at finer resolution with fresh draws; the decision depends
        # only on values, so the draw sequence stays reproducible.
        rc = advance_pair(y, z, d, dt * 0.5, depth + 1, s)
        if rc:
            return rc
        return advance_pair(y, z, d, dt * 0.5, depth + 1, s)
    for j in range(d):
        y[j] = ny[j]
        z[j] = nz[j]
    return 0


def dyson_pair(seed, experiment, const i64[::1] replicas,
               const double[::1] y0, const double[::1] z0,
               double step, Py_ssize_t nsteps,
               double[:, :, ::1] out_y, double[:, :, ::1] out_z):
    """Integrate coupled eigenvalue SDE pairs on the nominal grid k*step.

    out_y/out_z have shape (n_replicas, nsteps+1, d); row 0 is the start.
    Both systems of one replica share every Gaussian increment.  Raises on
    spacing collapse (< 1e-12) or on a crossing that survives maximal step
    refinement.
    """
    cdef u64 sd = <u64>seed, ex = <u64>experiment
    cdef Py_ssize_t nrep = replicas.shape[0]
    cdef int d = <int>y0.shape[0]
    if d < 1 or d > MAXD:
        raise ValueError(f"system size {d} outside 1..{MAXD}")
    cdef double y[MAXD]
    cdef double z[MAXD]
    cdef Stream s
    cdef Py_ssize_t r, k
    cdef int j, rc
    cdef u64 lane_sde = (<u64>5 << 48)          # ROLE_SDE, segment 0, walker 0
    for r in range(nrep):
        stream_init(&s, sd, ex, <u64>replicas[r], lane_sde)
        for j in range(d):
            y[j] = y0[j]
            z[j] = z0[j]
            out_y[r, 0, j] = y[j]
            out_z[r, 0, j] = z[j]
        for k in range(nsteps):
            rc = advance_pair(y, z, d, step, 0, &s)
            if rc == 1:
                raise FloatingPointError(
                    f"spacing collapse below 1e-12 in replica "
                    f"{replicas[r]} near time {(k + 1) * step:g}; "
                    f"the step is too coarse")
            if rc == 2:
                raise FloatingPointError(
                    f"level crossing persisted at maximal refinement in "
                    f"replica {replicas[r]} near time {(k + 1) * step:g}; "
                    f"the step is too coarse")
            for j in range(d):
                out_y[r, k + 1, j] = y[j]
                out_z[r, k + 1, j] = z[j]
