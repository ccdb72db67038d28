# Compiled versions of the hot kernels: quadrature batch decode, encoder
# edge generation, and the LIDAR raycast. Must stay bit-identical to
# mirsim._kernels._pure (checked by tests/test_kernels.py).

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor, fabs, INFINITY

cnp.import_array()

cdef double BOUNDARY_NUDGE = 1e-9

cdef int[16] DELTA16
cdef int[16] INVALID16
cdef unsigned char[4] PHASE4
DELTA16 = [0, 1, -1, 0,  -1, 0, 0, 1,  1, 0, 0, -1,  0, -1, 1, 0]
INVALID16 = [0, 0, 0, 1,  0, 0, 1, 0,  0, 1, 0, 0,  1, 0, 0, 0]
PHASE4 = [0, 1, 3, 2]


def quad_decode_batch(int prev_state, states):
    """Run the 16-entry transition table over a batch of phase codes.

    Returns (count_delta, invalid_transitions, final_state).
    """
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] s = np.ascontiguousarray(states, dtype=np.uint8)
    cdef Py_ssize_t n = s.shape[0]
    if n == 0:
        return 0, 0, prev_state
    cdef long long delta = 0
    cdef long long invalid = 0
    cdef int prev = prev_state
    cdef int curr
    cdef Py_ssize_t i
    cdef int idx
    for i in range(n):
        curr = s[i]
        idx = (prev << 2) | curr
        delta += DELTA16[idx]
        invalid += INVALID16[idx]
        prev = curr
    return int(delta), int(invalid), prev


def encoder_edge_states(double angle_prev, double angle_curr, int ppr):
    """Phase codes for every quarter-step boundary crossed between the two
    shaft angles, in traversal order (4 * ppr edges per revolution)."""
    cdef double k = 2.0 * ppr / 3.14159265358979323846
    cdef long long q0 = <long long>floor(angle_prev * k + BOUNDARY_NUDGE)
    cdef long long q1 = <long long>floor(angle_curr * k + BOUNDARY_NUDGE)
    cdef Py_ssize_t n
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out
    cdef Py_ssize_t i
    cdef long long p
    if q1 > q0:
        n = q1 - q0
        out = np.empty(n, dtype=np.uint8)
        p = q0 + 1
        for i in range(n):
            out[i] = PHASE4[p & 3]
            p += 1
    elif q1 < q0:
        n = q0 - q1
        out = np.empty(n, dtype=np.uint8)
        p = q0 - 1
        for i in range(n):
            out[i] = PHASE4[p & 3]
            p -= 1
    else:
        out = np.empty(0, dtype=np.uint8)
    return out


def raycast_scan(double px, double py, double theta, int n_beams,
                 double range_max, segments):
    """Nearest ray/segment intersection per beam.

    Beam i points at theta + i * (2*pi/n_beams), counterclockwise. Returns
    one float64 range per beam; 0.0 marks no hit within range_max.
    segments is a float64 array of shape (N, 4): x1 y1 x2 y2.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] segs = \
        np.ascontiguousarray(segments, dtype=np.float64).reshape(-1, 4)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_beams, dtype=np.float64)
    cdef Py_ssize_t nseg = segs.shape[0]
    if nseg == 0:
        return out
    cdef double step = 2.0 * 3.14159265358979323846 / n_beams
    cdef Py_ssize_t b, j
    cdef double ang, dx, dy, ex, ey, wx, wy, denom, t, s, nearest
    for b in range(n_beams):
        ang = theta + b * step
        dx = cos(ang)
        dy = sin(ang)
        nearest = INFINITY
        for j in range(nseg):
            ex = segs[j, 2] - segs[j, 0]
            ey = segs[j, 3] - segs[j, 1]
            denom = dx * ey - dy * ex
            if fabs(denom) <= 1e-15:
                continue
            wx = segs[j, 0] - px
            wy = segs[j, 1] - py
            t = (wx * ey - wy * ex) / denom
            if t <= 1e-12:
                continue
            s = (wx * dy - wy * dx) / denom
            if s < 0.0 or s > 1.0:
                continue
            if t < nearest:
                nearest = t
        if nearest <= range_max:
            out[b] = nearest
    return out
