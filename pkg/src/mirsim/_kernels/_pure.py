"""Numpy fallback for the hot kernels; used when the compiled extension is
unavailable or disabled via MIR_PURE_PY=1. Semantics are bit-identical to
mirsim._kernels._native (checked by tests/test_kernels.py)."""

from __future__ import annotations

import math

import numpy as np

from ._tables import BOUNDARY_NUDGE, DELTA16_NP, INVALID16_NP, PHASE4_NP

_EMPTY_U8 = np.empty(0, dtype=np.uint8)


def quad_decode_batch(prev_state: int, states) -> tuple[int, int, int]:
    """Run the 16-entry transition table over a batch of phase codes.

    Returns (count_delta, invalid_transitions, final_state).
    """
    s = np.asarray(states, dtype=np.uint8)
    if s.size == 0:
        return 0, 0, int(prev_state)
    prevs = np.empty_like(s)
    prevs[0] = prev_state
    prevs[1:] = s[:-1]
    idx = (prevs.astype(np.intp) << 2) | s
    delta = int(DELTA16_NP[idx].astype(np.int64).sum())
    invalid = int(INVALID16_NP[idx].astype(np.int64).sum())
    return delta, invalid, int(s[-1])


def encoder_edge_states(angle_prev: float, angle_curr: float, ppr: int) -> np.ndarray:
    """Phase codes for every quarter-step boundary crossed between the two
    shaft angles, in traversal order (4 * ppr edges per revolution)."""
    k = 2.0 * ppr / math.pi
    q0 = math.floor(angle_prev * k + BOUNDARY_NUDGE)
    q1 = math.floor(angle_curr * k + BOUNDARY_NUDGE)
    if q1 > q0:
        pos = np.arange(q0 + 1, q1 + 1, dtype=np.int64)
    elif q1 < q0:
        pos = np.arange(q0 - 1, q1 - 1, -1, dtype=np.int64)
    else:
        return _EMPTY_U8
    return PHASE4_NP[pos & 3]


def raycast_scan(px: float, py: float, theta: float, n_beams: int,
                 range_max: float, segments) -> np.ndarray:
    """Nearest ray/segment intersection per beam.

    Beam i points at theta + i * (2*pi/n_beams), counterclockwise. Returns
    one float64 range per beam; 0.0 marks no hit within range_max.
    segments is a float64 array of shape (N, 4): x1 y1 x2 y2.
    """
    segs = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    out = np.zeros(n_beams, dtype=np.float64)
    if segs.shape[0] == 0:
        return out
    angles = theta + np.arange(n_beams) * (2.0 * math.pi / n_beams)
    dx = np.cos(angles)[:, None]  # (B, 1)
    dy = np.sin(angles)[:, None]
    ex = (segs[:, 2] - segs[:, 0])[None, :]  # (1, N)
    ey = (segs[:, 3] - segs[:, 1])[None, :]
    wx = (segs[:, 0] - px)[None, :]
    wy = (segs[:, 1] - py)[None, :]

    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * ey - wy * ex) / denom
        s = (wx * dy - wy * dx) / denom
    hit = (np.abs(denom) > 1e-15) & (t > 1e-12) & (s >= 0.0) & (s <= 1.0)
    t = np.where(hit, t, np.inf)
    nearest = t.min(axis=1)
    within = nearest <= range_max
    out[within] = nearest[within]
    return out
