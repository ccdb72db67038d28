"""Quadrature lookup tables shared by both kernel backends.

Phase states are coded as (a << 1) | b. The forward Gray cycle is
(0,0) -> (0,1) -> (1,1) -> (1,0), i.e. codes 0 -> 1 -> 3 -> 2. Transition
tables are indexed by (prev << 2) | curr. Double transitions (both channels
flipping at once) contribute no count and set the invalid flag.
"""

from __future__ import annotations

import numpy as np

# quadrature position (mod 4) -> phase code
PHASE4 = (0, 1, 3, 2)
PHASE4_NP = np.array(PHASE4, dtype=np.uint8)

DELTA16 = (
    0, +1, -1, 0,
    -1, 0, 0, +1,
    +1, 0, 0, -1,
    0, -1, +1, 0,
)
DELTA16_NP = np.array(DELTA16, dtype=np.int8)

INVALID16 = (
    0, 0, 0, 1,
    0, 0, 1, 0,
    0, 1, 0, 0,
    1, 0, 0, 0,
)
INVALID16_NP = np.array(INVALID16, dtype=np.uint8)

# Nudge (in quarter-step units) so shaft angles that land exactly on a
# phase boundary quantize deterministically despite float rounding.
BOUNDARY_NUDGE = 1e-9
