"""Quadrature decoding: phase edges in, signed counts out.

Both shaft encoders emit two square waves (channels A and B) a quarter cycle
apart. Decoding is 4x: every edge on either channel moves the count by one.
The forward direction is the cycle (a,b): 00 -> 01 -> 11 -> 10 -> 00; the
reverse cycle counts down. A transition that flips both channels at once is
physically impossible at an adequate sample rate, so it contributes no count
and is tallied as invalid.

Single transitions go through quad_step(); bulk edge batches produced by the
plant go through QuadratureDecoder.feed(), which uses the compiled kernel
when it is available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels._tables import DELTA16, INVALID16


@dataclass(frozen=True, slots=True)
class PhasePair:
    """Instantaneous state of encoder channels A and B."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise ValueError(f"phase bits must be 0 or 1, got a={self.a} b={self.b}")

    @property
    def code(self) -> int:
        """Two-bit state code (a << 1) | b, the index used by the tables."""
        return (self.a << 1) | self.b

    @classmethod
    def from_code(cls, code: int) -> "PhasePair":
        return cls((code >> 1) & 1, code & 1)


@dataclass(frozen=True, slots=True)
class StepResult:
    delta: int
    invalid: bool


def quad_step(prev: PhasePair, curr: PhasePair) -> StepResult:
    """Classify one phase transition.

    Returns delta in {-1, 0, +1} and an invalid flag for double transitions
    (both channels changed). Identical states give (0, False).
    """
    idx = (prev.code << 2) | curr.code
    return StepResult(DELTA16[idx], bool(INVALID16[idx]))


class QuadratureDecoder:
    """Stateful 4x decoder for one encoder.

    count accumulates +-1 per valid transition and is never touched by
    invalid ones; invalid_transitions counts those separately and never
    decreases.
    """

    __slots__ = ("prev", "count", "invalid_transitions")

    def __init__(self, initial: PhasePair = PhasePair(0, 0)) -> None:
        self.prev = initial
        self.count = 0
        self.invalid_transitions = 0

    def step(self, curr: PhasePair) -> StepResult:
        """Advance by a single observed phase state."""
        r = quad_step(self.prev, curr)
        self.count += r.delta
        if r.invalid:
            self.invalid_transitions += 1
        self.prev = curr
        return r

    def feed(self, codes) -> int:
        """Advance through a batch of phase state codes; returns the net delta.

        codes is any sequence of two-bit states (bytes, list of ints, or a
        numpy uint8 array straight from the plant).
        """
        if isinstance(codes, (bytes, bytearray, memoryview)):
            arr = np.frombuffer(codes, dtype=np.uint8)
        else:
            arr = np.ascontiguousarray(codes, dtype=np.uint8)
        if arr.size == 0:
            return 0
        delta, invalid, final = _kernels.quad_decode_batch(self.prev.code, arr)
        self.count += delta
        self.invalid_transitions += invalid
        self.prev = PhasePair.from_code(final)
        return delta
