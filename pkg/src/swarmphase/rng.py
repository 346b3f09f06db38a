"""Counter-based deterministic random stream.

Every stochastic choice in the simulator flows through one of these streams.
The generator is splitmix64 evaluated at (base + counter * GOLDEN), so a
stream is fully described by two 64-bit integers.  The same arithmetic is
reimplemented inside the numba kernels (see _accel.py); the interpreted and
compiled paths therefore produce bit-identical draw sequences, which is what
makes whole trajectories replayable from (seed, scenario) alone.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit integers."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MUL1) & MASK64
    z ^= z >> 27
    z = (z * _MUL2) & MASK64
    z ^= z >> 31
    return z


def trial_seed(seed: int, trial_index: int) -> int:
    """Derive the seed of trial `trial_index` from a scenario seed.

    Documented mixing step: the raw sum seed + trial_index is passed through
    the splitmix64 finalizer so nearby trials get unrelated streams while
    each remains reproducible in isolation.
    """
    return mix64((seed + trial_index) & MASK64)


class RngStream:
    """Seedable stream with an explicit draw counter.

    Identical (seed, counter) always yields the identical next draw; the
    counter can be read off and restored to split or resume a trajectory.
    """

    __slots__ = ("base", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.base = mix64(seed & MASK64)
        self.counter = counter

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.base + self.counter * GOLDEN) & MASK64)

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 bits of mantissa."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randbelow(self, n: int) -> int:
        # Plain modulo: the bias for n << 2**64 is far below anything a
        # statistical test here could see, and it keeps the kernel-side
        # implementation a single instruction.
        return self.next_u64() % n

    def state_array(self) -> np.ndarray:
        """Stream state as a uint64[2] array the jitted kernels mutate in place."""
        return np.array([self.base, self.counter], dtype=np.uint64)

    def sync_from(self, state: np.ndarray) -> None:
        """Adopt the counter a kernel advanced to."""
        self.counter = int(state[1])

    def spawn(self) -> "RngStream":
        """Independent child stream (consumes one draw)."""
        return RngStream(self.next_u64())

    def __repr__(self):
        return f"RngStream(base={self.base:#x}, counter={self.counter})"
