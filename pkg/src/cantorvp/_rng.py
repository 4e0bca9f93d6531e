"""Counter-based random numbers built on the SplitMix64 finaliser.

Every draw is a pure function of ``(seed, stream, counter)``, so a path or a
vertex gets the same numbers no matter how work is scheduled.  This is what
lets serial and parallel simulations agree bit for bit.

SplitMix64 (Steele, Lea & Flood 2014) is used both as the mixing function and,
for tree generation, as the generator itself.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(x):
    """SplitMix64 finaliser applied elementwise to a uint64 array."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(value):
    return np.uint64(int(value) & _MASK64)


def stream_keys(seed, streams):
    """One 64-bit key per stream index, derived from ``seed``."""
    streams = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(np.full(streams.shape, _as_u64(seed), dtype=np.uint64)) ^ streams)


def uniforms(keys, counter):
    """Uniform doubles in [0, 1) for each key at integer position ``counter``.

    Uses the top 53 bits of the mixed word.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = mix64(keys ^ mix64(np.full(keys.shape, _as_u64(counter), dtype=np.uint64)))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


class SplitMix64:
    """Sequential SplitMix64 generator (the reference stream algorithm)."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randint(self, low, high):
        """Integer in the closed range [low, high] (rejection sampling, unbiased)."""
        span = high - low + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.next_u64()
            if r < limit:
                return low + r % span
