"""Counter-based random streams.

Every random number used by the samplers is a pure function of
``(seed, stream, path, index, purpose)`` computed with the Philox4x32-10
bijection.  No generator state is carried between draws, which is what lets
the compiled kernels and the vectorised fallback produce the same numbers in
any evaluation order, and makes replica fan-out deterministic.

Counter layout (four 32-bit words)::

    c0 = draw index (time-step block for normals)
    c1 = path index inside the stream
    c2 = stream index (replica, or splitting run)
    c3 = purpose tag

The 64-bit seed is the Philox key.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85

# purpose tags (counter word c3)
NORMAL = 0
BRIDGE = 1
CHOICE = 2

_MASK32 = np.uint64(0xFFFFFFFF)
_TWO_PI = 6.283185307179586


def philox4x32(c0, c1, c2, c3, k0, k1, rounds=10):
    """Vectorised Philox4x32 on arrays of 32-bit counter words.

    Returns four ``uint32`` arrays broadcast to the common shape of the
    counters.
    """
    c = np.broadcast_arrays(*(np.asarray(v, dtype=np.uint32) for v in (c0, c1, c2, c3)))
    c = [w.copy() for w in c]
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    shift = np.uint64(32)
    k0 = int(k0) & 0xFFFFFFFF
    k1 = int(k1) & 0xFFFFFFFF
    for _ in range(rounds):
        p0 = m0 * c[0].astype(np.uint64)
        p1 = m1 * c[2].astype(np.uint64)
        hi0 = (p0 >> shift).astype(np.uint32)
        lo0 = (p0 & _MASK32).astype(np.uint32)
        hi1 = (p1 >> shift).astype(np.uint32)
        lo1 = (p1 & _MASK32).astype(np.uint32)
        c = [hi1 ^ c[1] ^ np.uint32(k0), lo1, hi0 ^ c[3] ^ np.uint32(k1), lo0]
        k0 = (k0 + PHILOX_W0) & 0xFFFFFFFF
        k1 = (k1 + PHILOX_W1) & 0xFFFFFFFF
    return c


def words_to_unit(w_hi, w_lo):
    """Combine two 32-bit words into a double in [0, 1) with 53 random bits."""
    a = (np.asarray(w_hi, dtype=np.uint32) >> np.uint32(5)).astype(np.float64)
    b = (np.asarray(w_lo, dtype=np.uint32) >> np.uint32(6)).astype(np.float64)
    return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0)


def split_seed(seed):
    seed = int(seed)
    if seed < 0 or seed >= 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed & 0xFFFFFFFF, seed >> 32


@dataclass(frozen=True)
class Stream:
    """One independent substream ``(seed, index)``."""

    seed: int
    index: int = 0

    @property
    def key(self):
        return split_seed(self.seed)

    def substream(self, index):
        """Stream keyed by the same seed with another stream index."""
        return Stream(self.seed, index)

    def normals(self, path, steps):
        """Standard normals for the given step indices of one path.

        Steps ``2j`` and ``2j + 1`` share one Philox block (cosine and sine
        halves of a Box-Muller pair).
        """
        steps = np.asarray(steps, dtype=np.int64)
        path = np.asarray(path, dtype=np.int64)
        k0, k1 = self.key
        w = philox4x32(steps >> 1, path, self.index, NORMAL, k0, k1)
        u1 = words_to_unit(w[0], w[1])
        u2 = words_to_unit(w[2], w[3])
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = _TWO_PI * u2
        return np.where((steps & 1) == 0, r * np.cos(theta), r * np.sin(theta))

    def uniforms(self, path, index, purpose=BRIDGE):
        """Two independent uniforms on [0, 1) per ``(path, index)`` pair."""
        k0, k1 = self.key
        w = philox4x32(index, path, self.index, purpose, k0, k1)
        return words_to_unit(w[0], w[1]), words_to_unit(w[2], w[3])

    def generator(self):
        """A numpy ``Generator`` for non-kernel draws (bootstrap, Gumbel).

        Uses numpy's own Philox4x64 keyed by ``(seed, index)``.
        """
        return np.random.Generator(np.random.Philox(key=[self.seed, self.index]))


def as_stream(rng):
    """Coerce ``int`` / ``Stream`` / ``None`` into a ``Stream``."""
    if isinstance(rng, Stream):
        return rng
    if rng is None:
        return Stream(0)
    return Stream(int(rng))
