"""Counter-based random streams.

Every variate is a pure function of ``(seed, domain, step, stream, lane, sub,
slot)`` fed through Philox4x64-10, so a path's randomness does not depend on
how paths are batched or scheduled across threads.

Counter layout (four 64-bit words)::

    c0 = slot block (4 uniforms per block)
    c1 = step word (engine step index, or SEQUENTIAL_BIT | call index)
    c2 = stream id
    c3 = lane | sub << 8

and key ``(seed, KEY_TAG ^ domain)``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels

KEY_TAG = 0x46454C4C45525F31
SEQUENTIAL_BIT = 1 << 63
_U64 = (1 << 64) - 1
_MAX_SUB = 1 << 56


def _check_u64(value, what):
    value = int(value)
    if not 0 <= value <= _U64:
        raise ValueError(f"{what} must fit in an unsigned 64-bit integer, got {value}")
    return value


class RandomBlock:
    """Independent rows of randomness at one step address.

    Each call on a lane hands out fresh slots; lanes are independent of each
    other, so a consumer whose draw count varies row by row (jump sizes) can
    use its own lane without shifting the slots of fixed-size consumers.
    """

    def __init__(self, seed, step, streams, subs=None, domain=0):
        self.seed = _check_u64(seed, "seed")
        self.domain = _check_u64(domain, "domain")
        self.step = _check_u64(step, "step")
        self.streams = np.ascontiguousarray(streams, dtype=np.uint64).ravel()
        n = self.streams.shape[0]
        if subs is None:
            subs = np.zeros(n, dtype=np.uint64)
        subs = np.ascontiguousarray(subs, dtype=np.uint64).ravel()
        if subs.shape[0] != n:
            raise ValueError("streams and subs must have the same length")
        if n and int(subs.max()) >= _MAX_SUB:
            raise ValueError("sub index too large")
        self._subs = subs
        self._next_block = {}

    def __len__(self):
        return self.streams.shape[0]

    @property
    def key(self):
        return self.seed, KEY_TAG ^ self.domain

    def _tags(self, lane):
        if not 0 <= lane < 256:
            raise ValueError("lane must be in [0, 256)")
        return np.uint64(lane) | (self._subs << np.uint64(8))

    def take(self, rows):
        """Restrict to a subset of rows, keeping each row's addresses."""
        sub = RandomBlock.__new__(RandomBlock)
        sub.seed = self.seed
        sub.domain = self.domain
        sub.step = self.step
        sub.streams = self.streams[rows]
        sub._subs = self._subs[rows]
        sub._next_block = dict(self._next_block)
        return sub

    def uniform(self, k, lane=0):
        """Uniforms on (0, 1), shape (n, k)."""
        start = self._next_block.get(lane, 0)
        self._next_block[lane] = start + (k + 3) // 4
        return self.uniform_at(k, lane, start)

    def uniform_at(self, k, lane, block0):
        """Uniforms from an explicit block offset; does not advance the lane."""
        k0, k1 = self.key
        return _kernels.uniforms(k0, k1, block0, self.step, self.streams, self._tags(lane), k)

    def normal(self, k, lane=0):
        """Standard normals, shape (n, k), via Box-Muller."""
        m = k + (k & 1)
        return _kernels.box_muller(self.uniform(m, lane))[:, :k]

    def reserve(self, lane, nblocks):
        """Claim ``nblocks`` blocks on ``lane`` and return the first block index."""
        start = self._next_block.get(lane, 0)
        self._next_block[lane] = start + nblocks
        return start

    def tags(self, lane):
        return self._tags(lane)


class RngStream:
    """A reproducible stream identified by ``(seed, stream_id)``.

    Sequential draws advance ``counter``; the same seed, stream id and call
    sequence reproduce identical output bit for bit.
    """

    def __init__(self, seed, stream_id=0, counter=0, domain=0):
        self.seed = _check_u64(seed, "seed")
        self.stream_id = _check_u64(stream_id, "stream_id")
        self.domain = _check_u64(domain, "domain")
        if not 0 <= int(counter) < SEQUENTIAL_BIT:
            raise ValueError("counter out of range")
        self.counter = int(counter)

    def __repr__(self):
        return (f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"counter={self.counter}, domain={self.domain})")

    def next_block(self, size=1):
        """A RandomBlock of ``size`` independent rows; advances the counter."""
        if size < 1:
            raise ValueError("size must be positive")
        step = SEQUENTIAL_BIT | self.counter
        self.counter += 1
        streams = np.full(size, self.stream_id, dtype=np.uint64)
        subs = np.arange(size, dtype=np.uint64)
        return RandomBlock(self.seed, step, streams, subs, domain=self.domain)

    def random(self, size=1):
        """``size`` uniforms on (0, 1)."""
        return self.next_block(size).uniform(1)[:, 0]

    def normal(self, size=1):
        return self.next_block(size).normal(1)[:, 0]

    def spawn(self, stream_id):
        """A fresh stream with the same seed and domain."""
        return RngStream(self.seed, stream_id, domain=self.domain)


def engine_block(seed, step, streams, domain=0):
    """RandomBlock addressing engine step ``step`` for the given path streams."""
    if step >= SEQUENTIAL_BIT:
        raise ValueError("engine step index out of range")
    return RandomBlock(seed, step, streams, None, domain=domain)
