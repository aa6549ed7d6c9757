"""Deterministic random stream used by the simulation lab.

The generator is counter-based: the i-th raw draw is ``mix(seed + i*GOLDEN)``
where ``mix`` is the SplitMix64 output function, so a stream is fully
determined by (seed, number of draws consumed).  Uniforms take the top 53
bits of a raw draw; normals come from Marsaglia's polar rejection applied to
consecutive uniform pairs.  Both transforms are simple enough to re-derive
in any language, which keeps simulated datasets portable and replayable.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class RandomStream:
    """SplitMix64 counter stream with uniform and polar-normal draws.

    Splitting a request into several calls consumes the stream identically
    to one large call, so generated datasets do not depend on batching.
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._counter = 0
        self._normal_cache: float | None = None

    def next_u64(self) -> int:
        self._counter += 1
        return _mix((self._seed + self._counter * _GOLDEN) & _MASK64)

    def uniform(self) -> float:
        """One draw from [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, count: int) -> np.ndarray:
        """`count` uniform draws, consuming the counter in order."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        with np.errstate(over="ignore"):
            z = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def normals(self, count: int) -> np.ndarray:
        """`count` standard normals from the polar transform, in stream order."""
        out = np.empty(count)
        filled = 0
        if count and self._normal_cache is not None:
            out[0] = self._normal_cache
            self._normal_cache = None
            filled = 1
        while filled < count:
            # Oversample uniform pairs, then rewind the counter so only the
            # pairs actually turned into emitted normals stay consumed.
            batch_pairs = max(count - filled, 64)
            start = self._counter
            u = self.uniforms(2 * batch_pairs)
            a = 2.0 * u[0::2] - 1.0
            b = 2.0 * u[1::2] - 1.0
            s = a * a + b * b
            keep = (s > 0.0) & (s < 1.0)
            kept_pos = np.nonzero(keep)[0]
            if kept_pos.size == 0:
                continue
            a, b, s = a[keep], b[keep], s[keep]
            f = np.sqrt(-2.0 * np.log(s) / s)
            pair = np.empty(2 * a.size)
            pair[0::2] = a * f
            pair[1::2] = b * f
            need = count - filled
            used_pairs = min((need + 1) // 2, a.size)
            take = min(2 * used_pairs, need)
            out[filled:filled + take] = pair[:take]
            filled += take
            if take < 2 * used_pairs:
                self._normal_cache = float(pair[take])
            if filled == count:
                self._counter = start + 2 * (int(kept_pos[used_pairs - 1]) + 1)
        return out

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) via rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % bound

    def choose(self, pool: np.ndarray, count: int) -> np.ndarray:
        """`count` elements of `pool` without replacement (partial Fisher-Yates)."""
        if count > pool.size:
            raise ValueError("cannot choose more elements than the pool holds")
        arr = pool.copy()
        for i in range(count):
            j = i + self.below(arr.size - i)
            arr[i], arr[j] = arr[j], arr[i]
        return arr[:count]


def derive_seed(seed: int, index: int) -> int:
    """Per-replication seed: XOR of the base seed with the replication index."""
    return (seed ^ index) & _MASK64
