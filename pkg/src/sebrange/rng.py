"""Counter-based deterministic random streams.

Every random draw in the package flows through :class:`Rng`, a splitmix64
counter generator: draw ``i`` of a stream is ``mix(seed + (i+1) * gamma)``.
The stream therefore depends only on ``(seed, counter)``, is identical
across platforms, and supports cheap independent substreams keyed by an
integer (used to give each generated order its own stream). Standard-library
and numpy generators are deliberately not used on data paths.
"""

import numpy as np

from . import kernels

_MASK64 = (1 << 64) - 1
# Distinct odd constant for deriving substream seeds so that a substream
# never replays a contiguous window of its parent stream.
_SPAWN_GAMMA = 0xD1342543DE82EF95


def derive_seeds(seed: int, keys) -> np.ndarray:
    """Mix a parent seed with integer keys into substream seeds (vectorized)."""
    keys = np.asarray(keys, dtype=np.int64).astype(np.uint64)
    z = np.uint64(seed & _MASK64) + (keys + np.uint64(1)) * np.uint64(_SPAWN_GAMMA)
    return kernels.mix64(z + np.uint64(kernels.SPLITMIX_GAMMA))


def derive_seed(seed: int, key: int) -> int:
    """Scalar form of :func:`derive_seeds`."""
    return int(derive_seeds(seed, np.array([key]))[0])


class Rng:
    """Deterministic stream of draws; equal seeds give bit-equal streams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 words of the stream."""
        counters = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return kernels.splitmix64(self.seed, counters)

    def uniform(self, low=0.0, high=1.0, size=None):
        """Uniform float64 draws in [low, high)."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        out = low + u * (high - low)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def normal(self, mean=0.0, sd=1.0, size=None):
        """Gaussian draws via Box-Muller; consumes 2*ceil(n/2) raw words."""
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        w = self.raw(2 * pairs)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((w[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (w[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        out = mean + sd * z
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def integers(self, high: int, size=None):
        """Integer draws in [0, high). Bias is < 2**-53 * high, negligible
        for the data-generation ranges used here."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        out = np.floor(u * high).astype(np.int64)
        if size is None:
            return int(out[0])
        return out.reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of range(n) (argsort of raw keys)."""
        return np.argsort(self.raw(n), kind="stable").astype(np.int64)

    def spawn(self, key: int) -> "Rng":
        """Independent substream keyed by an integer."""
        return Rng(derive_seed(self.seed, int(key)))
