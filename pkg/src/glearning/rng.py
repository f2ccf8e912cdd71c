"""Seeded random streams.

Every run draws from its own :class:`RandomStream`, built from a
:class:`numpy.random.SeedSequence` whose entropy is the tuple
``(base_seed, run_index, stream_code, purpose)``.  The SeedSequence hashing is
the documented mixing function: two streams share state only if the whole
tuple matches.  ``stream_code`` is the CRC-32 of the stream label (an
algorithm name, or ``"domain"`` for domain generation); ``purpose`` is 0 for
main runs and 1 for the k-sweep's preliminary runs.
"""

import zlib

import numpy as np

__all__ = ["RandomStream", "derive_seed_sequence", "stream_code", "make_stream"]

MAIN = 0
SWEEP = 1

_BLOCK = 4096


def stream_code(label):
    return zlib.crc32(label.encode("utf-8"))


def derive_seed_sequence(base_seed, run_index, label, purpose=MAIN):
    return np.random.SeedSequence([int(base_seed), int(run_index), stream_code(label), int(purpose)])


class RandomStream:
    """Buffered uniform/normal draws on top of a PCG64 generator.

    Uniform and normal variates come from two separate buffers refilled in
    blocks, so a stream's output depends only on its seed and on the
    sequence of calls made against it.
    """

    def __init__(self, seed=None):
        if isinstance(seed, np.random.Generator):
            self.generator = seed
        else:
            self.generator = np.random.Generator(np.random.PCG64(seed))
        self._u = []
        self._ui = 0
        self._z = []
        self._zi = 0

    def uniform(self):
        """One draw from U[0, 1)."""
        i = self._ui
        if i == len(self._u):
            self._u = self.generator.random(_BLOCK).tolist()
            i = 0
        self._ui = i + 1
        return self._u[i]

    def normal(self):
        """One standard normal draw."""
        i = self._zi
        if i == len(self._z):
            self._z = self.generator.standard_normal(_BLOCK).tolist()
            i = 0
        self._zi = i + 1
        return self._z[i]

    def integer(self, n):
        """Uniform integer in ``range(n)``."""
        k = int(self.uniform() * n)
        return k if k < n else n - 1

    def coin(self):
        return self.uniform() < 0.5


def make_stream(base_seed, run_index, label, purpose=MAIN):
    return RandomStream(derive_seed_sequence(base_seed, run_index, label, purpose))
