"""Reproducible Gaussian streams for the particle simulator.

The common noise comes from its own root stream, so its increments depend
only on ``seed_common`` and the step index. Each particle owns a private
stream derived from ``(seed_private, particle index)``; particle ``i`` sees
the same initial draw and the same increments in every run with at least
``i + 1`` particles.
"""

import numpy as np

_COMMON = 0
_PRIVATE = 1


def common_generator(seed_common):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed_common), spawn_key=(_COMMON,))))


def particle_generators(seed_private, n):
    root = int(seed_private)
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(root, spawn_key=(_PRIVATE, i))))
        for i in range(n)
    ]


def common_increments(seed_common, n_steps, p, dt):
    """The first ``n_steps`` common-noise increments, shape ``(n_steps, p)``."""
    return np.sqrt(dt) * common_generator(seed_common).standard_normal((n_steps, p))


class NoiseStreams:
    """Buffered increments for one run.

    ``take(n)`` returns ``(dW0, dW)`` with shapes ``(n, p)`` and
    ``(N, n, d)``, already scaled by ``sqrt(dt)``.
    """

    def __init__(self, seed_common, seed_private, n_particles, d, p, dt, block=None, private=True):
        self.n, self.d, self.p = int(n_particles), int(d), int(p)
        # with private=False the private increments are all zero and never drawn
        self.private = bool(private)
        self.scale = float(np.sqrt(dt))
        self._common = common_generator(seed_common)
        self._private = particle_generators(seed_private, self.n)
        if block is None:
            block = max(32, min(1024, 4_000_000 // max(1, self.n * self.d)))
        self.block = int(block)
        self._w0 = np.empty((0, self.p))
        self._w = np.empty((self.n, 0, self.d))
        self._pos = 0
        self._zeros = None

    def initial_normals(self):
        """One standard-normal draw of size d per particle, taken before any increment."""
        out = np.empty((self.n, self.d))
        for i, g in enumerate(self._private):
            out[i] = g.standard_normal(self.d)
        return out

    def _refill(self, need):
        size = max(self.block, need)
        w0 = self._common.standard_normal((size, self.p))
        self._w0 = np.concatenate([self._w0[self._pos :], w0])
        if self.private:
            w = np.empty((self.n, size, self.d))
            for i, g in enumerate(self._private):
                w[i] = g.standard_normal((size, self.d))
            self._w = np.concatenate([self._w[:, self._pos :], w], axis=1)
        self._pos = 0

    def take(self, n):
        if self._w0.shape[0] - self._pos < n:
            self._refill(n)
        a, b = self._pos, self._pos + n
        self._pos = b
        if not self.private:
            if self._zeros is None or self._zeros.shape[1] < n:
                self._zeros = np.zeros((self.n, max(n, self.block), self.d))
            return self.scale * self._w0[a:b], self._zeros[:, :n]
        return self.scale * self._w0[a:b], self.scale * self._w[:, a:b]
