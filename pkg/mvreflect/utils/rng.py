"""
Counter-based random numbers.

Every draw is addressed by (seed, stream, counter): the key of a numpy Philox
generator is derived from the seed and a stream name, and the counter selects an
independent block. Particle dynamics use the step index as counter and draw one
block of shape (n_ids, d) per step, indexed by particle id, so a particle's noise
depends only on (seed, id, step) and never on how the work is split across threads.
"""
import hashlib

import numpy as np

MAX_SEED = 2 ** 64 - 1


def check_seed(seed):
    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise ValueError('seed must be an unsigned 64-bit integer, got {}'.format(seed))
    return seed


def stream_key(seed, stream):
    digest = hashlib.blake2b('{}:{}'.format(check_seed(seed), stream).encode('utf-8'), digest_size=16).digest()
    return int.from_bytes(digest, 'little')


class CounterRNG:
    def __init__(self, seed, stream='default'):
        self.seed = check_seed(seed)
        self.stream = stream
        self.key = stream_key(self.seed, stream)

    def generator(self, counter=0):
        """Fresh generator positioned at block `counter`; equal arguments give equal draws."""
        # the top counter word carries the block index, the lower words are consumed by draws
        bitgen = np.random.Philox(key=self.key, counter=int(counter) << 192)
        return np.random.Generator(bitgen)

    def normals(self, counter, ids, d):
        ids = np.asarray(ids, dtype=np.int64)
        n_block = int(ids.max()) + 1 if ids.size else 0
        block = self.generator(counter).standard_normal((n_block, d))
        return block[ids]

    def __repr__(self):
        return 'CounterRNG(seed={}, stream={!r})'.format(self.seed, self.stream)
