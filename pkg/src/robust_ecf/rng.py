"""Keyed counter-based random streams.

A stream is identified by a root seed plus an integer key path such as
(replication, population, purpose).  Streams are Philox generators seeded
through ``SeedSequence`` so that results do not depend on the order in
which replications are executed.
"""

import numpy as np

# purpose codes used as the last element of a key path
COVARIATE = 0
ERROR = 1
CONTAMINATION = 2
NULL_DRAWS = 3
POWER_DRAWS = 4


def stream(seed, *key):
    """Generator for ``(seed, *key)``.

    ``seed`` may already be a ``Generator``, in which case it is returned
    unchanged and ``key`` is ignored.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
