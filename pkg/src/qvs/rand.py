"""Counter-based random streams: one generator per (seed, purpose, index).

Streams are derived from the entropy tuple alone, so replications may run
in any order (or in parallel) without changing their draws.
"""

import numpy as np

# domain tags keep streams for different purposes disjoint under one seed
CALIBRATION = 101
SCENARIO = 202
CROSSVAL = 303


def substream(seed, *path):
    """Deterministic generator for a (seed, *path) counter tuple."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(int(x) & 0xFFFFFFFFFFFFFFFF for x in path)
    return np.random.default_rng(entropy)
