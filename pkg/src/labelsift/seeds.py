"""Deterministic derivation of child seeds from a single run seed.

Every nested random decision (grid-search fold fits, per-run noise draws,
the final training pass) gets its own child seed derived from the master
seed plus fixed integer tags, so parallel and sequential execution of the
same run produce identical results.
"""

import numpy as np

# Purpose tags; values are arbitrary but frozen.
TAG_KFOLD = 1
TAG_CV_FIT = 2
TAG_FINAL_FIT = 3
TAG_NOISE = 4
TAG_RUN = 5


def derive_seed(master: int, *path: int) -> int:
    """Derive a 64-bit child seed from a master seed and integer tags."""
    seq = np.random.SeedSequence([int(master)] + [int(p) for p in path])
    return int(seq.generate_state(1, np.uint64)[0])
