"""Deterministic stream splitting.

All randomness in the toolkit flows from a single integer seed. Independent
substreams are addressed by integer paths, e.g. ``substream(seed, 1, t)`` for
the inner-optimizer stream of step ``t``. Adding new stream kinds under a new
path never perturbs existing streams, which is what makes seed-paired
comparisons and ``--jobs``-independent results possible.

Path registry (keep in sync with call sites):

    (STREAM_INIT_DESIGN,)        initial-design sampling of one env
    (STREAM_STEP, t)             acquisition maximization at step t of one env
    (STREAM_POLICY, m, n)        action sampling in episode n of update m
    (STREAM_SHUFFLE, m, k)       minibatch shuffle in epoch k of update m
    (STREAM_PARAM_INIT,)         network weight initialization
    (STREAM_ENV_SEED, ...)       derived integer seeds for child envs/runs

The first two are rooted at an env's own seed; the rest at the master seed.
"""

from __future__ import annotations

import numpy as np

STREAM_INIT_DESIGN = 0
STREAM_STEP = 1
STREAM_POLICY = 2
STREAM_SHUFFLE = 3
STREAM_PARAM_INIT = 4
STREAM_ENV_SEED = 5


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream of ``seed`` addressed by ``path``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def child_seed(seed: int, *path: int) -> int:
    """Derived integer seed, for handing a whole stream tree to a sub-run."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
