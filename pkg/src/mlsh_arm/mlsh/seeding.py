"""Named random streams.

Every stochastic decision draws from a generator keyed by where it happens
(round, phase, iteration, episode segment, purpose), so results do not
depend on call order or on how segments are spread over workers.
"""

import numpy as np

PHI_INIT = 0
THETA_INIT = 1
TASK_PICK = 2
ROLLOUT = 3
UPDATE = 4
EVAL = 5

WARMUP = 0
JOINT = 1
ADAPT = 2
PHASE_NAMES = {WARMUP: "warmup", JOINT: "joint", ADAPT: "adapt"}

RESET_STREAM = 0
MASTER_STREAM = 1
ACTION_STREAM = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
