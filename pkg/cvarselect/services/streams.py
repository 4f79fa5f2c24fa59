"""Counter-based random streams.

Every random quantity is drawn from its own Philox stream keyed by
``SeedSequence([seed, tag, *keys])``. Draw ``k`` of a stream does not depend
on how many draws were requested, so scenario ``k`` of an element is the same
whatever the scenario count, the evaluation order or the other elements.
"""

import numpy as np

# stream tags
MOD_INSTANCE = 1
MOD_EFFICIENCY = 2
COVERAGE_INSTANCE = 3
COVERAGE_ALIVE = 4
CITY = 5
PLACEMENT = 6
NODE_WAIT = 7
OTA_SCENARIO = 8
EVALUATION = 9


def stream(*, seed: int, tag: int, keys: tuple[int, ...] = ()) -> np.random.Generator:
    entropy = [int(seed), int(tag), *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def uniforms(
    *, seed: int, tag: int, keys: tuple[int, ...] = (), n: int
) -> np.ndarray:
    return stream(seed=seed, tag=tag, keys=keys).random(n)


def derive_seed(*, seed: int, tag: int, keys: tuple[int, ...] = ()) -> int:
    entropy = [int(seed), int(tag), *(int(k) for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> 1)
