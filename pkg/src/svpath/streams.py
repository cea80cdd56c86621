"""Counter-based random streams.

Each independent unit of work gets its own Philox generator keyed on
``(seed, domain, unit)``. Draws inside a unit are taken in a fixed array
layout, so every normal is a pure function of (seed, domain, unit, path,
step) and results do not depend on how units are scheduled.
"""

from __future__ import annotations

import numpy as np

PATH_INTEGRAL = 1
SEQUENTIAL = 2
EULER = 3


def stream(seed: int, domain: int, unit: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(domain), int(unit)))
    return np.random.Generator(np.random.Philox(ss))
