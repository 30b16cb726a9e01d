"""Seeded random-number handles.

All stochastic draws in the simulator flow through ``Rng`` so that every
scenario is replayable from a single integer. The underlying bit generator
is pinned to numpy's Philox (counter-based); numpy guarantees stream
stability for it across releases, which is what makes byte-identical
replay a supportable promise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALGORITHM = "philox4x64"


@dataclass(frozen=True)
class Rng:
    """Handle for a deterministic random stream.

    ``split`` derives statistically independent child streams from integer
    path keys, so subsystems (bits, channel draw, noise, ...) never share
    or race on one stream.
    """

    seed: int

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))

    def split(self, *path: int) -> "Rng":
        if not path:
            raise ValueError("split needs at least one path key")
        child = np.random.SeedSequence([int(self.seed), *[int(p) for p in path]])
        return Rng(seed=int(child.generate_state(1, np.uint64)[0]))
