"""
seeded_rng.py
----------------
Portable, seedable random source used for every nondeterministic choice
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")


class SeededRng:
    """
    Thin wrapper around numpy's PCG64 bit generator.

    All engines draw their random choices exclusively from an instance of this class,
    so that a run is a pure function of (model, parameters, seed).
    PCG64 is fully specified (O'Neill, 2014) and numpy guarantees stream stability
    for Generator.integers() on a given seed, which makes traces reproducible
    across platforms.
    """

    ALGORITHM = "PCG64"

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def below(self, n: int) -> int:
        """
        Returns a uniformly distributed integer in [0, n).
        """
        if n <= 0:
            raise ValueError(f"Cannot draw below {n}")
        if n == 1:
            # do not consume the stream on forced choices
            return 0
        return int(self._gen.integers(0, n))

    def coin(self) -> bool:
        return int(self._gen.integers(0, 2)) == 1

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]

    def shuffled(self, items: Sequence[T]) -> list[T]:
        """
        Returns a new list with the items in uniformly random order (Fisher-Yates).
        """
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def integer_in(self, low: int, high: int) -> int:
        """
        Returns a uniformly distributed integer in [low, high], both inclusive.
        """
        return low + self.below(high - low + 1)

    def spawn(self) -> "SeededRng":
        """
        Returns an independent generator whose seed is drawn from this one.
        """
        return SeededRng(int(self._gen.integers(0, 2**31 - 1)))
