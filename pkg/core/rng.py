"""Copyright 2025 The ghive developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from __future__ import annotations

import numpy as np


__all__ = ("SEED_MASK", "make_generator", "replication_seed")


SEED_MASK = (1 << 64) - 1


def make_generator(seed: int, *, stream: int) -> np.random.Generator:
    """Return a Philox generator keyed by ``seed`` whose counter starts in ``stream``.

    Streams differ in the highest counter word, so draws from different streams of the same seed
    never overlap.
    """
    key: int = int(seed) & SEED_MASK
    counter: np.ndarray = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def replication_seed(seed: int, index: int) -> int:
    return (int(seed) ^ int(index)) & SEED_MASK
