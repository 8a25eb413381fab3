#!/usr/bin/env python3
"""
Reproducible random streams

Every source of randomness in a run (a noise term in a rule, a sensor or
actuator channel, a random controller) draws from its own generator, seeded
from (master seed, run index, channel id). Streams are created lazily, so a
noise-free run never touches numpy's RNG.
"""
import copy
import zlib
from typing import Dict

import numpy as np

_SEED_MASK = (1 << 64) - 1


def channel_key(channel: str) -> int:
    """Stable integer key for a channel identifier"""
    return zlib.crc32(channel.encode("utf-8"))


def derive_rng(master_seed: int, run_index: int, channel: str) -> np.random.Generator:
    """Build the generator owned by one channel of one run

    Args:
        master_seed: Seed of the whole simulation or batch
        run_index: Index of the run within its batch or sweep
        channel: Channel identifier, e.g. ``dyn:velocity#0`` or ``sensor:position``

    Returns:
        Independent numpy generator
    """
    entropy = [int(master_seed) & _SEED_MASK, int(run_index) & _SEED_MASK]
    entropy.append(channel_key(channel))
    return np.random.default_rng(np.random.SeedSequence(entropy))


class NoiseStreams:
    """Lazily created per-channel generators for a single run"""

    def __init__(self, master_seed: int = 0, run_index: int = 0):
        self.master_seed = master_seed
        self.run_index = run_index
        self._generators: Dict[str, np.random.Generator] = {}

    def generator(self, channel: str) -> np.random.Generator:
        rng = self._generators.get(channel)
        if rng is None:
            rng = derive_rng(self.master_seed, self.run_index, channel)
            self._generators[channel] = rng
        return rng

    def normal(self, channel: str, sigma: float) -> float:
        if sigma == 0.0:
            return 0.0
        return float(self.generator(channel).normal(0.0, sigma))

    def uniform(self, channel: str, low: float, high: float) -> float:
        return float(self.generator(channel).uniform(low, high))

    def fork(self) -> "NoiseStreams":
        """Independent copy whose streams continue from the current positions"""
        twin = NoiseStreams(self.master_seed, self.run_index)
        twin._generators = {
            name: copy.deepcopy(rng) for name, rng in self._generators.items()
        }
        return twin
