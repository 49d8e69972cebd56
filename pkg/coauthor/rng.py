from typing import Tuple

import numpy as np

from .exceptions import UnknownStreamError

STREAMS = (
    "network-init",
    "clique-formation",
    "utilities",
    "policy-exploration",
    "training-sampling",
    "ultimatum-play",
    "network-updates",
    "population-assignment",
)


class RandomSource:
    """
    A seed plus a derivation path. Every named stream is an independent
    :class:`numpy.random.Generator`; asking twice for the same name returns
    two generators replaying the same sequence.
    """

    def __init__(self, seed: int, path: Tuple[int, ...] = ()) -> None:
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, path={self.path})"

    def stream(self, name: str) -> np.random.Generator:
        try:
            index = STREAMS.index(name)
        except ValueError:
            raise UnknownStreamError(f"unknown random stream {name!r}")
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.path + (index,))
        return np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, index: int) -> "RandomSource":
        """
        Child source for run ``index`` of a sweep or episode ``index`` of training.
        """
        return RandomSource(self.seed, self.path + (len(STREAMS) + int(index),))


def derive_stream(rs: RandomSource, name: str) -> np.random.Generator:
    return rs.stream(name)
