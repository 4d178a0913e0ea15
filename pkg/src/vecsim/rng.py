"""Seeded, entity-scoped random number streams.

Every stochastic entity in a run (a vehicle's CTU draws, a path decode, a
Q-learner's exploration) owns its own sub-stream, derived from the scenario
seed and a string label. Streams are independent of each other and of the
order in which other entities draw, so adding a vehicle to a scenario never
perturbs the draws of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RngStream"]


def _spawn_key(stream_id: str) -> tuple[int, ...]:
    # hashlib, not hash(): Python string hashing is salted per process.
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


class RngStream:
    """One named sub-stream of the run-level seed.

    Identical (seed, stream_id, draw sequence) yields identical values on any
    platform; distinct stream_ids give statistically independent streams.
    """

    def __init__(self, seed: int, stream_id: str):
        self.seed = int(seed)
        self.stream_id = stream_id
        seq = np.random.SeedSequence(self.seed, spawn_key=_spawn_key(stream_id))
        self.generator = np.random.default_rng(seq)

    def substream(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.stream_id}/{label}")

    # Convenience pass-throughs used all over the simulator.
    def random(self) -> float:
        return float(self.generator.random())

    def integers(self, low: int, high: int | None = None) -> int:
        return int(self.generator.integers(low, high))

    def choice_without_replacement(self, n: int, k: int) -> list[int]:
        return [int(x) for x in self.generator.choice(n, size=k, replace=False)]

    def bytes(self, n: int) -> bytes:
        return self.generator.bytes(n)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id!r})"
