"""Entity id generation.

Ids are opaque strings with a short kind prefix for debuggability.
Production uses random UUID-derived ids; the simulator injects a seeded
factory so scenario runs are reproducible and ids are fixed-width.
"""

from __future__ import annotations

import random
import threading
import uuid

ID_WIDTH = 12


class IdFactory:
    """Random, collision-resistant ids (default outside the simulator)."""

    def new(self, kind: str) -> str:
        return f"{kind}-{uuid.uuid4().hex[:ID_WIDTH]}"


class SeededIdFactory(IdFactory):
    """Deterministic fixed-width ids derived from a seed.

    Fixed width matters: remote paths embed ids, so equal-length ids keep
    per-deployment transfer overhead byte-identical across a benchmark run.
    """

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self._lock = threading.Lock()

    def new(self, kind: str) -> str:
        with self._lock:
            token = "".join(self._rng.choice("0123456789abcdef") for _ in range(ID_WIDTH))
        return f"{kind}-{token}"
