"""Telemetry ingestion and time-range queries.

Samples are persisted batch-at-a-time and indexed in memory per
(device, metric) for ordered range queries.
"""

from __future__ import annotations

import bisect
import threading
from typing import Optional

from .clock import Clock, WallClock
from .errors import UnknownDeviceError, ValidationError
from .ids import IdFactory
from .model import TelemetryBatch
from .registry import Registry
from .storage import Store


class TelemetryStore:
    def __init__(
        self,
        store: Store,
        registry: Registry,
        clock: Optional[Clock] = None,
        ids: Optional[IdFactory] = None,
    ):
        self.store = store
        self.registry = registry
        self.clock = clock if clock is not None else WallClock()
        self.ids = ids if ids is not None else IdFactory()
        self._lock = threading.RLock()
        # (device_id, metric) -> list[(ts, value)] kept sorted by ts
        self._index: dict[tuple[str, str], list[tuple[float, float]]] = {}
        self._count = 0
        self._hydrate()

    def _hydrate(self) -> None:
        for doc in self.store.all("telemetry").values():
            batch = TelemetryBatch.from_doc(doc)
            self._index_batch(batch)

    def _index_batch(self, batch: TelemetryBatch) -> None:
        series = self._index.setdefault((batch.device_id, batch.metric), [])
        for sample in batch.samples:
            bisect.insort(series, sample)
        self._count += len(batch.samples)

    def ingest(self, device_id: str, metric: str, samples: list[tuple[float, float]]) -> int:
        """Persist a batch; returns the number of samples stored.

        An empty batch is an accepted no-op.
        """
        if not self.registry.has_device(device_id):
            raise UnknownDeviceError(f"device {device_id} not registered")
        batch = TelemetryBatch(
            device_id=device_id,
            metric=metric,
            samples=[(float(t), float(v)) for t, v in samples],
            received_at=self.clock.now(),
        )
        batch.validate()
        if not batch.samples:
            return 0
        with self._lock:
            self.store.put("telemetry", self.ids.new("tb"), batch.to_doc())
            self._index_batch(batch)
        return len(batch.samples)

    def query(
        self, device_id: str, metric: str, start: float, end: float
    ) -> list[tuple[float, float]]:
        """All samples with start <= t < end, in timestamp order."""
        if not self.registry.has_device(device_id):
            raise UnknownDeviceError(f"device {device_id} not registered")
        if start > end:
            raise ValidationError(f"query range start {start} > end {end}")
        with self._lock:
            series = self._index.get((device_id, metric), [])
            lo = bisect.bisect_left(series, (start, float("-inf")))
            hi = bisect.bisect_left(series, (end, float("-inf")))
            return list(series[lo:hi])

    def sample_count(self) -> int:
        with self._lock:
            return self._count
