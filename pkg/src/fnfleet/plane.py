"""Control plane: wires registry, deployment engine, telemetry, and rules
into the orchestration flows (discovery, deployment, ingest-and-evaluate).

Every discovery/deployment step appends to a message log so deployment
sequences can be asserted and audited.
"""

from __future__ import annotations

import logging
import threading
from typing import Optional

from .clock import Clock, WallClock
from .engine import DEFAULT_BASE_DIR, DeploymentEngine
from .errors import FnFleetError, LaunchError, TransportError
from .httpclient import HttpPoster, HttpxPoster
from .ids import IdFactory
from .model import Deployment, Device
from .registry import Registry
from .rules import ActionDispatcher, RuleEngine
from .storage import MemoryStore, Store
from .telemetry import TelemetryStore
from .transport import Transport

logger = logging.getLogger(__name__)


class ControlPlane:
    def __init__(
        self,
        store: Optional[Store] = None,
        transport: Optional[Transport] = None,
        clock: Optional[Clock] = None,
        ids: Optional[IdFactory] = None,
        poster: Optional[HttpPoster] = None,
        notifier_url: str = "",
        deploy_base_dir: str = DEFAULT_BASE_DIR,
    ):
        if transport is None:
            raise ValueError("control plane needs a transport")
        self.store = store if store is not None else MemoryStore()
        self.clock = clock if clock is not None else WallClock()
        self.ids = ids if ids is not None else IdFactory()
        self.poster = poster if poster is not None else HttpxPoster()
        self.events: list[dict] = []
        self._events_lock = threading.Lock()

        self.registry = Registry(self.store, self.clock, self.ids, observer=self._record_event)
        self.engine = DeploymentEngine(
            self.registry,
            transport,
            clock=self.clock,
            base_dir=deploy_base_dir,
            observer=self._record_event,
        )
        self.telemetry = TelemetryStore(self.store, self.registry, self.clock, self.ids)
        self.dispatcher = ActionDispatcher(self.registry, self.poster, notifier_url, self.clock)
        self.rules = RuleEngine(self.store, self.registry, self.dispatcher, self.clock, self.ids)

    def _record_event(self, event: dict) -> None:
        with self._events_lock:
            self.events.append(event)

    # ------------------------------------------------------------------
    # Orchestration flows
    # ------------------------------------------------------------------

    def register_device(
        self, address: str, capabilities: list[str]
    ) -> tuple[Device, list[Deployment]]:
        """Discovery flow: admit the device, then run any auto-deployments."""
        device, new_deps = self.registry.register_device(address, capabilities)
        for dep in new_deps:
            self._deploy_quietly(dep.id)
        return self.registry.get_device(device.id), [
            self.registry.get_deployment(d.id) for d in new_deps
        ]

    def _deploy_quietly(self, deployment_id: str) -> None:
        try:
            self.engine.deploy(deployment_id)
        except (TransportError, LaunchError) as exc:
            logger.warning("deployment %s failed: %s", deployment_id, exc)

    def assign_deployment(self, device_id: str, function_id: str, bindings: dict) -> Deployment:
        """Manual assignment flow: create the deployment and execute it."""
        dep = self.registry.assign_deployment(device_id, function_id, bindings)
        self._deploy_quietly(dep.id)
        return self.registry.get_deployment(dep.id)

    def stop_deployment(self, deployment_id: str) -> Deployment:
        try:
            return self.engine.stop(deployment_id)
        except TransportError:
            return self.registry.get_deployment(deployment_id)

    def ingest_telemetry(
        self, device_id: str, metric: str, samples: list[tuple[float, float]]
    ) -> int:
        """Store the batch, then evaluate rules per sample in timestamp order.

        Rule dispatch failures are recorded as outcomes and never surface
        here; ingest succeeds iff the batch is valid and stored.
        """
        stored = self.telemetry.ingest(device_id, metric, samples)
        if stored:
            for ts, value in sorted(samples, key=lambda s: s[0]):
                try:
                    self.rules.evaluate(device_id, metric, float(value), float(ts))
                except FnFleetError as exc:  # pragma: no cover - defensive
                    logger.error("rule evaluation error: %s", exc)
        return stored

    def close(self) -> None:
        self.store.close()
