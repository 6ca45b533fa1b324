"""Shared fixtures: a control plane wired to an in-memory fleet."""

from __future__ import annotations

import pytest

from fnfleet.clock import VirtualClock
from fnfleet.httpclient import RoutingPoster
from fnfleet.ids import SeededIdFactory
from fnfleet.model import ParamSpec
from fnfleet.plane import ControlPlane
from fnfleet.storage import MemoryStore
from fnfleet.transport import InMemoryNetwork, InMemoryTransport

NOTIFIER_URL = "http://notifier.test/hook"


class Fleet:
    """A control plane plus an in-memory device network, for tests."""

    def __init__(self):
        self.clock = VirtualClock()
        self.network = InMemoryNetwork()
        self.poster = RoutingPoster()
        self.notifications: list[dict] = []
        self.poster.add_route(NOTIFIER_URL, self._notify)
        self.plane = ControlPlane(
            store=MemoryStore(),
            transport=InMemoryTransport(self.network),
            clock=self.clock,
            ids=SeededIdFactory(0),
            poster=self.poster,
            notifier_url=NOTIFIER_URL,
        )

    def _notify(self, url, body, headers):
        self.notifications.append(body)
        return 200, {}

    def add_host(self, address: str):
        return self.network.add_host(address)

    def create_monitor_function(self):
        return self.plane.registry.create_function(
            name="motion-monitor",
            source=b"print('monitor')\n",
            interpreter_template="python {file} {port} {interval}",
            params=[
                ParamSpec("port", "integer", required=True),
                ParamSpec("interval", "integer", default=10),
            ],
            extension=".py",
        )


@pytest.fixture
def fleet():
    return Fleet()
