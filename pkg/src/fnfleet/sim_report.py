"""Scenario run report: everything a run produced, JSON-serializable.

Field order and content are deterministic for a given scenario + seed under
the virtual clock.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class ScenarioReport:
    name: str
    seed: int
    clock: str
    devices: list[dict] = field(default_factory=list)
    functions: list[dict] = field(default_factory=list)
    deployments: list[dict] = field(default_factory=list)
    message_log: list[list[str]] = field(default_factory=list)
    rule_firings: int = 0
    notifications: list[dict] = field(default_factory=list)
    recordings: list[dict] = field(default_factory=list)
    outcomes: list[dict] = field(default_factory=list)
    telemetry: dict = field(default_factory=dict)
    bytes: dict = field(default_factory=dict)
    assertion_failures: list[str] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "clock": self.clock,
            "devices": self.devices,
            "functions": self.functions,
            "deployments": self.deployments,
            "message_log": self.message_log,
            "rule_firings": self.rule_firings,
            "notifications": self.notifications,
            "recordings": self.recordings,
            "outcomes": self.outcomes,
            "telemetry": self.telemetry,
            "bytes": self.bytes,
            "assertion_failures": self.assertion_failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2) + "\n"

    @property
    def ok(self) -> bool:
        return not self.assertion_failures
