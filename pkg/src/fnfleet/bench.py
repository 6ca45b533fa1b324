"""Deployment benchmark: repeated deploys of the bundled 1 KB monitor
function across simulated devices, with byte and memory accounting.

Byte accounting comes from the in-memory transport's counters; every
deployment of the same function must cost exactly payload + framing, so
total bytes scale linearly: total = n * cost(first).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import psutil

from .errors import ValidationError
from .ids import SeededIdFactory
from .model import DeploymentState, ParamSpec
from .plane import ControlPlane
from .sim import bundled_source
from .storage import MemoryStore
from .transport import InMemoryNetwork, InMemoryTransport

CSV_COLUMNS = [
    "index",
    "deployment_id",
    "device",
    "state",
    "payload_bytes",
    "total_bytes",
    "duration_s",
    "rss_bytes",
    "rss_delta_bytes",
]


@dataclass
class BenchRow:
    index: int
    deployment_id: str
    device: str
    state: str
    payload_bytes: int
    total_bytes: int
    duration_s: float
    rss_bytes: int
    rss_delta_bytes: int


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    total_bytes: int = 0
    failures: int = 0
    linear: bool = False

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.index,
                        r.deployment_id,
                        r.device,
                        r.state,
                        r.payload_bytes,
                        r.total_bytes,
                        f"{r.duration_s:.6f}",
                        r.rss_bytes,
                        r.rss_delta_bytes,
                    ]
                )

    def summary(self) -> str:
        n = len(self.rows)
        payload = self.rows[0].payload_bytes if self.rows else 0
        per = self.rows[0].total_bytes if self.rows else 0
        mean_delta = sum(r.rss_delta_bytes for r in self.rows) / n if n else 0
        lines = [
            f"deployments: {n}  failures: {self.failures}",
            f"payload per deployment: {payload} bytes",
            f"transferred per deployment: {per} bytes "
            f"(framing {per - payload} bytes)",
            f"total transferred: {self.total_bytes} bytes  "
            f"linear (n x first): {'yes' if self.linear else 'NO'}",
            f"control-plane RSS delta per deployment: mean {mean_delta:.0f} bytes",
        ]
        return "\n".join(lines)


def measure_deployment(n_functions: int, n_devices: int = 1, seed: int = 0) -> BenchReport:
    """Deploy the bundled monitor n times round-robin over simulated devices."""
    if n_functions < 1:
        raise ValidationError("bench needs n >= 1 deployments")
    if n_devices < 1:
        raise ValidationError("bench needs at least 1 device")

    network = InMemoryNetwork()
    plane = ControlPlane(
        store=MemoryStore(),
        transport=InMemoryTransport(network),
        ids=SeededIdFactory(seed),
    )
    fn = plane.registry.create_function(
        name="monitor",
        source=bundled_source("monitor-function"),
        interpreter_template="python {file} {port} {interval}",
        params=[
            ParamSpec("port", "integer", required=True),
            ParamSpec("interval", "integer", default=10),
        ],
        extension=".py",
    )

    devices = []
    for i in range(n_devices):
        address = f"bench-{i:03d}:9000"
        network.add_host(address)
        device, _ = plane.register_device(address, [])
        devices.append(device)

    proc = psutil.Process()
    report = BenchReport()
    for i in range(n_functions):
        device = devices[i % n_devices]
        rss_before = proc.memory_info().rss
        t0 = time.perf_counter()
        dep = plane.assign_deployment(device.id, fn.id, {"port": 4})
        duration = time.perf_counter() - t0
        rss_after = proc.memory_info().rss
        metrics = plane.engine.metrics.get(dep.id)
        report.rows.append(
            BenchRow(
                index=i,
                deployment_id=dep.id,
                device=device.address,
                state=dep.state.value,
                payload_bytes=metrics.payload_size if metrics else 0,
                total_bytes=metrics.bytes_sent if metrics else 0,
                duration_s=duration,
                rss_bytes=rss_after,
                rss_delta_bytes=rss_after - rss_before,
            )
        )
        if dep.state is not DeploymentState.RUNNING:
            report.failures += 1

    report.total_bytes = network.total_bytes_sent
    if report.rows:
        report.linear = report.total_bytes == len(report.rows) * report.rows[0].total_bytes
    return report
