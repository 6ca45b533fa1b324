"""Deployment engine: render the launch command, transfer, start, track, stop.

Deploys are serialized per device (one in flight per device id); deploys to
distinct devices may run concurrently. A device is marked Unreachable only
when opening a session to it fails.
"""

from __future__ import annotations

import logging
import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from .clock import Clock
from .errors import (
    IllegalStateError,
    LaunchError,
    TransportError,
    UnresolvedPlaceholderError,
    UnsafeValueError,
)
from .model import PLACEHOLDER_RE, Deployment, DeploymentState, FunctionDefinition
from .registry import Registry
from .transport import Transport

logger = logging.getLogger(__name__)

DEFAULT_BASE_DIR = "/opt/fnfleet"

# values substituted into a shell command line: no whitespace, no shell
# metacharacters; reject instead of quoting (remote shells differ)
_SAFE_VALUE_RE = re.compile(r"^[A-Za-z0-9_@%+=:,./-]+$")


def render_value(name: str, value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, str):
        if not _SAFE_VALUE_RE.match(value):
            raise UnsafeValueError(
                f"binding {name!r} contains whitespace or shell metacharacters: {value!r}"
            )
        return value
    raise UnsafeValueError(f"binding {name!r} has unrenderable type {type(value).__name__}")


def render_command(function: FunctionDefinition, bindings: dict, remote_path: str) -> str:
    """Substitute every placeholder in the interpreter template.

    Deterministic; raises UnresolvedPlaceholderError if a placeholder has no
    value and UnsafeValueError for string values that cannot be passed bare.
    """
    if not remote_path:
        raise UnresolvedPlaceholderError("remote path must be non-empty")
    values = {"file": remote_path}
    for name, value in bindings.items():
        values[name] = render_value(name, value)

    unresolved: list[str] = []

    def substitute(match: re.Match) -> str:
        token = match.group(1)
        if token not in values:
            unresolved.append(token)
            return match.group(0)
        return values[token]

    command = PLACEHOLDER_RE.sub(substitute, function.interpreter_template)
    if unresolved:
        raise UnresolvedPlaceholderError(
            f"unresolved placeholders in command: {sorted(set(unresolved))}"
        )
    return command


@dataclass
class LaunchPlan:
    """Everything needed to put one function instance on one device."""

    remote_path: str
    command: str
    payload: bytes

    @property
    def payload_size(self) -> int:
        return len(self.payload)


@dataclass
class DeploymentMetrics:
    deployment_id: str
    device_id: str
    payload_size: int = 0
    bytes_sent: int = 0
    duration: float = 0.0
    started_at: float = 0.0
    succeeded: bool = False

    def to_doc(self) -> dict:
        return {
            "deployment_id": self.deployment_id,
            "device_id": self.device_id,
            "payload_size": self.payload_size,
            "bytes_sent": self.bytes_sent,
            "duration": self.duration,
            "started_at": self.started_at,
            "succeeded": self.succeeded,
        }


class DeploymentEngine:
    def __init__(
        self,
        registry: Registry,
        transport: Transport,
        clock: Optional[Clock] = None,
        base_dir: str = DEFAULT_BASE_DIR,
        observer: Optional[Callable[[dict], None]] = None,
    ):
        self.registry = registry
        self.transport = transport
        self.clock = clock if clock is not None else registry.clock
        self.base_dir = base_dir.rstrip("/")
        self.observer = observer
        self.metrics: dict[str, DeploymentMetrics] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _emit(self, event: dict) -> None:
        if self.observer is not None:
            self.observer(event)

    def _device_lock(self, device_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(device_id)
            if lock is None:
                lock = self._locks[device_id] = threading.Lock()
            return lock

    def remote_path_for(self, function: FunctionDefinition, deployment: Deployment) -> str:
        return f"{self.base_dir}/{function.id}-{deployment.id}{function.extension}"

    def plan(self, deployment: Deployment) -> LaunchPlan:
        function = self.registry.get_function(
            deployment.function_id, deployment.function_version
        )
        remote_path = self.remote_path_for(function, deployment)
        command = render_command(function, deployment.bindings, remote_path)
        return LaunchPlan(remote_path=remote_path, command=command, payload=function.source)

    def deploy(self, deployment_id: str) -> Deployment:
        """Run the transfer-and-execute leg for a Requested deployment.

        Also accepts Transferred as a starting state so an interrupted
        deploy can be re-run; the transfer is overwrite-idempotent.
        """
        dep = self.registry.get_deployment(deployment_id)
        device = self.registry.get_device(dep.device_id)
        with self._device_lock(device.id):
            # re-check under the lock: a concurrent call may have advanced it
            dep = self.registry.get_deployment(deployment_id)
            if dep.state not in (DeploymentState.REQUESTED, DeploymentState.TRANSFERRED):
                raise IllegalStateError(
                    f"deployment {dep.id} is {dep.state.value}, expected requested"
                )
            plan = self.plan(dep)
            metrics = DeploymentMetrics(
                deployment_id=dep.id, device_id=device.id, payload_size=plan.payload_size
            )
            self.metrics[dep.id] = metrics
            started = self.clock.now()
            metrics.started_at = started
            try:
                session = self.transport.open(device.address, device.transport_credentials)
            except TransportError as exc:
                self.registry.transition_deployment(
                    dep.id, DeploymentState.FAILED, f"transport: {exc}"
                )
                self.registry.mark_unreachable(device.id)
                raise
            try:
                try:
                    session.write_file(plan.remote_path, plan.payload)
                except TransportError as exc:
                    self.registry.transition_deployment(
                        dep.id, DeploymentState.FAILED, f"transfer: {exc}"
                    )
                    raise
                if dep.state is DeploymentState.REQUESTED:
                    self.registry.transition_deployment(dep.id, DeploymentState.TRANSFERRED)
                self._emit(
                    {
                        "event": "transfer",
                        "device_id": device.id,
                        "deployment_id": dep.id,
                        "bytes": plan.payload_size,
                    }
                )
                try:
                    handle = session.exec_detached(plan.command)
                except LaunchError as exc:
                    self.registry.transition_deployment(
                        dep.id, DeploymentState.FAILED, f"launch: {exc}"
                    )
                    raise
                self.registry.transition_deployment(dep.id, DeploymentState.RUNNING)
                self.registry.set_deployment_handle(dep.id, handle)
                self._emit(
                    {"event": "execute", "device_id": device.id, "deployment_id": dep.id}
                )
                metrics.bytes_sent = session.bytes_sent
                metrics.duration = self.clock.now() - started
                metrics.succeeded = True
                self.registry.note_deployment_running(device.id, manual=not dep.auto)
            finally:
                session.close()
        return self.registry.get_deployment(dep.id)

    def stop(self, deployment_id: str) -> Deployment:
        dep = self.registry.get_deployment(deployment_id)
        device = self.registry.get_device(dep.device_id)
        with self._device_lock(device.id):
            dep = self.registry.get_deployment(deployment_id)
            if dep.state is not DeploymentState.RUNNING:
                raise IllegalStateError(
                    f"deployment {dep.id} is {dep.state.value}, expected running"
                )
            try:
                session = self.transport.open(device.address, device.transport_credentials)
            except TransportError:
                self.registry.transition_deployment(
                    dep.id, DeploymentState.FAILED, "stop-unreachable"
                )
                self.registry.mark_unreachable(device.id)
                raise
            try:
                if dep.handle:
                    session.kill(dep.handle)
                self.registry.transition_deployment(dep.id, DeploymentState.STOPPED)
            finally:
                session.close()
        self.registry.recompute_device_status(device.id)
        return self.registry.get_deployment(dep.id)

    def probe(self, deployment_id: str) -> str:
        """Return 'alive' or 'dead'; a dead process fails the deployment."""
        dep = self.registry.get_deployment(deployment_id)
        device = self.registry.get_device(dep.device_id)
        with self._device_lock(device.id):
            dep = self.registry.get_deployment(deployment_id)
            if dep.state is not DeploymentState.RUNNING:
                raise IllegalStateError(
                    f"deployment {dep.id} is {dep.state.value}, expected running"
                )
            try:
                session = self.transport.open(device.address, device.transport_credentials)
            except TransportError:
                self.registry.mark_unreachable(device.id)
                raise
            try:
                alive = session.is_alive(dep.handle or "")
            finally:
                session.close()
        if alive:
            return "alive"
        self.registry.transition_deployment(dep.id, DeploymentState.FAILED, "exited")
        self.registry.recompute_device_status(device.id)
        return "dead"
