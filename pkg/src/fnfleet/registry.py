"""Authoritative state for functions, devices, deployments, and auto-deploy rules.

All operations are linearizable: a single re-entrant lock orders every
mutation, and each mutation is persisted to the store before it returns.
The registry never talks to the network; executing deployments is the
deployment engine's job.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable, Optional

from .clock import Clock, WallClock
from .errors import BindingError, InUseError, NotFoundError, ValidationError
from .ids import IdFactory
from .model import (
    AutoDeployRule,
    Capability,
    Deployment,
    DeploymentState,
    Device,
    DeviceStatus,
    FunctionDefinition,
    ParamSpec,
    resolve_binding_template,
    validate_address,
    validate_bindings,
)
from .storage import MemoryStore, Store

logger = logging.getLogger(__name__)

Observer = Callable[[dict], None]

LIVE_STATES = (DeploymentState.REQUESTED, DeploymentState.TRANSFERRED, DeploymentState.RUNNING)


class Registry:
    """Entity store facade plus the device-discovery decision logic."""

    def __init__(
        self,
        store: Optional[Store] = None,
        clock: Optional[Clock] = None,
        ids: Optional[IdFactory] = None,
        observer: Optional[Observer] = None,
    ):
        self.store = store if store is not None else MemoryStore()
        self.clock = clock if clock is not None else WallClock()
        self.ids = ids if ids is not None else IdFactory()
        self.observer = observer
        self._lock = threading.RLock()
        # kind -> id -> entity, hydrated from the store in journal order
        self._functions: dict[str, list[FunctionDefinition]] = {}
        self._devices: dict[str, Device] = {}
        self._deployments: dict[str, Deployment] = {}
        self._autodeploy: dict[str, AutoDeployRule] = {}
        self._hydrate()

    def _hydrate(self) -> None:
        for key, doc in self.store.all("function").items():
            self._functions[key] = [FunctionDefinition.from_doc(v) for v in doc["versions"]]
        for key, doc in self.store.all("device").items():
            self._devices[key] = Device.from_doc(doc)
        for key, doc in self.store.all("deployment").items():
            self._deployments[key] = Deployment.from_doc(doc)
        for key, doc in self.store.all("autodeploy_rule").items():
            self._autodeploy[key] = AutoDeployRule.from_doc(doc)
        self._next_rule_seq = max((r.seq for r in self._autodeploy.values()), default=0) + 1

    def _emit(self, event: dict) -> None:
        if self.observer is not None:
            self.observer(event)

    # ------------------------------------------------------------------
    # Functions
    # ------------------------------------------------------------------

    def _persist_function(self, function_id: str) -> None:
        versions = self._functions[function_id]
        self.store.put(
            "function", function_id, {"id": function_id, "versions": [f.to_doc() for f in versions]}
        )

    def create_function(
        self,
        name: str,
        source: bytes,
        interpreter_template: str,
        params: list[ParamSpec],
        extension: str = "",
    ) -> FunctionDefinition:
        with self._lock:
            fn = FunctionDefinition(
                id=self.ids.new("fn"),
                name=name,
                source=source,
                interpreter_template=interpreter_template,
                params=params,
                version=1,
                extension=extension,
            )
            fn.validate()
            self._functions[fn.id] = [fn]
            self._persist_function(fn.id)
            return fn

    def update_function(self, function_id: str, **changes) -> FunctionDefinition:
        """Apply partial changes; any accepted update bumps the version."""
        allowed = {"name", "source", "interpreter_template", "params", "extension"}
        unknown = set(changes) - allowed
        if unknown:
            raise ValidationError(f"unknown function fields: {sorted(unknown)}")
        with self._lock:
            current = self.get_function(function_id)
            fn = FunctionDefinition(
                id=current.id,
                name=changes.get("name", current.name),
                source=changes.get("source", current.source),
                interpreter_template=changes.get(
                    "interpreter_template", current.interpreter_template
                ),
                params=changes.get("params", current.params),
                version=current.version + 1,
                extension=changes.get("extension", current.extension),
            )
            fn.validate()
            self._functions[function_id].append(fn)
            self._persist_function(function_id)
            return fn

    def delete_function(self, function_id: str) -> None:
        with self._lock:
            if function_id not in self._functions:
                raise NotFoundError(f"function {function_id} not found")
            running = [
                d
                for d in self._deployments.values()
                if d.function_id == function_id and d.state is DeploymentState.RUNNING
            ]
            if running:
                raise InUseError(
                    f"function {function_id} has {len(running)} running deployment(s)"
                )
            del self._functions[function_id]
            self.store.delete("function", function_id)
            # auto-deploy rules referencing a deleted function would never
            # apply again; drop them with it
            for rule_id in [r.id for r in self._autodeploy.values() if r.function_id == function_id]:
                del self._autodeploy[rule_id]
                self.store.delete("autodeploy_rule", rule_id)

    def get_function(self, function_id: str, version: Optional[int] = None) -> FunctionDefinition:
        with self._lock:
            versions = self._functions.get(function_id)
            if not versions:
                raise NotFoundError(f"function {function_id} not found")
            if version is None:
                return versions[-1]
            for fn in versions:
                if fn.version == version:
                    return fn
            raise NotFoundError(f"function {function_id} has no version {version}")

    def list_functions(self) -> list[FunctionDefinition]:
        with self._lock:
            return [versions[-1] for versions in self._functions.values()]

    def function_by_name(self, name: str) -> Optional[FunctionDefinition]:
        with self._lock:
            for versions in self._functions.values():
                if versions[-1].name == name:
                    return versions[-1]
            return None

    # ------------------------------------------------------------------
    # Devices and discovery
    # ------------------------------------------------------------------

    def register_device(
        self, address: str, capabilities: list[str]
    ) -> tuple[Device, list[Deployment]]:
        """Admit (or re-admit) a device and decide what to deploy on it.

        Returns the device plus freshly created deployments in Requested
        state; the caller hands those to the deployment engine. When no
        auto-deploy rule applies the device lands on the pending list.
        Re-registration at a known address is idempotent: same device id,
        capabilities replaced, live deployments untouched.
        """
        validate_address(address)
        caps = [Capability.parse(c) for c in capabilities]
        with self._lock:
            device = self.device_by_address(address)
            if device is None:
                device = Device(
                    id=self.ids.new("dev"),
                    address=address,
                    capabilities=caps,
                    status=DeviceStatus.PENDING,
                    registered_at=self.clock.now(),
                    transport_credentials=address,
                )
                self._devices[device.id] = device
            else:
                device.capabilities = caps
            self._emit({"event": "register", "device_id": device.id, "address": address})

            new_deps: list[Deployment] = []
            matched_rules: list[AutoDeployRule] = []
            for rule in self._autodeploy_in_creation_order():
                if not rule.matches_tags(device.tags):
                    continue
                versions = self._functions.get(rule.function_id)
                if not versions:
                    continue
                fn = versions[-1]
                try:
                    bindings = resolve_binding_template(rule.binding_template, fn, device)
                except BindingError as exc:
                    # a device missing a referenced attribute does not satisfy
                    # the rule; fall through to the pending branch
                    logger.debug("rule %s skipped for %s: %s", rule.id, device.id, exc)
                    continue
                matched_rules.append(rule)
                if self._has_live_deployment(device.id, fn.id):
                    continue
                dep = Deployment(
                    id=self.ids.new("dep"),
                    device_id=device.id,
                    function_id=fn.id,
                    function_version=fn.version,
                    bindings=bindings,
                    auto=True,
                )
                self._deployments[dep.id] = dep
                self.store.put("deployment", dep.id, dep.to_doc())
                new_deps.append(dep)

            if matched_rules:
                self._emit(
                    {
                        "event": "auto-match",
                        "device_id": device.id,
                        "rules": [r.id for r in matched_rules],
                        "deployments": [d.id for d in new_deps],
                    }
                )
                if device.status is DeviceStatus.UNREACHABLE:
                    # it just spoke to us, so it is reachable again
                    device.status = (
                        DeviceStatus.ACTIVE
                        if self._has_running_deployment(device.id) or device.manually_activated
                        else DeviceStatus.PENDING
                    )
            else:
                if not self._has_running_deployment(device.id) and not device.manually_activated:
                    device.status = DeviceStatus.PENDING
                    self._emit({"event": "pending", "device_id": device.id})
                elif device.status is DeviceStatus.UNREACHABLE:
                    device.status = DeviceStatus.ACTIVE
            self.store.put("device", device.id, device.to_doc())
            return device, new_deps

    def _autodeploy_in_creation_order(self) -> list[AutoDeployRule]:
        return sorted(self._autodeploy.values(), key=lambda r: r.seq)

    def _has_live_deployment(self, device_id: str, function_id: str) -> bool:
        return any(
            d.device_id == device_id and d.function_id == function_id and d.state in LIVE_STATES
            for d in self._deployments.values()
        )

    def _has_running_deployment(self, device_id: str) -> bool:
        return any(
            d.device_id == device_id and d.state is DeploymentState.RUNNING
            for d in self._deployments.values()
        )

    def device_by_address(self, address: str) -> Optional[Device]:
        with self._lock:
            for device in self._devices.values():
                if device.address == address:
                    return device
            return None

    def get_device(self, device_id: str) -> Device:
        with self._lock:
            device = self._devices.get(device_id)
            if device is None:
                raise NotFoundError(f"device {device_id} not found")
            return device

    def has_device(self, device_id: str) -> bool:
        with self._lock:
            return device_id in self._devices

    def list_devices(self, status: Optional[DeviceStatus] = None) -> list[Device]:
        with self._lock:
            devices = sorted(self._devices.values(), key=lambda d: (d.registered_at, d.id))
            if status is None:
                return devices
            return [d for d in devices if d.status is status]

    def list_pending_devices(self) -> list[Device]:
        return self.list_devices(DeviceStatus.PENDING)

    def mark_unreachable(self, device_id: str) -> None:
        with self._lock:
            device = self.get_device(device_id)
            device.status = DeviceStatus.UNREACHABLE
            self.store.put("device", device.id, device.to_doc())

    def note_deployment_running(self, device_id: str, manual: bool) -> None:
        with self._lock:
            device = self.get_device(device_id)
            device.status = DeviceStatus.ACTIVE
            if manual:
                device.manually_activated = True
            self.store.put("device", device.id, device.to_doc())

    def recompute_device_status(self, device_id: str) -> None:
        """Re-derive status after a deployment left the Running state."""
        with self._lock:
            device = self.get_device(device_id)
            if device.status is DeviceStatus.UNREACHABLE:
                return
            if self._has_running_deployment(device_id) or device.manually_activated:
                device.status = DeviceStatus.ACTIVE
            else:
                device.status = DeviceStatus.PENDING
            self.store.put("device", device.id, device.to_doc())

    # ------------------------------------------------------------------
    # Deployments
    # ------------------------------------------------------------------

    def assign_deployment(self, device_id: str, function_id: str, bindings: dict) -> Deployment:
        """Manually bind a function to a device (the admin decision path)."""
        with self._lock:
            device = self.get_device(device_id)
            fn = self.get_function(function_id)
            filled = validate_bindings(fn.params, bindings)
            dep = Deployment(
                id=self.ids.new("dep"),
                device_id=device.id,
                function_id=fn.id,
                function_version=fn.version,
                bindings=filled,
                auto=False,
            )
            self._deployments[dep.id] = dep
            self.store.put("deployment", dep.id, dep.to_doc())
            return dep

    def get_deployment(self, deployment_id: str) -> Deployment:
        with self._lock:
            dep = self._deployments.get(deployment_id)
            if dep is None:
                raise NotFoundError(f"deployment {deployment_id} not found")
            return dep

    def list_deployments(self, device_id: Optional[str] = None) -> list[Deployment]:
        with self._lock:
            deps = list(self._deployments.values())
            if device_id is not None:
                deps = [d for d in deps if d.device_id == device_id]
            return deps

    def transition_deployment(
        self, deployment_id: str, new_state: DeploymentState, reason: Optional[str] = None
    ) -> Deployment:
        with self._lock:
            dep = self.get_deployment(deployment_id)
            dep.transition(new_state, reason)
            self.store.put("deployment", dep.id, dep.to_doc())
            return dep

    def set_deployment_handle(self, deployment_id: str, handle: Optional[str]) -> None:
        with self._lock:
            dep = self.get_deployment(deployment_id)
            dep.handle = handle
            self.store.put("deployment", dep.id, dep.to_doc())

    # ------------------------------------------------------------------
    # Auto-deploy rules
    # ------------------------------------------------------------------

    def create_autodeploy_rule(
        self, capability_predicate: list[str], function_id: str, binding_template: dict
    ) -> AutoDeployRule:
        with self._lock:
            fn = self.get_function(function_id)
            declared = {p.name for p in fn.params}
            for key in binding_template:
                if key not in declared:
                    raise ValidationError(
                        f"binding template references undeclared parameter {key!r}"
                    )
            rule = AutoDeployRule(
                id=self.ids.new("adr"),
                capability_predicate=list(capability_predicate),
                function_id=function_id,
                binding_template=dict(binding_template),
                created_at=self.clock.now(),
                seq=self._next_rule_seq,
            )
            self._autodeploy[rule.id] = rule
            self.store.put("autodeploy_rule", rule.id, rule.to_doc())
            self._next_rule_seq += 1
            return rule

    def list_autodeploy_rules(self) -> list[AutoDeployRule]:
        with self._lock:
            return self._autodeploy_in_creation_order()

    def delete_autodeploy_rule(self, rule_id: str) -> None:
        with self._lock:
            if rule_id not in self._autodeploy:
                raise NotFoundError(f"auto-deploy rule {rule_id} not found")
            del self._autodeploy[rule_id]
            self.store.delete("autodeploy_rule", rule_id)

    def get_autodeploy_rule(self, rule_id: str) -> AutoDeployRule:
        with self._lock:
            rule = self._autodeploy.get(rule_id)
            if rule is None:
                raise NotFoundError(f"auto-deploy rule {rule_id} not found")
            return rule
