"""Domain entities for the fleet control plane.

Functions, devices, deployments, auto-deploy rules, interop rules, and
telemetry batches, together with their structural validation. Entities
serialize to plain JSON documents (``to_doc`` / ``from_doc``) so the same
shapes flow through the store, the journal, and the HTTP API.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .errors import BindingError, MalformedBatchError, ValidationError

PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_-]*)\}")
FILE_PLACEHOLDER = "file"

PARAM_KINDS = ("integer", "real", "string", "boolean")

COMPARATORS = ("<", "<=", ">", ">=", "=", "!=")
_COMPARATOR_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "==": "="}


# ---------------------------------------------------------------------------
# Functions
# ---------------------------------------------------------------------------

@dataclass
class ParamSpec:
    """One configurable parameter of a function instance."""

    name: str
    kind: str
    required: bool = False
    default: Any = None

    def validate(self) -> None:
        if not self.name or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_-]*", self.name):
            raise ValidationError(f"bad parameter name: {self.name!r}")
        if self.kind not in PARAM_KINDS:
            raise ValidationError(f"parameter {self.name}: unknown kind {self.kind!r}")
        if self.required and self.default is not None:
            raise ValidationError(f"parameter {self.name}: required params cannot carry a default")
        if self.default is not None:
            self.default = check_value_kind(self.name, self.kind, self.default)

    def to_doc(self) -> dict:
        doc: dict = {"name": self.name, "kind": self.kind, "required": self.required}
        if self.default is not None:
            doc["default"] = self.default
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ParamSpec":
        return cls(
            name=doc["name"],
            kind=doc["kind"],
            required=bool(doc.get("required", False)),
            default=doc.get("default"),
        )


def check_value_kind(name: str, kind: str, value: Any) -> Any:
    """Check a bound value against a parameter kind, normalizing numerics.

    bool is deliberately rejected for numeric kinds even though it is an
    int subclass in Python.
    """
    if kind == "integer":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise BindingError(f"parameter {name}: expected integer, got {value!r}")
        if isinstance(value, float) and not value.is_integer():
            raise BindingError(f"parameter {name}: expected integer, got {value!r}")
        return int(value)
    if kind == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise BindingError(f"parameter {name}: expected real, got {value!r}")
        return float(value)
    if kind == "boolean":
        if not isinstance(value, bool):
            raise BindingError(f"parameter {name}: expected boolean, got {value!r}")
        return value
    if kind == "string":
        if not isinstance(value, str):
            raise BindingError(f"parameter {name}: expected string, got {value!r}")
        return value
    raise ValidationError(f"unknown parameter kind {kind!r}")


def coerce_attr_value(name: str, kind: str, raw: str) -> Any:
    """Convert a capability attribute (always a string) to a param kind."""
    try:
        if kind == "integer":
            return int(raw)
        if kind == "real":
            return float(raw)
        if kind == "boolean":
            low = raw.strip().lower()
            if low in ("true", "1", "on", "yes"):
                return True
            if low in ("false", "0", "off", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise BindingError(
            f"parameter {name}: capability attribute {raw!r} is not a valid {kind}"
        ) from None


@dataclass
class FunctionDefinition:
    """A script, its launch command template, and its parameter schema."""

    id: str
    name: str
    source: bytes
    interpreter_template: str
    params: list[ParamSpec] = field(default_factory=list)
    version: int = 1
    extension: str = ""

    def validate(self) -> None:
        if not self.name:
            raise ValidationError("function name must be non-empty")
        if not isinstance(self.source, bytes):
            raise ValidationError("function source must be bytes")
        seen: set[str] = set()
        for p in self.params:
            p.validate()
            if p.name in seen:
                raise ValidationError(f"duplicate parameter name: {p.name}")
            seen.add(p.name)
        placeholders = PLACEHOLDER_RE.findall(self.interpreter_template)
        file_slots = [p for p in placeholders if p == FILE_PLACEHOLDER]
        if len(file_slots) != 1:
            raise ValidationError(
                "interpreter template must contain exactly one {file} placeholder"
            )
        declared = {p.name for p in self.params}
        for token in placeholders:
            if token != FILE_PLACEHOLDER and token not in declared:
                raise ValidationError(f"undeclared placeholder {{{token}}} in template")
        if self.extension and not self.extension.startswith("."):
            raise ValidationError("extension must start with '.' when given")

    def param(self, name: str) -> Optional[ParamSpec]:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "source": self.source.decode("utf-8"),
            "interpreter_template": self.interpreter_template,
            "params": [p.to_doc() for p in self.params],
            "version": self.version,
            "extension": self.extension,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FunctionDefinition":
        return cls(
            id=doc["id"],
            name=doc["name"],
            source=doc["source"].encode("utf-8"),
            interpreter_template=doc["interpreter_template"],
            params=[ParamSpec.from_doc(p) for p in doc.get("params", [])],
            version=int(doc.get("version", 1)),
            extension=doc.get("extension", ""),
        )


def validate_bindings(params: list[ParamSpec], bindings: dict) -> dict:
    """Check bindings against the specs and fill defaults for unbound params.

    Returns the effective bindings. Unknown names, missing required params,
    and kind mismatches raise BindingError.
    """
    known = {p.name for p in params}
    for name in bindings:
        if name not in known:
            raise BindingError(f"unknown parameter {name!r}")
    filled: dict = {}
    for p in params:
        if p.name in bindings:
            filled[p.name] = check_value_kind(p.name, p.kind, bindings[p.name])
        elif p.required:
            raise BindingError(f"missing required parameter {p.name!r}")
        elif p.default is not None:
            filled[p.name] = p.default
    return filled


# ---------------------------------------------------------------------------
# Devices
# ---------------------------------------------------------------------------

@dataclass
class Capability:
    """A declared device feature: a tag with optional key=value attributes.

    Wire form is a single string, e.g. ``pir-motion;pir-port=4``.
    """

    tag: str
    attrs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, raw: str) -> "Capability":
        parts = [p.strip() for p in raw.split(";") if p.strip()]
        if not parts:
            raise ValidationError(f"empty capability string: {raw!r}")
        tag = parts[0]
        attrs: dict[str, str] = {}
        for part in parts[1:]:
            if "=" not in part:
                raise ValidationError(f"capability attribute {part!r} is not key=value")
            key, value = part.split("=", 1)
            attrs[key.strip()] = value.strip()
        return cls(tag=tag, attrs=attrs)

    def render(self) -> str:
        if not self.attrs:
            return self.tag
        return ";".join([self.tag] + [f"{k}={v}" for k, v in self.attrs.items()])


class DeviceStatus(str, Enum):
    PENDING = "pending"
    ACTIVE = "active"
    UNREACHABLE = "unreachable"


_ADDRESS_RE = re.compile(r"^[A-Za-z0-9_.\-]+:\d{1,5}$")


def validate_address(address: str) -> str:
    """Device addresses are ``host:port`` endpoints."""
    if not isinstance(address, str) or not _ADDRESS_RE.match(address):
        raise ValidationError(f"malformed device address: {address!r}")
    port = int(address.rsplit(":", 1)[1])
    if not 0 < port < 65536:
        raise ValidationError(f"malformed device address: {address!r}")
    return address


@dataclass
class Device:
    """A registered fleet member."""

    id: str
    address: str
    capabilities: list[Capability] = field(default_factory=list)
    status: DeviceStatus = DeviceStatus.PENDING
    registered_at: float = 0.0
    transport_credentials: str = ""
    manually_activated: bool = False

    @property
    def tags(self) -> set[str]:
        return {c.tag for c in self.capabilities}

    def attr(self, name: str) -> Optional[str]:
        for cap in self.capabilities:
            if name in cap.attrs:
                return cap.attrs[name]
        return None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "address": self.address,
            "capabilities": [c.render() for c in self.capabilities],
            "status": self.status.value,
            "registered_at": self.registered_at,
            "transport_credentials": self.transport_credentials,
            "manually_activated": self.manually_activated,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Device":
        return cls(
            id=doc["id"],
            address=doc["address"],
            capabilities=[Capability.parse(c) for c in doc.get("capabilities", [])],
            status=DeviceStatus(doc["status"]),
            registered_at=float(doc.get("registered_at", 0.0)),
            transport_credentials=doc.get("transport_credentials", ""),
            manually_activated=bool(doc.get("manually_activated", False)),
        )


# ---------------------------------------------------------------------------
# Deployments
# ---------------------------------------------------------------------------

class DeploymentState(str, Enum):
    REQUESTED = "requested"
    TRANSFERRED = "transferred"
    RUNNING = "running"
    FAILED = "failed"
    STOPPED = "stopped"


LEGAL_TRANSITIONS: frozenset[tuple[DeploymentState, DeploymentState]] = frozenset(
    {
        (DeploymentState.REQUESTED, DeploymentState.TRANSFERRED),
        (DeploymentState.TRANSFERRED, DeploymentState.RUNNING),
        (DeploymentState.REQUESTED, DeploymentState.FAILED),
        (DeploymentState.TRANSFERRED, DeploymentState.FAILED),
        (DeploymentState.RUNNING, DeploymentState.STOPPED),
        (DeploymentState.RUNNING, DeploymentState.FAILED),
    }
)


@dataclass
class Deployment:
    """One configured instance of a function version on one device."""

    id: str
    device_id: str
    function_id: str
    function_version: int
    bindings: dict = field(default_factory=dict)
    state: DeploymentState = DeploymentState.REQUESTED
    handle: Optional[str] = None
    failure_reason: Optional[str] = None
    auto: bool = False

    def transition(self, new_state: DeploymentState, reason: Optional[str] = None) -> None:
        from .errors import IllegalStateError

        if (self.state, new_state) not in LEGAL_TRANSITIONS:
            raise IllegalStateError(
                f"deployment {self.id}: illegal transition {self.state.value} -> {new_state.value}"
            )
        self.state = new_state
        if new_state is not DeploymentState.RUNNING:
            self.handle = None
        if new_state is DeploymentState.FAILED:
            self.failure_reason = reason or "unknown"

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "device_id": self.device_id,
            "function_id": self.function_id,
            "function_version": self.function_version,
            "bindings": dict(self.bindings),
            "state": self.state.value,
            "handle": self.handle,
            "failure_reason": self.failure_reason,
            "auto": self.auto,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Deployment":
        return cls(
            id=doc["id"],
            device_id=doc["device_id"],
            function_id=doc["function_id"],
            function_version=int(doc["function_version"]),
            bindings=dict(doc.get("bindings", {})),
            state=DeploymentState(doc["state"]),
            handle=doc.get("handle"),
            failure_reason=doc.get("failure_reason"),
            auto=bool(doc.get("auto", False)),
        )


# ---------------------------------------------------------------------------
# Auto-deploy rules
# ---------------------------------------------------------------------------

@dataclass
class AutoDeployRule:
    """Capability predicate -> function with a binding template.

    Template values are either literals or ``{"attr": "<name>"}`` references
    resolved from the registering device's capability attributes.
    """

    id: str
    capability_predicate: list[str]
    function_id: str
    binding_template: dict = field(default_factory=dict)
    created_at: float = 0.0
    seq: int = 0  # strict creation order; timestamps may tie

    def matches_tags(self, tags: set[str]) -> bool:
        return set(self.capability_predicate).issubset(tags)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "capability_predicate": list(self.capability_predicate),
            "function_id": self.function_id,
            "binding_template": dict(self.binding_template),
            "created_at": self.created_at,
            "seq": self.seq,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AutoDeployRule":
        return cls(
            id=doc["id"],
            capability_predicate=list(doc.get("capability_predicate", [])),
            function_id=doc["function_id"],
            binding_template=dict(doc.get("binding_template", {})),
            created_at=float(doc.get("created_at", 0.0)),
            seq=int(doc.get("seq", 0)),
        )


def is_attr_ref(value: Any) -> bool:
    return isinstance(value, dict) and set(value.keys()) == {"attr"}


def resolve_binding_template(
    template: dict, function: FunctionDefinition, device: Device
) -> dict:
    """Resolve attr references against a device and validate the result.

    Raises BindingError when the device lacks a referenced attribute or the
    resolved bindings do not validate; callers treat that as 'rule does not
    apply to this device'.
    """
    bindings: dict = {}
    for name, value in template.items():
        spec = function.param(name)
        if spec is None:
            raise BindingError(f"template references undeclared parameter {name!r}")
        if is_attr_ref(value):
            raw = device.attr(value["attr"])
            if raw is None:
                raise BindingError(
                    f"device {device.id} lacks capability attribute {value['attr']!r}"
                )
            bindings[name] = coerce_attr_value(name, spec.kind, raw)
        else:
            bindings[name] = value
    return validate_bindings(function.params, bindings)


# ---------------------------------------------------------------------------
# Interop rules and actions
# ---------------------------------------------------------------------------

NOTIFY_PLACEHOLDERS = {"device", "metric", "value", "timestamp"}


@dataclass
class DeviceInvoke:
    """POST an action to a device agent's action endpoint."""

    target_device_id: str
    action_name: str
    params: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "kind": "invoke",
            "target_device_id": self.target_device_id,
            "action_name": self.action_name,
            "params": dict(self.params),
        }


@dataclass
class Notify:
    """POST a rendered message to the configured notifier webhook."""

    message_template: str

    def validate(self) -> None:
        for token in PLACEHOLDER_RE.findall(self.message_template):
            if token not in NOTIFY_PLACEHOLDERS:
                raise ValidationError(
                    f"notification template placeholder {{{token}}} not allowed"
                )

    def to_doc(self) -> dict:
        return {"kind": "notify", "message_template": self.message_template}


Action = DeviceInvoke | Notify


def action_from_doc(doc: dict) -> Action:
    kind = doc.get("kind")
    if kind == "invoke":
        return DeviceInvoke(
            target_device_id=doc["target_device_id"],
            action_name=doc["action_name"],
            params=dict(doc.get("params", {})),
        )
    if kind == "notify":
        return Notify(message_template=doc["message_template"])
    raise ValidationError(f"unknown action kind {kind!r}")


def normalize_comparator(op: str) -> str:
    op = _COMPARATOR_ALIASES.get(op, op)
    if op not in COMPARATORS:
        raise ValidationError(f"unknown comparator {op!r}")
    return op


@dataclass
class InteropRule:
    """Condition over one device's telemetry -> ordered list of actions."""

    id: str
    source_device_id: str
    metric: str
    comparator: str
    threshold: float
    actions: list[Action] = field(default_factory=list)
    cooldown: float = 0.0
    created_at: float = 0.0
    seq: int = 0  # strict creation order; timestamps may tie
    last_fired: Optional[float] = None

    def validate(self) -> None:
        if not self.metric:
            raise ValidationError("rule metric must be non-empty")
        self.comparator = normalize_comparator(self.comparator)
        if not isinstance(self.threshold, (int, float)) or isinstance(self.threshold, bool):
            raise ValidationError("rule threshold must be numeric")
        if not self.actions:
            raise ValidationError("rule must declare at least one action")
        if self.cooldown < 0:
            raise ValidationError("rule cooldown must be >= 0")
        for action in self.actions:
            if isinstance(action, Notify):
                action.validate()

    def condition_holds(self, value: float) -> bool:
        t = self.threshold
        if self.comparator == "<":
            return value < t
        if self.comparator == "<=":
            return value <= t
        if self.comparator == ">":
            return value > t
        if self.comparator == ">=":
            return value >= t
        if self.comparator == "=":
            return value == t
        return value != t

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "source_device_id": self.source_device_id,
            "metric": self.metric,
            "comparator": self.comparator,
            "threshold": self.threshold,
            "actions": [a.to_doc() for a in self.actions],
            "cooldown": self.cooldown,
            "created_at": self.created_at,
            "seq": self.seq,
            "last_fired": self.last_fired,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "InteropRule":
        return cls(
            id=doc["id"],
            source_device_id=doc["source_device_id"],
            metric=doc["metric"],
            comparator=doc["comparator"],
            threshold=doc["threshold"],
            actions=[action_from_doc(a) for a in doc.get("actions", [])],
            cooldown=float(doc.get("cooldown", 0.0)),
            created_at=float(doc.get("created_at", 0.0)),
            seq=int(doc.get("seq", 0)),
            last_fired=doc.get("last_fired"),
        )


@dataclass
class ActionOutcome:
    """Append-only record of one dispatched action."""

    rule_id: str
    action_index: int
    status: str  # "delivered" | "failed"
    detail: str
    fired_at: float

    def to_doc(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "action_index": self.action_index,
            "status": self.status,
            "detail": self.detail,
            "fired_at": self.fired_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ActionOutcome":
        return cls(
            rule_id=doc["rule_id"],
            action_index=int(doc["action_index"]),
            status=doc["status"],
            detail=doc.get("detail", ""),
            fired_at=float(doc["fired_at"]),
        )


# ---------------------------------------------------------------------------
# Telemetry
# ---------------------------------------------------------------------------

@dataclass
class TelemetryBatch:
    """Timestamped samples for one metric pushed by a running function."""

    device_id: str
    metric: str
    samples: list[tuple[float, float]] = field(default_factory=list)
    received_at: float = 0.0

    def validate(self) -> None:
        if not self.metric:
            raise MalformedBatchError("batch metric must be non-empty")
        previous = None
        for ts, value in self.samples:
            if isinstance(ts, bool) or not isinstance(ts, (int, float)):
                raise MalformedBatchError(f"sample timestamp {ts!r} is not numeric")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MalformedBatchError(f"sample value {value!r} is not numeric")
            if previous is not None and ts < previous:
                raise MalformedBatchError("sample timestamps must be non-decreasing")
            previous = ts

    def to_doc(self) -> dict:
        return {
            "device_id": self.device_id,
            "metric": self.metric,
            "samples": [[float(t), float(v)] for t, v in self.samples],
            "received_at": self.received_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TelemetryBatch":
        return cls(
            device_id=doc["device_id"],
            metric=doc["metric"],
            samples=[(float(t), float(v)) for t, v in doc.get("samples", [])],
            received_at=float(doc.get("received_at", 0.0)),
        )
