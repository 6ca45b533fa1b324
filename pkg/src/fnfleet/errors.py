"""Exception hierarchy shared by all fnfleet components."""


class FnFleetError(Exception):
    """Base class for every error raised by fnfleet."""


class ValidationError(FnFleetError):
    """An entity or request violates a structural invariant."""


class BindingError(ValidationError):
    """Parameter bindings do not satisfy a function's parameter specs."""


class MalformedBatchError(ValidationError):
    """A telemetry batch violates its invariants (ordering, empty metric)."""


class UnsafeValueError(ValidationError):
    """A string binding contains whitespace or shell metacharacters."""


class NotFoundError(FnFleetError):
    """Referenced entity does not exist."""


class UnknownDeviceError(NotFoundError):
    """Telemetry or an action referenced an unregistered device."""


class InUseError(FnFleetError):
    """Entity cannot be deleted while running deployments reference it."""


class IllegalStateError(FnFleetError):
    """Operation precondition on an entity's state machine failed."""


class UnresolvedPlaceholderError(FnFleetError):
    """A command template placeholder survived substitution."""


class TransportError(FnFleetError):
    """Transport session could not connect, authenticate, or transfer."""


class SessionClosedError(TransportError):
    """Operation attempted on a closed transport session."""


class LaunchError(FnFleetError):
    """Remote command exited immediately with a nonzero status."""


class UnknownActionError(NotFoundError):
    """No handler is registered for the requested action name."""


class RegistrationExhaustedError(FnFleetError):
    """Agent gave up registering after its retry budget."""


class ConfigError(FnFleetError):
    """Configuration file missing, unreadable, or invalid."""


class ScenarioError(FnFleetError):
    """A simulator scenario failed validation or an assertion."""
