"""Configuration loading for the control plane service and the device agent.

Files are JSON (TOML also accepted on interpreters that ship tomllib).
Environment variables FNFLEET_LISTEN, FNFLEET_STORAGE, FNFLEET_ADMIN_TOKEN,
and FNFLEET_NOTIFIER_URL override the service file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .model import validate_address

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    tomllib = None

ENV_OVERRIDES = {
    "FNFLEET_LISTEN": "listen",
    "FNFLEET_STORAGE": "storage",
    "FNFLEET_ADMIN_TOKEN": "admin_token",
    "FNFLEET_NOTIFIER_URL": "notifier_url",
}


def _read_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text("utf-8")
    if path.suffix == ".toml":
        if tomllib is None:
            raise ConfigError("TOML config requires Python 3.11+; use JSON instead")
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class ApiConfig:
    listen: str = "127.0.0.1:8700"
    storage: str = "./fnfleet-data"
    credentials_file: str = ""
    notifier_url: str = ""
    admin_token: str = ""
    transport: str = "ssh"  # "ssh" | "simulated"

    def validate(self) -> None:
        try:
            validate_address(self.listen)
        except Exception as exc:
            raise ConfigError(f"bad listen address {self.listen!r}: {exc}") from exc
        if self.transport not in ("ssh", "simulated"):
            raise ConfigError(f"unknown transport {self.transport!r}")
        if not self.admin_token:
            raise ConfigError("admin_token must be set")


def load_api_config(path: str | Path) -> ApiConfig:
    doc = _read_config_file(path)
    known = {f for f in ApiConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ApiConfig(**doc)
    for env, attr in ENV_OVERRIDES.items():
        value = os.environ.get(env)
        if value:
            setattr(cfg, attr, value)
    cfg.validate()
    return cfg


@dataclass
class AgentConfig:
    control_plane_url: str = "http://127.0.0.1:8700"
    own_host: str = "127.0.0.1"
    action_port: int = 9000
    capabilities: list[str] = field(default_factory=list)
    base_dir: str = "./fnfleet-agent"
    telemetry_interval: float = 10.0
    buffer_cap: int = 1000
    register_attempts: int = 8
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    backoff_cap: float = 60.0

    @property
    def own_address(self) -> str:
        return f"{self.own_host}:{self.action_port}"

    def validate(self) -> None:
        if not self.control_plane_url.startswith(("http://", "https://")):
            raise ConfigError(f"bad control plane URL {self.control_plane_url!r}")
        try:
            validate_address(self.own_address)
        except Exception as exc:
            raise ConfigError(f"bad agent address {self.own_address!r}: {exc}") from exc
        if self.buffer_cap < 1:
            raise ConfigError("buffer_cap must be >= 1")
        Path(self.base_dir).mkdir(parents=True, exist_ok=True)


def load_agent_config(path: str | Path) -> AgentConfig:
    doc = _read_config_file(path)
    known = {f for f in AgentConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = AgentConfig(**doc)
    cfg.validate()
    return cfg
