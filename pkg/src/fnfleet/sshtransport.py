"""SSH transport: drives the OpenSSH client binaries (ssh/scp).

The device address is ``host:port`` of the agent's action endpoint; SSH
connection details come from the credentials file, a JSON map of device
address to either a private-key path or an object::

    {"10.0.0.7:9000": "/etc/fnfleet/keys/dev7",
     "10.0.0.8:9000": {"key": "/etc/fnfleet/keys/dev8", "user": "pi", "port": 22}}

Detached execution uses nohup and records the remote PID as the process
handle; liveness is probed with ``kill -0``.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .errors import ConfigError, LaunchError, SessionClosedError, TransportError
from .transport import OPEN_FRAME_BYTES, OP_FRAME_BYTES, Transport, TransportSession

# returncode, stdout, stderr
RunResult = tuple[int, str, str]
Runner = Callable[[list[str]], RunResult]


def _subprocess_runner(timeout: float) -> Runner:
    def run(argv: list[str]) -> RunResult:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        return proc.returncode, proc.stdout, proc.stderr

    return run


@dataclass
class SshCredential:
    key_path: str
    user: str = "root"
    port: int = 22


class CredentialStore:
    """Maps device addresses to SSH credentials."""

    def __init__(self, entries: dict[str, SshCredential]):
        self._entries = entries

    @classmethod
    def load(cls, path: str) -> "CredentialStore":
        try:
            raw = json.loads(Path(path).read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read credentials file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"credentials file {path} is not valid JSON: {exc}") from exc
        entries: dict[str, SshCredential] = {}
        for address, value in raw.items():
            if isinstance(value, str):
                entries[address] = SshCredential(key_path=value)
            elif isinstance(value, dict):
                entries[address] = SshCredential(
                    key_path=value["key"],
                    user=value.get("user", "root"),
                    port=int(value.get("port", 22)),
                )
            else:
                raise ConfigError(f"credentials entry for {address} must be path or object")
        return cls(entries)

    def resolve(self, address: str) -> SshCredential:
        cred = self._entries.get(address)
        if cred is None:
            raise TransportError(f"no credentials for {address}")
        return cred


class SshSession(TransportSession):
    def __init__(self, peer: str, cred: SshCredential, runner: Runner):
        self.peer = peer
        self._cred = cred
        self._runner = runner
        self._closed = False
        self._bytes_sent = OPEN_FRAME_BYTES
        host = peer.rsplit(":", 1)[0]
        self._target = f"{cred.user}@{host}"
        code, _, err = self._run_ssh("true")
        if code != 0:
            raise TransportError(f"ssh connect to {self._target} failed: {err.strip()}")

    @property
    def bytes_sent(self) -> int:
        return self._bytes_sent

    def _check_open(self) -> None:
        if self._closed:
            raise SessionClosedError(f"session to {self.peer} is closed")

    def _base_options(self) -> list[str]:
        return [
            "-o", "BatchMode=yes",
            "-o", "StrictHostKeyChecking=accept-new",
            "-o", "ConnectTimeout=10",
            "-i", self._cred.key_path,
        ]

    def ssh_argv(self, remote_command: str) -> list[str]:
        return ["ssh", *self._base_options(), "-p", str(self._cred.port), self._target, remote_command]

    def scp_argv(self, local: str, remote: str) -> list[str]:
        return ["scp", *self._base_options(), "-P", str(self._cred.port), local, f"{self._target}:{remote}"]

    def _run_ssh(self, remote_command: str) -> RunResult:
        return self._runner(self.ssh_argv(remote_command))

    def write_file(self, path: str, payload: bytes) -> None:
        self._check_open()
        with tempfile.NamedTemporaryFile(delete=False) as tmp:
            tmp.write(payload)
            local = tmp.name
        try:
            code, _, _ = self._run_ssh(f"mkdir -p {shlex.quote(str(Path(path).parent))}")
            if code != 0:
                raise TransportError(f"{self.peer}: cannot create remote directory for {path}")
            code, _, err = self._runner(self.scp_argv(local, path))
            if code != 0:
                raise TransportError(f"{self.peer}: transfer of {path} failed: {err.strip()}")
            self._bytes_sent += OP_FRAME_BYTES + len(path.encode()) + len(payload)
        finally:
            Path(local).unlink(missing_ok=True)

    def read_file(self, path: str) -> bytes:
        self._check_open()
        code, out, err = self._run_ssh(f"cat {shlex.quote(path)}")
        if code != 0:
            raise TransportError(f"{self.peer}: read of {path} failed: {err.strip()}")
        return out.encode("utf-8")

    def exec_detached(self, command: str) -> str:
        self._check_open()
        wrapped = f"nohup {command} >/dev/null 2>&1 & echo $!"
        code, out, err = self._run_ssh(wrapped)
        if code != 0:
            raise LaunchError(f"{self.peer}: launch failed: {err.strip()}")
        pid = out.strip().splitlines()[-1] if out.strip() else ""
        if not pid.isdigit():
            raise LaunchError(f"{self.peer}: launch returned no pid: {out.strip()!r}")
        self._bytes_sent += OP_FRAME_BYTES + len(command.encode())
        # immediate-exit check: a script that dies at startup is a failed launch
        if not self.is_alive(pid):
            raise LaunchError(f"{self.peer}: command exited immediately")
        return pid

    def is_alive(self, handle: str) -> bool:
        self._check_open()
        code, _, _ = self._run_ssh(f"kill -0 {shlex.quote(handle)}")
        return code == 0

    def kill(self, handle: str) -> None:
        self._check_open()
        self._run_ssh(f"kill {shlex.quote(handle)}")

    def close(self) -> None:
        self._closed = True


class SshTransport(Transport):
    def __init__(
        self,
        credentials: CredentialStore,
        runner: Optional[Runner] = None,
        command_timeout: float = 30.0,
    ):
        self.credentials = credentials
        self._runner = runner if runner is not None else _subprocess_runner(command_timeout)

    def open(self, address: str, credentials_ref: str) -> SshSession:
        cred = self.credentials.resolve(credentials_ref or address)
        return SshSession(address, cred, self._runner)
