"""Transport sessions: the connect/transfer/exec channel to a device.

Production uses SSH (see sshtransport); tests and the simulator use the
in-memory implementation here. The in-memory network meters every byte a
session sends so deployment cost claims can be asserted exactly:

    open()            OPEN_FRAME_BYTES
    write_file(p, b)  OP_FRAME_BYTES + len(p) + len(b)
    exec_detached(c)  OP_FRAME_BYTES + len(c)
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

from .errors import LaunchError, SessionClosedError, TransportError

OPEN_FRAME_BYTES = 32
OP_FRAME_BYTES = 16


class TransportSession:
    """One open channel to one device."""

    peer: str

    @property
    def bytes_sent(self) -> int:
        raise NotImplementedError

    def write_file(self, path: str, payload: bytes) -> None:
        raise NotImplementedError

    def read_file(self, path: str) -> bytes:
        raise NotImplementedError

    def exec_detached(self, command: str) -> str:
        """Start the command detached; returns an opaque process handle."""
        raise NotImplementedError

    def is_alive(self, handle: str) -> bool:
        raise NotImplementedError

    def kill(self, handle: str) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class Transport:
    """Session factory; credentials_ref is resolved per implementation."""

    def open(self, address: str, credentials_ref: str) -> TransportSession:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# In-memory simulated transport
# ---------------------------------------------------------------------------

class SimProcess:
    def __init__(self, handle: str, command: str):
        self.handle = handle
        self.command = command
        self.alive = True


class SimulatedDeviceHost:
    """Device-side endpoint of the in-memory transport.

    Holds a file tree and a process table. An optional launch callback lets
    the simulator attach in-process behavior to each started command.
    """

    def __init__(self, address: str):
        self.address = address
        self.online = True
        self.files: dict[str, bytes] = {}
        self.processes: dict[str, SimProcess] = {}
        self.fail_next_exec = False
        self.on_launch: Optional[Callable[["SimulatedDeviceHost", SimProcess], None]] = None
        self.on_kill: Optional[Callable[["SimulatedDeviceHost", SimProcess], None]] = None
        self._counter = 0
        self._lock = threading.Lock()

    def execute(self, command: str) -> str:
        with self._lock:
            if self.fail_next_exec:
                self.fail_next_exec = False
                raise LaunchError(f"{self.address}: command exited with status 1")
            # a real device would fail on a missing script file; catch
            # transfer/exec ordering bugs the same way
            tokens = command.split()
            referenced = [t for t in tokens if t.startswith("/")]
            if referenced and not any(t in self.files for t in referenced):
                raise LaunchError(f"{self.address}: no such file: {referenced[0]}")
            self._counter += 1
            proc = SimProcess(handle=f"pid-{self._counter}", command=command)
            self.processes[proc.handle] = proc
        if self.on_launch is not None:
            self.on_launch(self, proc)
        return proc.handle

    def kill(self, handle: str) -> None:
        proc = self.processes.get(handle)
        if proc is not None and proc.alive:
            proc.alive = False
            if self.on_kill is not None:
                self.on_kill(self, proc)

    def is_alive(self, handle: str) -> bool:
        proc = self.processes.get(handle)
        return bool(proc and proc.alive)

    def crash(self, handle: str) -> None:
        """Test helper: simulate the remote process dying on its own."""
        proc = self.processes.get(handle)
        if proc is not None:
            proc.alive = False

    def running_commands(self) -> list[str]:
        return [p.command for p in self.processes.values() if p.alive]


class InMemoryNetwork:
    """Address space of simulated device hosts plus global byte counters."""

    def __init__(self) -> None:
        self.hosts: dict[str, SimulatedDeviceHost] = {}
        self.total_bytes_sent = 0
        self._lock = threading.Lock()

    def add_host(self, address: str) -> SimulatedDeviceHost:
        host = SimulatedDeviceHost(address)
        self.hosts[address] = host
        return host

    def count(self, n: int) -> None:
        with self._lock:
            self.total_bytes_sent += n


class InMemorySession(TransportSession):
    def __init__(self, network: InMemoryNetwork, host: SimulatedDeviceHost):
        self.peer = host.address
        self._network = network
        self._host = host
        self._bytes_sent = OPEN_FRAME_BYTES
        self._closed = False
        network.count(OPEN_FRAME_BYTES)

    @property
    def bytes_sent(self) -> int:
        return self._bytes_sent

    def _check_open(self) -> None:
        if self._closed:
            raise SessionClosedError(f"session to {self.peer} is closed")

    def _count(self, n: int) -> None:
        self._bytes_sent += n
        self._network.count(n)

    def write_file(self, path: str, payload: bytes) -> None:
        self._check_open()
        self._count(OP_FRAME_BYTES + len(path.encode("utf-8")) + len(payload))
        self._host.files[path] = bytes(payload)

    def read_file(self, path: str) -> bytes:
        self._check_open()
        if path not in self._host.files:
            raise TransportError(f"{self.peer}: no such file: {path}")
        return self._host.files[path]

    def exec_detached(self, command: str) -> str:
        self._check_open()
        self._count(OP_FRAME_BYTES + len(command.encode("utf-8")))
        return self._host.execute(command)

    def is_alive(self, handle: str) -> bool:
        self._check_open()
        return self._host.is_alive(handle)

    def kill(self, handle: str) -> None:
        self._check_open()
        self._host.kill(handle)

    def close(self) -> None:
        self._closed = True


class InMemoryTransport(Transport):
    def __init__(self, network: InMemoryNetwork):
        self.network = network

    def open(self, address: str, credentials_ref: str) -> InMemorySession:
        host = self.network.hosts.get(address)
        if host is None:
            raise TransportError(f"no route to {address}")
        if not host.online:
            raise TransportError(f"connection refused by {address}")
        return InMemorySession(self.network, host)
