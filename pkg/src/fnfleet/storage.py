"""Entity stores: in-memory for tests, append-only journal for production.

Journal file format, per record:

    u32 LE payload length | payload
    payload = u64 LE sequence number | u8 entity kind | JSON body

The JSON body is ``{"op": "put"|"del", "key": <id>, "doc": <entity>}``.
A snapshot file holds a JSON map of all live entities plus the last applied
sequence number; compaction writes a snapshot and truncates the journal.
A torn final record (partial write at crash time) is ignored on replay.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from pathlib import Path
from typing import Iterator, Optional

from .errors import ConfigError

KIND_BYTES = {
    "function": 1,
    "device": 2,
    "deployment": 3,
    "autodeploy_rule": 4,
    "interop_rule": 5,
    "telemetry": 6,
    "outcome": 7,
}
BYTE_KINDS = {v: k for k, v in KIND_BYTES.items()}

_LEN = struct.Struct("<I")
_SEQ = struct.Struct("<Q")

JOURNAL_NAME = "journal.log"
SNAPSHOT_NAME = "snapshot.json"


class Store:
    """Keyed JSON-document store, one namespace per entity kind.

    ``all()`` preserves insertion order, which downstream code relies on for
    creation-ordered listings after a reload.
    """

    def put(self, kind: str, key: str, doc: dict) -> None:
        raise NotImplementedError

    def delete(self, kind: str, key: str) -> None:
        raise NotImplementedError

    def get(self, kind: str, key: str) -> Optional[dict]:
        raise NotImplementedError

    def all(self, kind: str) -> dict[str, dict]:
        raise NotImplementedError

    def flush(self) -> None:
        raise NotImplementedError

    def compact(self) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class MemoryStore(Store):
    """Volatile store used by unit tests and benchmarks."""

    def __init__(self) -> None:
        self._data: dict[str, dict[str, dict]] = {k: {} for k in KIND_BYTES}
        self._lock = threading.RLock()

    def put(self, kind: str, key: str, doc: dict) -> None:
        with self._lock:
            bucket = self._data[kind]
            bucket.pop(key, None)  # move re-puts to the end, mirroring journal replay
            bucket[key] = json.loads(json.dumps(doc))

    def delete(self, kind: str, key: str) -> None:
        with self._lock:
            self._data[kind].pop(key, None)

    def get(self, kind: str, key: str) -> Optional[dict]:
        with self._lock:
            doc = self._data[kind].get(key)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def all(self, kind: str) -> dict[str, dict]:
        with self._lock:
            return {k: json.loads(json.dumps(v)) for k, v in self._data[kind].items()}

    def flush(self) -> None:
        pass

    def compact(self) -> None:
        pass

    def close(self) -> None:
        pass


class JournalStore(Store):
    """Durable store: snapshot plus append-only journal in one directory."""

    def __init__(self, root: str | os.PathLike, compact_every: int = 10000):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-probe"
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"storage path {self.root} is not writable: {exc}") from exc
        self._lock = threading.RLock()
        self._data: dict[str, dict[str, dict]] = {k: {} for k in KIND_BYTES}
        self._seq = 0
        self._records_since_compact = 0
        self._compact_every = compact_every
        self._load()
        self._journal = open(self.journal_path, "ab")

    @property
    def journal_path(self) -> Path:
        return self.root / JOURNAL_NAME

    @property
    def snapshot_path(self) -> Path:
        return self.root / SNAPSHOT_NAME

    # -- load path --------------------------------------------------------

    def _load(self) -> None:
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text("utf-8"))
            self._seq = int(snap["seq"])
            for kind, bucket in snap.get("entities", {}).items():
                self._data[kind] = dict(bucket)
        if self.journal_path.exists():
            with open(self.journal_path, "rb") as fh:
                for seq, kind, body in _iter_records(fh):
                    if seq <= self._seq:
                        continue
                    self._apply(kind, body)
                    self._seq = seq

    def _apply(self, kind: str, body: dict) -> None:
        key = body["key"]
        if body["op"] == "put":
            bucket = self._data[kind]
            bucket.pop(key, None)
            bucket[key] = body["doc"]
        else:
            self._data[kind].pop(key, None)

    # -- write path -------------------------------------------------------

    def _append(self, kind: str, body: dict) -> None:
        self._seq += 1
        payload = _SEQ.pack(self._seq) + bytes([KIND_BYTES[kind]]) + json.dumps(
            body, separators=(",", ":")
        ).encode("utf-8")
        self._journal.write(_LEN.pack(len(payload)) + payload)
        self._journal.flush()
        self._records_since_compact += 1
        if self._records_since_compact >= self._compact_every:
            self.compact()

    def put(self, kind: str, key: str, doc: dict) -> None:
        with self._lock:
            doc = json.loads(json.dumps(doc))
            self._apply(kind, {"op": "put", "key": key, "doc": doc})
            self._append(kind, {"op": "put", "key": key, "doc": doc})

    def delete(self, kind: str, key: str) -> None:
        with self._lock:
            self._apply(kind, {"op": "del", "key": key})
            self._append(kind, {"op": "del", "key": key})

    def get(self, kind: str, key: str) -> Optional[dict]:
        with self._lock:
            doc = self._data[kind].get(key)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def all(self, kind: str) -> dict[str, dict]:
        with self._lock:
            return {k: json.loads(json.dumps(v)) for k, v in self._data[kind].items()}

    def flush(self) -> None:
        with self._lock:
            self._journal.flush()
            os.fsync(self._journal.fileno())

    def compact(self) -> None:
        """Write an atomic snapshot of live state and truncate the journal."""
        with self._lock:
            snap = {"seq": self._seq, "entities": self._data}
            tmp = self.snapshot_path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(snap, fh)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.snapshot_path)
            self._journal.close()
            self._journal = open(self.journal_path, "wb")
            self._records_since_compact = 0

    def close(self) -> None:
        with self._lock:
            self.compact()
            self._journal.close()


def _iter_records(fh) -> Iterator[tuple[int, str, dict]]:
    """Yield (seq, kind, body) records, stopping at a torn tail."""
    while True:
        header = fh.read(_LEN.size)
        if len(header) < _LEN.size:
            return
        (length,) = _LEN.unpack(header)
        payload = fh.read(length)
        if len(payload) < length or length < _SEQ.size + 1:
            return
        (seq,) = _SEQ.unpack(payload[: _SEQ.size])
        kind_byte = payload[_SEQ.size]
        kind = BYTE_KINDS.get(kind_byte)
        if kind is None:
            return
        try:
            body = json.loads(payload[_SEQ.size + 1 :].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return
        yield seq, kind, body
