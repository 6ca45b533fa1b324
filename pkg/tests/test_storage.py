"""Journal store: append, replay, snapshot compaction, crash behavior."""

import json
import struct

import pytest

from fnfleet.errors import ConfigError
from fnfleet.storage import JournalStore, MemoryStore


def fill(store):
    store.put("device", "dev-1", {"id": "dev-1", "address": "a:1"})
    store.put("function", "fn-1", {"id": "fn-1", "versions": [{"version": 1}]})
    store.put("device", "dev-2", {"id": "dev-2", "address": "b:2"})
    store.put("device", "dev-1", {"id": "dev-1", "address": "a:1", "status": "active"})
    store.delete("device", "dev-2")


def dump(store):
    return {kind: store.all(kind) for kind in ("device", "function", "deployment")}


class TestMemoryStore:
    def test_round_trip_and_isolation(self):
        store = MemoryStore()
        doc = {"id": "x", "nested": {"a": 1}}
        store.put("device", "x", doc)
        doc["nested"]["a"] = 2  # caller mutation must not leak in
        fetched = store.get("device", "x")
        assert fetched["nested"]["a"] == 1
        fetched["nested"]["a"] = 3  # nor out
        assert store.get("device", "x")["nested"]["a"] == 1

    def test_delete(self):
        store = MemoryStore()
        store.put("device", "x", {"id": "x"})
        store.delete("device", "x")
        assert store.get("device", "x") is None


class TestJournalStore:
    def test_reopen_replays_identical_state(self, tmp_path):
        store = JournalStore(tmp_path)
        fill(store)
        before = dump(store)
        store.flush()
        del store  # "kill": no close, no compaction

        reopened = JournalStore(tmp_path)
        assert dump(reopened) == before

    def test_snapshot_compaction_preserves_state(self, tmp_path):
        store = JournalStore(tmp_path)
        fill(store)
        before = dump(store)
        store.compact()
        assert store.journal_path.stat().st_size == 0
        assert dump(store) == before
        del store

        reopened = JournalStore(tmp_path)
        assert dump(reopened) == before

    def test_writes_after_snapshot_replayed_on_top(self, tmp_path):
        store = JournalStore(tmp_path)
        fill(store)
        store.compact()
        store.put("device", "dev-3", {"id": "dev-3"})
        before = dump(store)
        del store
        reopened = JournalStore(tmp_path)
        assert dump(reopened) == before

    def test_torn_tail_record_ignored(self, tmp_path):
        store = JournalStore(tmp_path)
        fill(store)
        before = dump(store)
        store.close()

        # append garbage: a length header promising more bytes than exist
        with open(tmp_path / "journal.log", "ab") as fh:
            fh.write(struct.pack("<I", 1000) + b"partial")
        reopened = JournalStore(tmp_path)
        assert dump(reopened) == before

    def test_auto_compaction_threshold(self, tmp_path):
        store = JournalStore(tmp_path, compact_every=10)
        for i in range(25):
            store.put("device", f"d{i}", {"id": f"d{i}"})
        assert store.snapshot_path.exists()
        del store
        reopened = JournalStore(tmp_path)
        assert len(reopened.all("device")) == 25

    def test_snapshot_format_is_json_map_with_seq(self, tmp_path):
        store = JournalStore(tmp_path)
        fill(store)
        store.compact()
        snap = json.loads(store.snapshot_path.read_text())
        assert set(snap) == {"seq", "entities"}
        assert snap["entities"]["device"]["dev-1"]["status"] == "active"
        assert isinstance(snap["seq"], int)

    def test_record_encoding(self, tmp_path):
        store = JournalStore(tmp_path)
        store.put("device", "dev-1", {"id": "dev-1"})
        store.flush()
        raw = store.journal_path.read_bytes()
        (length,) = struct.unpack_from("<I", raw, 0)
        payload = raw[4 : 4 + length]
        (seq,) = struct.unpack_from("<Q", payload, 0)
        kind = payload[8]
        body = json.loads(payload[9:])
        assert seq == 1 and kind == 2  # device kind byte
        assert body == {"op": "put", "key": "dev-1", "doc": {"id": "dev-1"}}

    def test_unwritable_path_raises_config_error(self):
        with pytest.raises(ConfigError):
            JournalStore("/proc/fnfleet-nope")
