"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import csv
import itertools
import json
import random
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from fnfleet.cli import main
from fnfleet.clock import VirtualClock
from fnfleet.ids import SeededIdFactory
from fnfleet.model import COMPARATORS, DeviceInvoke, Notify, ParamSpec
from fnfleet.plane import ControlPlane
from fnfleet.sim import FleetSimulation, Scenario
from fnfleet.storage import JournalStore
from fnfleet.transport import InMemoryNetwork, InMemoryTransport

from .conftest import Fleet
from .oracles import brute_force_fired

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@contextmanager
def criterion(name: str):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


def test_smart_home_end_to_end(capsys):
    """Motion event -> 2 recordings (5 units each), 1 notification, no
    extra firings inside the cooldown window; CLI exit 0 in < 10 s."""
    with criterion("smart-home end-to-end"):
        started = time.monotonic()
        code = main(
            ["scenario", "run", str(SCENARIOS / "smart-home.json"), "--virtual-clock"]
        )
        elapsed = time.monotonic() - started
        out = capsys.readouterr().out
        assert code == 0
        report = json.loads(out)
        recordings = sorted((r["device"], r["duration"]) for r in report["recordings"])
        assert recordings == [("RB1", 5), ("RB2", 5)]
        assert len(report["notifications"]) == 1
        # three motion samples inside the 5-unit cooldown produced one firing
        assert report["rule_firings"] == 1
        assert report["telemetry"]["stored_samples"] == 3
        assert elapsed < 10.0


def test_payload_economy():
    """One deployment of the bundled 1,024-byte script costs exactly 1,024
    payload bytes plus < 512 bytes framing, and finishes in < 1 s."""
    with criterion("payload economy (1.0 KB function)"):
        fleet = Fleet()
        from fnfleet.sim import bundled_source

        source = bundled_source("monitor-function")
        assert len(source) == 1024
        fn = fleet.plane.registry.create_function(
            "monitor",
            source,
            "python {file} {port} {interval}",
            [ParamSpec("port", "integer", required=True),
             ParamSpec("interval", "integer", default=10)],
            extension=".py",
        )
        fleet.add_host("10.0.0.1:9000")
        device, _ = fleet.plane.register_device("10.0.0.1:9000", [])
        started = time.monotonic()
        dep = fleet.plane.assign_deployment(device.id, fn.id, {"port": 4})
        elapsed = time.monotonic() - started
        assert dep.state.value == "running"
        metrics = fleet.plane.engine.metrics[dep.id]
        assert metrics.payload_size == 1024
        framing = metrics.bytes_sent - metrics.payload_size
        assert 0 < framing < 512
        assert fleet.network.total_bytes_sent == metrics.bytes_sent
        assert elapsed < 1.0


def test_discovery_sequence_conformance(capsys):
    """Fresh-device message log is exactly register -> (auto-match | pending)
    -> transfer -> execute, for both discovery branches."""
    with criterion("discovery sequence conformance (both branches)"):
        code = main(
            ["scenario", "run", str(SCENARIOS / "discovery-auto.json"), "--virtual-clock"]
        )
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["message_log"] == [
            ["register", "RB1"], ["auto-match", "RB1"], ["transfer", "RB1"], ["execute", "RB1"]
        ]
        code = main(
            ["scenario", "run", str(SCENARIOS / "discovery-pending.json"), "--virtual-clock"]
        )
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["message_log"] == [
            ["register", "RB2"], ["pending", "RB2"], ["transfer", "RB2"], ["execute", "RB2"]
        ]


def test_scale_100_deployments(tmp_path, capsys):
    """100 deployments over 10 devices: zero failures, memory delta
    reported per deployment, and exact linear byte scaling."""
    with criterion("scale: 100 deployments, 10 devices"):
        out = tmp_path / "bench.csv"
        code = main(["bench", "deploy", "--n", "100", "--devices", "10", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 100
        assert all(r["state"] == "running" for r in rows)
        assert all("rss_delta_bytes" in r for r in rows)
        totals = [int(r["total_bytes"]) for r in rows]
        assert len(set(totals)) == 1  # identical cost per deployment
        assert sum(totals) == 100 * totals[0]  # exact linearity
        summary = capsys.readouterr().out
        assert "failures: 0" in summary
        assert "RSS delta" in summary


def test_rule_engine_matches_brute_force_oracle():
    """Engine firing trace is identical to the independent brute-force
    evaluator across rule counts 1-5, all 6 comparators, 50-event streams;
    the whole sweep finishes in < 5 s."""
    with criterion("rule-engine oracle equivalence"):
        started = time.monotonic()
        rng = random.Random(2024)
        for n_rules, comparator in itertools.product(range(1, 6), COMPARATORS):
            fleet = Fleet()
            device_ids = {}
            for i, name in enumerate(["d0", "d1"]):
                dev, _ = fleet.plane.register_device(f"10.4.0.{i + 1}:9000", [])
                device_ids[name] = dev.id
            specs = []
            rule_index = {}
            for i in range(n_rules):
                spec = {
                    "device": f"d{i % 2}",
                    "metric": ["motion", "temp"][i % 2],
                    "comparator": comparator,
                    "threshold": rng.choice([0, 1, 2]),
                    "n_actions": 1 + i % 2,
                    "cooldown": [0, 2, 5][i % 3],
                }
                specs.append(spec)
                rule = fleet.plane.rules.create_rule(
                    device_ids[spec["device"]], spec["metric"], spec["comparator"],
                    spec["threshold"], [Notify("x")] * spec["n_actions"],
                    cooldown=spec["cooldown"],
                )
                rule_index[rule.id] = i
            events = [
                {
                    "device": rng.choice(["d0", "d1"]),
                    "metric": rng.choice(["motion", "temp"]),
                    "value": rng.choice([0, 1, 2, 3]),
                    "t": float(t),
                }
                for t in range(50)
            ]
            trace = []
            for ei, event in enumerate(events):
                before = len(fleet.plane.rules.outcomes)
                fleet.plane.rules.evaluate(
                    device_ids[event["device"]], event["metric"], event["value"], event["t"]
                )
                for outcome in fleet.plane.rules.outcomes[before:]:
                    trace.append((ei, rule_index[outcome.rule_id], outcome.action_index))
            assert trace == brute_force_fired(specs, events), (n_rules, comparator)
        assert time.monotonic() - started < 5.0


def test_durability_across_restart(tmp_path):
    """3 functions, 2 rules, 2 devices, 100 samples; kill the control plane
    and replay the journal: every entity and sample survives bit-identically."""
    with criterion("durability: journal replay after kill"):
        storage = tmp_path / "plane-data"
        network = InMemoryNetwork()
        network.add_host("10.0.0.1:9000")
        network.add_host("10.0.0.2:9000")

        def build_plane():
            return ControlPlane(
                store=JournalStore(storage),
                transport=InMemoryTransport(network),
                clock=VirtualClock(),
                ids=SeededIdFactory(0),
            )

        plane = build_plane()
        functions = [
            plane.registry.create_function(
                f"fn-{i}", f"print({i})\n".encode(), "python {file} {port}",
                [ParamSpec("port", "integer", required=True)], extension=".py",
            )
            for i in range(3)
        ]
        plane.registry.create_autodeploy_rule(["camera"], functions[0].id, {"port": 1})
        dev_a, deps = plane.register_device("10.0.0.1:9000", ["camera"])
        dev_b, _ = plane.register_device("10.0.0.2:9000", [])
        assert len(deps) == 1 and deps[0].state.value == "running"
        plane.rules.create_rule(
            dev_a.id, "motion", ">=", 1,
            [DeviceInvoke(dev_b.id, "record", {"duration": 5})], cooldown=5,
        )
        for batch_start in range(0, 100, 25):
            plane.ingest_telemetry(
                dev_a.id, "motion",
                [(float(batch_start + i), float(i % 2)) for i in range(25)],
            )
        assert plane.telemetry.sample_count() == 100

        kinds = ("function", "device", "deployment", "autodeploy_rule", "interop_rule", "telemetry")
        before = {kind: plane.store.all(kind) for kind in kinds}
        samples_before = plane.telemetry.query(dev_a.id, "motion", float("-inf"), float("inf"))
        del plane  # kill: no close(), no snapshot; journal alone must suffice

        revived = build_plane()
        after = {kind: revived.store.all(kind) for kind in kinds}
        assert after == before  # bit-identical serialized entities
        assert revived.telemetry.sample_count() == 100
        assert (
            revived.telemetry.query(dev_a.id, "motion", float("-inf"), float("inf"))
            == samples_before
        )
        states = {d.id: d.state for d in revived.registry.list_deployments()}
        assert states == {deps[0].id: deps[0].state}


def test_agent_restart_idempotency():
    """5 agent restarts leave exactly one device record and do not touch
    running deployments."""
    with criterion("agent boot idempotency"):
        scenario = Scenario.load(SCENARIOS / "smart-home.json")
        sim = FleetSimulation(scenario, seed=0, virtual=True)
        report = sim.run()
        assert report.ok
        before = {d.id: d.state for d in sim.plane.registry.list_deployments()}
        rb1 = sim.agents[0]
        device_id = rb1.device_id
        for _ in range(5):
            assert rb1.boot() == device_id  # same record every time
        assert len(sim.plane.registry.list_devices()) == 2
        after = {d.id: d.state for d in sim.plane.registry.list_deployments()}
        assert after == before
        assert sim.plane.registry.get_device(device_id).status.value == "active"
