"""Telemetry ingestion, range queries, and the ingest/evaluate pipeline."""

import random

import pytest

from fnfleet.errors import MalformedBatchError, UnknownDeviceError, ValidationError

from .oracles import linear_scan_range


@pytest.fixture
def devices(fleet):
    fleet.add_host("10.0.0.1:9000")
    dev_a, _ = fleet.plane.register_device("10.0.0.1:9000", [])
    dev_b, _ = fleet.plane.register_device("10.0.0.2:9000", [])
    return dev_a, dev_b


class TestIngest:
    def test_round_trip_in_order(self, fleet, devices):
        dev_a, _ = devices
        samples = [(float(t), 1.0) for t in range(5)]
        stored = fleet.plane.ingest_telemetry(dev_a.id, "motion", samples)
        assert stored == 5
        got = fleet.plane.telemetry.query(dev_a.id, "motion", float("-inf"), float("inf"))
        assert got == samples

    def test_empty_batch_is_noop_success(self, fleet, devices):
        dev_a, _ = devices
        assert fleet.plane.ingest_telemetry(dev_a.id, "motion", []) == 0
        assert fleet.plane.telemetry.sample_count() == 0

    def test_unknown_device(self, fleet):
        with pytest.raises(UnknownDeviceError):
            fleet.plane.ingest_telemetry("dev-ghost", "motion", [(1.0, 1.0)])

    def test_malformed_batch_rejected_and_not_stored(self, fleet, devices):
        dev_a, _ = devices
        with pytest.raises(MalformedBatchError):
            fleet.plane.ingest_telemetry(dev_a.id, "motion", [(2.0, 1.0), (1.0, 1.0)])
        assert fleet.plane.telemetry.sample_count() == 0

    def test_storage_completeness(self, fleet, devices):
        # stored count equals the sum of accepted batch sizes, no silent drops
        dev_a, dev_b = devices
        rng = random.Random(5)
        total = 0
        for _ in range(20):
            n = rng.randint(0, 10)
            base = rng.uniform(0, 100)
            samples = [(base + i, rng.random()) for i in range(n)]
            device = rng.choice([dev_a, dev_b])
            metric = rng.choice(["motion", "temp"])
            total += fleet.plane.ingest_telemetry(device.id, metric, samples)
        assert fleet.plane.telemetry.sample_count() == total


class TestQuery:
    def test_subrange_is_half_open(self, fleet, devices):
        dev_a, _ = devices
        samples = [(float(t), float(t) * 10) for t in range(5)]
        fleet.plane.ingest_telemetry(dev_a.id, "motion", samples)
        # frozen from the linear-scan oracle: start <= t < end over t=0..4
        assert fleet.plane.telemetry.query(dev_a.id, "motion", 1.0, 4.0) == [
            (1.0, 10.0),
            (2.0, 20.0),
            (3.0, 30.0),
        ]

    def test_empty_instant_range(self, fleet, devices):
        dev_a, _ = devices
        fleet.plane.ingest_telemetry(dev_a.id, "motion", [(1.0, 1.0)])
        assert fleet.plane.telemetry.query(dev_a.id, "motion", 2.0, 2.0) == []

    def test_inverted_range_rejected(self, fleet, devices):
        dev_a, _ = devices
        with pytest.raises(ValidationError):
            fleet.plane.telemetry.query(dev_a.id, "motion", 5.0, 1.0)

    def test_unknown_metric_is_empty(self, fleet, devices):
        dev_a, _ = devices
        assert fleet.plane.telemetry.query(dev_a.id, "nope", 0.0, 10.0) == []

    def test_random_ranges_match_linear_scan_oracle(self, fleet, devices):
        dev_a, _ = devices
        rng = random.Random(11)
        samples = sorted((rng.uniform(0, 50), rng.random()) for _ in range(80))
        fleet.plane.ingest_telemetry(dev_a.id, "motion", samples)
        for _ in range(50):
            bounds = sorted((rng.uniform(-5, 55), rng.uniform(-5, 55)))
            got = fleet.plane.telemetry.query(dev_a.id, "motion", *bounds)
            assert got == linear_scan_range(samples, *bounds)

    def test_cross_batch_ordering(self, fleet, devices):
        # a late batch with earlier timestamps still queries in time order
        dev_a, _ = devices
        fleet.plane.ingest_telemetry(dev_a.id, "motion", [(10.0, 1.0), (20.0, 2.0)])
        fleet.plane.ingest_telemetry(dev_a.id, "motion", [(5.0, 0.5), (15.0, 1.5)])
        got = fleet.plane.telemetry.query(dev_a.id, "motion", float("-inf"), float("inf"))
        assert [t for t, _ in got] == [5.0, 10.0, 15.0, 20.0]
