"""fnfleet: lightweight FaaS orchestration for IoT device fleets."""

__version__ = "0.1.0"
