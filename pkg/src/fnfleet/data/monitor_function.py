#!/usr/bin/env python
"""Poll a sensor port and push readings to the control plane."""
import json
import sys
import time
import urllib.request

ENDPOINT = "http://fnfleet-plane:8700/telemetry"
METRIC = "motion"


def read_sensor(port):
    # GPIO stub: swap in the board lib on hardware
    return 0


def push(dev, samples):
    body = json.dumps({"device_id": dev, "metric": METRIC,
                       "samples": samples}).encode()
    req = urllib.request.Request(
        ENDPOINT, data=body, headers={"Content-Type": "application/json"})
    urllib.request.urlopen(req, timeout=10)


def main():
    port = int(sys.argv[1])
    interval = int(sys.argv[2]) if len(sys.argv) > 2 else 10
    with open("/opt/fnfleet/device-id") as fh:
        dev = fh.read().strip()
    pending = []
    while True:
        pending.append([time.time(), read_sensor(port)])
        if len(pending) >= interval:
            push(dev, pending)
            pending = []
        time.sleep(1)


if __name__ == "__main__":
    main()
#===
