"""In-process fleet simulator.

Boots a real control plane (through its HTTP app), N simulated device
agents over the in-memory transport, installs functions and rules, injects
scripted sensor events at virtual-clock times, and collects a deterministic
report: same scenario + seed -> byte-identical report JSON.

Simulated devices attach built-in action handlers derived from their
capabilities: ``camera`` handles ``record`` (writes a dummy artifact of
``duration`` time-units), ``relay`` handles ``relay`` (toggles a state
file). A launched function instance forwards injected sensor events as
telemetry, honoring its ``interval`` binding for push batching.
"""

from __future__ import annotations

import json
import re
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi.testclient import TestClient

from .agent import DeviceAgent
from .api import create_app
from .clock import Clock, VirtualClock, WallClock
from .config import AgentConfig
from .errors import ConfigError, ScenarioError
from .httpclient import RoutingPoster
from .ids import SeededIdFactory
from .plane import ControlPlane
from .sim_report import ScenarioReport
from .storage import MemoryStore
from .transport import InMemoryNetwork, InMemoryTransport, SimProcess, SimulatedDeviceHost

PLANE_URL = "http://plane.sim:8700"
NOTIFIER_URL = "http://notifier.sim/hook"
ADMIN_TOKEN = "sim-admin-token"
BUNDLED_PREFIX = "bundled:"
BUNDLED_SOURCES = {"monitor-function": "monitor_function.py"}

_DEPLOYMENT_ID_RE = re.compile(r"(dep-[0-9a-f]+)")


def bundled_source(name: str) -> bytes:
    filename = BUNDLED_SOURCES.get(name)
    if filename is None:
        raise ScenarioError(f"unknown bundled source {name!r}")
    return resources.files("fnfleet.data").joinpath(filename).read_bytes()


# ---------------------------------------------------------------------------
# Scenario definition
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    devices: list[dict]
    functions: list[dict]
    autodeploy_rules: list[dict]
    interop_rules: list[dict]
    script: list[dict]
    run_until: Optional[float] = None
    assertions: dict = field(default_factory=dict)

    @classmethod
    def from_doc(cls, doc: dict, base_path: Optional[Path] = None) -> "Scenario":
        scenario = cls(
            name=doc.get("name", "scenario"),
            devices=list(doc.get("devices", [])),
            functions=list(doc.get("functions", [])),
            autodeploy_rules=list(doc.get("autodeploy_rules", [])),
            interop_rules=list(doc.get("interop_rules", [])),
            script=list(doc.get("script", [])),
            run_until=doc.get("run_until"),
            assertions=dict(doc.get("assertions", {})),
        )
        names = [d.get("name") for d in scenario.devices]
        if len(names) != len(set(names)):
            raise ScenarioError("device names must be unique")
        last_at = None
        for step in scenario.script:
            if "at" not in step:
                raise ScenarioError(f"script step missing 'at': {step}")
            if last_at is not None and step["at"] < last_at:
                raise ScenarioError("script timestamps must be non-decreasing")
            last_at = step["at"]
            if "device" in step and step["device"] not in names:
                raise ScenarioError(f"script step references unknown device {step['device']!r}")
        for fn in scenario.functions:
            keys = [k for k in ("source", "source_file", "bundled") if k in fn]
            if len(keys) != 1:
                raise ScenarioError(
                    f"function {fn.get('name')!r} needs exactly one of source/source_file/bundled"
                )
            if "source_file" in fn and base_path is not None:
                fn["source_file"] = str((base_path / fn["source_file"]).resolve())
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        try:
            doc = json.loads(path.read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from exc
        return cls.from_doc(doc, base_path=path.parent)

    def function_source(self, fn: dict) -> bytes:
        if "source" in fn:
            return fn["source"].encode("utf-8")
        if "source_file" in fn:
            return Path(fn["source_file"]).read_bytes()
        return bundled_source(fn["bundled"])


# ---------------------------------------------------------------------------
# Simulated device agent
# ---------------------------------------------------------------------------

class SimAgent:
    """One simulated device: agent core + transport host + demo handlers."""

    def __init__(
        self,
        name: str,
        capabilities: list[str],
        network: InMemoryNetwork,
        poster: RoutingPoster,
        clock: Clock,
        base_dir: Path,
        action_port: int,
        plane: ControlPlane,
    ):
        self.name = name
        self.plane = plane
        self.base_dir = base_dir
        self.recordings: list[dict] = []
        self._recording_seq = 0
        config = AgentConfig(
            control_plane_url=PLANE_URL,
            own_host=name,
            action_port=action_port,
            capabilities=list(capabilities),
            base_dir=str(base_dir),
            register_attempts=1,
        )
        self.agent = DeviceAgent(config, poster, clock)
        self.host: SimulatedDeviceHost = network.add_host(config.own_address)
        self.host.on_launch = self._on_launch
        self._poster = poster
        self._route_prefix = f"http://{config.own_address}"
        poster.add_route(self._route_prefix, self._serve_action)
        tags = {c.split(";")[0].strip() for c in capabilities}
        if "camera" in tags:
            self.agent.register_action_handler("record", self._record)
        if "relay" in tags:
            self.agent.register_action_handler("relay", self._relay)

    @property
    def address(self) -> str:
        return self.agent.config.own_address

    @property
    def device_id(self) -> Optional[str]:
        return self.agent.device_id

    def boot(self) -> str:
        return self.agent.boot_register()

    def stop_serving(self) -> None:
        """Drop off the network: action posts now fail to connect."""
        self._poster.remove_route(self._route_prefix)

    def _serve_action(self, url: str, body: dict, headers: dict) -> tuple[int, dict]:
        return self.agent.handle_action(body)

    # -- built-in capability handlers --------------------------------------

    def _record(self, params: dict) -> str:
        duration = int(params.get("duration", 0))
        if duration <= 0:
            raise ValueError(f"record needs a positive duration, got {params.get('duration')!r}")
        self._recording_seq += 1
        name = f"rec-{self._recording_seq:03d}-{duration}u.dat"
        path = self.base_dir / "recordings"
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_bytes(b"".join(b"frame %05d\n" % i for i in range(duration)))
        self.recordings.append({"device": self.name, "duration": duration, "file": name})
        return f"recorded {duration}u"

    def _relay(self, params: dict) -> str:
        state = params.get("state")
        if state not in ("on", "off"):
            raise ValueError(f"relay state must be on/off, got {state!r}")
        (self.base_dir / "relay-state").write_text(state, "utf-8")
        return f"relay {state}"

    # -- launched function behavior -----------------------------------------

    def _on_launch(self, host: SimulatedDeviceHost, proc: SimProcess) -> None:
        # honor the instance's push interval if the launch command carries one
        match = _DEPLOYMENT_ID_RE.search(proc.command)
        if match is None:
            return
        try:
            dep = self.plane.registry.get_deployment(match.group(1))
        except Exception:
            return
        interval = dep.bindings.get("interval")
        if isinstance(interval, (int, float)) and interval > 0:
            self.agent.config.telemetry_interval = float(interval)

    def inject_sensor(self, metric: str, value: float, at: float) -> None:
        """A running monitor function observes the reading and buffers it."""
        for proc in self.host.processes.values():
            if proc.alive:
                self.agent.emit_telemetry(metric, [(at, value)])

    def tick(self, now: float) -> None:
        self.agent.tick(now)


# ---------------------------------------------------------------------------
# Fleet simulation
# ---------------------------------------------------------------------------

class FleetSimulation:
    def __init__(
        self,
        scenario: Scenario,
        seed: int = 0,
        virtual: bool = True,
        workdir: Optional[Path] = None,
    ):
        self.scenario = scenario
        self.seed = seed
        self.virtual = virtual
        self.workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="fnfleet-sim-"))
        self.clock: Clock = VirtualClock() if virtual else WallClock()
        self.ids = SeededIdFactory(seed)
        self.network = InMemoryNetwork()
        self.poster = RoutingPoster()
        self.notifications: list[dict] = []
        self.plane = ControlPlane(
            store=MemoryStore(),
            transport=InMemoryTransport(self.network),
            clock=self.clock,
            ids=self.ids,
            poster=self.poster,
            notifier_url=NOTIFIER_URL,
        )
        self.app = create_app(self.plane, ADMIN_TOKEN)
        self.client = TestClient(self.app)
        self.poster.add_route(PLANE_URL, self._serve_plane)
        self.poster.add_route(NOTIFIER_URL, self._serve_notifier)
        self.agents: list[SimAgent] = []
        self._function_ids: dict[str, str] = {}
        self._device_names: dict[str, str] = {}  # device_id -> scenario name

    # -- in-process http plumbing -------------------------------------------

    def _serve_plane(self, url: str, body: dict, headers: dict) -> tuple[int, dict]:
        path = url[len(PLANE_URL):] or "/"
        resp = self.client.post(path, json=body, headers=headers)
        try:
            doc = resp.json()
        except ValueError:
            doc = {}
        return resp.status_code, doc if isinstance(doc, dict) else {}

    def _serve_notifier(self, url: str, body: dict, headers: dict) -> tuple[int, dict]:
        self.notifications.append(body)
        return 200, {}

    def _admin(self) -> dict:
        return {"Authorization": f"Bearer {ADMIN_TOKEN}"}

    def _post_admin(self, path: str, body: dict, what: str) -> dict:
        resp = self.client.post(path, json=body, headers=self._admin())
        if resp.status_code >= 400:
            raise ScenarioError(f"installing {what} failed ({resp.status_code}): {resp.text}")
        return resp.json()

    # -- install phases ------------------------------------------------------

    def _install_functions(self) -> None:
        for fn in self.scenario.functions:
            body = {
                "name": fn["name"],
                "source": self.scenario.function_source(fn).decode("utf-8"),
                "interpreter_template": fn["interpreter_template"],
                "params": fn.get("params", []),
                "extension": fn.get("extension", ""),
            }
            doc = self._post_admin("/functions", body, f"function {fn['name']!r}")
            self._function_ids[fn["name"]] = doc["id"]

    def _function_id(self, name: str, context: str) -> str:
        fid = self._function_ids.get(name)
        if fid is None:
            raise ScenarioError(f"{context} references unknown function {name!r}")
        return fid

    def _device_id(self, name: str, context: str) -> str:
        for agent in self.agents:
            if agent.name == name and agent.device_id:
                return agent.device_id
        raise ScenarioError(f"{context} references unknown device {name!r}")

    def _install_autodeploy_rules(self) -> None:
        for rule in self.scenario.autodeploy_rules:
            body = {
                "capabilities": rule.get("capabilities", []),
                "function_id": self._function_id(rule["function"], "auto-deploy rule"),
                "bindings": rule.get("bindings", {}),
            }
            self._post_admin("/rules/autodeploy", body, "auto-deploy rule")

    def _boot_agents(self) -> None:
        for index, spec in enumerate(self.scenario.devices):
            agent = SimAgent(
                name=spec["name"],
                capabilities=spec.get("capabilities", []),
                network=self.network,
                poster=self.poster,
                clock=self.clock,
                base_dir=self.workdir / spec["name"],
                action_port=9100 + index,
                plane=self.plane,
            )
            self.agents.append(agent)
            agent.boot()
            self._device_names[agent.device_id] = agent.name

    def _install_interop_rules(self) -> None:
        for rule in self.scenario.interop_rules:
            actions = []
            for action in rule.get("actions", []):
                if "invoke" in action:
                    inv = action["invoke"]
                    actions.append(
                        {
                            "kind": "invoke",
                            "target_device_id": self._device_id(
                                inv["device"], "interop rule action"
                            ),
                            "action_name": inv["action"],
                            "params": inv.get("params", {}),
                        }
                    )
                elif "notify" in action:
                    actions.append({"kind": "notify", "message_template": action["notify"]})
                else:
                    raise ScenarioError(f"interop action must be invoke or notify: {action}")
            body = {
                "device_id": self._device_id(rule["device"], "interop rule condition"),
                "metric": rule["metric"],
                "comparator": rule["comparator"],
                "threshold": rule["threshold"],
                "actions": actions,
                "cooldown": rule.get("cooldown", 0),
            }
            self._post_admin("/rules/interop", body, "interop rule")

    # -- script execution ------------------------------------------------------

    def _advance_to(self, at: float) -> None:
        if isinstance(self.clock, VirtualClock):
            if at > self.clock.now():
                self.clock.advance_to(at)
        else:
            remaining = at - self.clock.now()
            if remaining > 0:
                self.clock.sleep(remaining)

    def _tick_all(self) -> None:
        now = self.clock.now()
        for agent in self.agents:
            agent.tick(now)

    def _agent_by_name(self, name: str) -> SimAgent:
        for agent in self.agents:
            if agent.name == name:
                return agent
        raise ScenarioError(f"unknown device {name!r}")

    def _run_script(self) -> None:
        for step in self.scenario.script:
            self._advance_to(float(step["at"]))
            if "assign" in step:
                assign = step["assign"]
                body = {
                    "device_id": self._device_id(assign["device"], "assignment"),
                    "function_id": self._function_id(assign["function"], "assignment"),
                    "bindings": assign.get("bindings", {}),
                }
                self._post_admin("/deployments", body, "assignment")
            else:
                agent = self._agent_by_name(step["device"])
                agent.inject_sensor(step["metric"], float(step["value"]), float(step["at"]))
            self._tick_all()

    def _drain(self) -> None:
        last_at = max((float(s["at"]) for s in self.scenario.script), default=0.0)
        max_interval = max(
            [a.agent.config.telemetry_interval for a in self.agents], default=10.0
        )
        target = self.scenario.run_until
        if target is None:
            target = last_at + max_interval + 1.0
        self._advance_to(float(target))
        self._tick_all()
        guard = 0
        while any(a.agent.pending_samples() for a in self.agents) and guard < 1000:
            if isinstance(self.clock, VirtualClock):
                self.clock.advance(max_interval)
            else:
                self.clock.sleep(max_interval)
            self._tick_all()
            guard += 1

    # -- reporting ---------------------------------------------------------------

    def _device_name(self, device_id: str) -> str:
        return self._device_names.get(device_id, device_id)

    def _build_report(self) -> ScenarioReport:
        registry = self.plane.registry
        devices = [
            {
                "name": self._device_name(d.id),
                "id": d.id,
                "address": d.address,
                "status": d.status.value,
            }
            for d in registry.list_devices()
        ]
        functions = [
            {"name": f.name, "id": f.id, "version": f.version} for f in registry.list_functions()
        ]
        fn_names = {f["id"]: f["name"] for f in functions}
        deployments = [
            {
                "id": d.id,
                "device": self._device_name(d.device_id),
                "function": fn_names.get(d.function_id, d.function_id),
                "state": d.state.value,
                "bindings": d.bindings,
                "auto": d.auto,
            }
            for d in registry.list_deployments()
        ]
        message_log = [
            [e["event"], self._device_name(e.get("device_id", ""))] for e in self.plane.events
        ]
        outcomes = [
            {
                "rule_id": o.rule_id,
                "action_index": o.action_index,
                "status": o.status,
                "detail": o.detail,
                "fired_at": o.fired_at,
            }
            for o in self.plane.rules.outcomes
        ]
        recordings = [r for agent in self.agents for r in agent.recordings]
        per_deployment_bytes = [
            {
                "deployment": m.deployment_id,
                "payload": m.payload_size,
                "total": m.bytes_sent,
            }
            for m in self.plane.engine.metrics.values()
        ]
        return ScenarioReport(
            name=self.scenario.name,
            seed=self.seed,
            clock="virtual" if self.virtual else "wall",
            devices=devices,
            functions=functions,
            deployments=deployments,
            message_log=message_log,
            rule_firings=len(self.plane.rules.firings),
            notifications=list(self.notifications),
            recordings=recordings,
            outcomes=outcomes,
            telemetry={
                "stored_samples": self.plane.telemetry.sample_count(),
                "dropped_samples": sum(a.agent.dropped_samples for a in self.agents),
            },
            bytes={
                "total_sent": self.network.total_bytes_sent,
                "per_deployment": per_deployment_bytes,
            },
        )

    def _check_assertions(self, report: ScenarioReport) -> list[str]:
        failures: list[str] = []
        expect = self.scenario.assertions

        def check(key: str, actual) -> None:
            if key in expect and expect[key] != actual:
                failures.append(f"{key}: expected {expect[key]!r}, got {actual!r}")

        if "recordings" in expect:
            want = sorted((r["device"], r["duration"]) for r in expect["recordings"])
            got = sorted((r["device"], r["duration"]) for r in report.recordings)
            if want != got:
                failures.append(f"recordings: expected {want!r}, got {got!r}")
        check("notifications", len(report.notifications))
        check("rule_firings", report.rule_firings)
        check("message_log", report.message_log)
        check("stored_samples", report.telemetry["stored_samples"])
        check(
            "running_deployments",
            sum(1 for d in report.deployments if d["state"] == "running"),
        )
        if "pending_devices" in expect:
            got_pending = sorted(d["name"] for d in report.devices if d["status"] == "pending")
            if sorted(expect["pending_devices"]) != got_pending:
                failures.append(
                    f"pending_devices: expected {sorted(expect['pending_devices'])!r}, "
                    f"got {got_pending!r}"
                )
        return failures

    def run(self) -> ScenarioReport:
        self._install_functions()
        self._install_autodeploy_rules()
        self._boot_agents()
        self._install_interop_rules()
        self._run_script()
        self._drain()
        report = self._build_report()
        report.assertion_failures = self._check_assertions(report)
        return report


def run_scenario(
    scenario: Scenario,
    seed: int = 0,
    virtual: bool = True,
    workdir: Optional[Path] = None,
) -> ScenarioReport:
    """Run a scenario; raises ScenarioError (with .report) on unmet assertions."""
    report = FleetSimulation(scenario, seed=seed, virtual=virtual, workdir=workdir).run()
    if report.assertion_failures:
        error = ScenarioError(
            "scenario assertions failed:\n" + "\n".join(report.assertion_failures)
        )
        error.report = report  # type: ignore[attr-defined]
        raise error
    return report
