"""Device-side runtime: boot registration, action endpoint, telemetry push.

The agent registers with the control plane at boot (with bounded
exponential backoff), serves POST /actions for interop rules, and buffers
telemetry in a bounded FIFO that survives control-plane outages by
dropping oldest samples once full.
"""

from __future__ import annotations

import json
import logging
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Optional

from .clock import Clock, WallClock
from .config import AgentConfig
from .errors import RegistrationExhaustedError
from .httpclient import HttpPoster, HttpPostError

logger = logging.getLogger(__name__)

ActionHandler = Callable[[dict], object]


class DeviceAgent:
    def __init__(self, config: AgentConfig, poster: HttpPoster, clock: Optional[Clock] = None):
        self.config = config
        self.poster = poster
        self.clock = clock if clock is not None else WallClock()
        self.device_id: Optional[str] = None
        self._handlers: dict[str, ActionHandler] = {}
        self._handler_lock = threading.Lock()
        # bounded FIFO of (metric, ts, value); oldest dropped on overflow
        self._buffer: deque[tuple[str, float, float]] = deque()
        self._buffer_lock = threading.Lock()
        self.dropped_samples = 0
        self._last_flush = self.clock.now()

    # ------------------------------------------------------------------
    # Registration
    # ------------------------------------------------------------------

    def boot_register(self) -> str:
        """Register with the control plane, retrying with exponential backoff.

        Delays are base * factor^k capped at the configured ceiling; after
        the attempt budget is spent RegistrationExhaustedError is raised.
        """
        cfg = self.config
        delay = cfg.backoff_base
        last_error = "no attempts made"
        for attempt in range(cfg.register_attempts):
            if attempt > 0:
                self.clock.sleep(min(delay, cfg.backoff_cap))
                delay *= cfg.backoff_factor
            try:
                status, body = self.poster.post(
                    f"{cfg.control_plane_url}/devices",
                    {"address": cfg.own_address, "capabilities": list(cfg.capabilities)},
                )
            except HttpPostError as exc:
                last_error = str(exc)
                logger.warning("registration attempt %d failed: %s", attempt + 1, exc)
                continue
            if 200 <= status < 300 and "device_id" in body:
                self.device_id = body["device_id"]
                self._persist_device_id()
                logger.info("registered as %s (%s)", self.device_id, body.get("status"))
                return self.device_id
            last_error = f"control plane returned {status}"
            logger.warning("registration attempt %d rejected: %s", attempt + 1, last_error)
        raise RegistrationExhaustedError(
            f"gave up after {cfg.register_attempts} attempt(s): {last_error}"
        )

    def _persist_device_id(self) -> None:
        try:
            base = Path(self.config.base_dir)
            base.mkdir(parents=True, exist_ok=True)
            (base / "device-id").write_text(self.device_id or "", "utf-8")
        except OSError as exc:  # non-fatal: id is re-derived on re-registration
            logger.warning("could not persist device id: %s", exc)

    # ------------------------------------------------------------------
    # Actions
    # ------------------------------------------------------------------

    def register_action_handler(self, name: str, handler: ActionHandler) -> None:
        self._handlers[name] = handler

    def handle_action(self, body: dict) -> tuple[int, dict]:
        """Route an action request to its handler.

        Handler failures are reported in the response and never bring the
        agent down; handler execution is serialized.
        """
        name = body.get("action")
        handler = self._handlers.get(name)
        if handler is None:
            return 404, {"status": "error", "detail": f"unknown action {name!r}"}
        params = body.get("params") or {}
        try:
            with self._handler_lock:
                result = handler(params)
        except Exception as exc:  # noqa: BLE001 - isolation contract
            logger.exception("action %s handler failed", name)
            return 500, {"status": "error", "detail": f"handler failed: {exc}"}
        return 200, {"status": "ok", "detail": "" if result is None else str(result)}

    # ------------------------------------------------------------------
    # Telemetry
    # ------------------------------------------------------------------

    def emit_telemetry(self, metric: str, samples: list[tuple[float, float]]) -> None:
        with self._buffer_lock:
            for ts, value in samples:
                self._buffer.append((metric, float(ts), float(value)))
                if len(self._buffer) > self.config.buffer_cap:
                    self._buffer.popleft()
                    self.dropped_samples += 1

    def pending_samples(self) -> int:
        with self._buffer_lock:
            return len(self._buffer)

    def flush_telemetry(self) -> int:
        """Push buffered samples as one batch per metric, oldest first.

        On a push failure the unflushed samples stay buffered for the next
        interval. Returns the number of samples delivered.
        """
        if self.device_id is None:
            return 0
        with self._buffer_lock:
            entries = list(self._buffer)
        if not entries:
            return 0
        groups: dict[str, list[tuple[float, float]]] = {}
        for metric, ts, value in entries:
            groups.setdefault(metric, []).append((ts, value))
        flushed = 0
        for metric, samples in groups.items():
            try:
                status, _ = self.poster.post(
                    f"{self.config.control_plane_url}/telemetry",
                    {
                        "device_id": self.device_id,
                        "metric": metric,
                        "samples": [[ts, value] for ts, value in samples],
                    },
                )
            except HttpPostError as exc:
                logger.warning("telemetry push failed, keeping %d samples: %s", len(samples), exc)
                break
            if not 200 <= status < 300:
                logger.warning("telemetry push rejected with %d", status)
                break
            with self._buffer_lock:
                # drop exactly the flushed entries: the oldest len(samples)
                # entries of this metric (concurrent emits append behind them)
                to_remove = len(samples)
                kept: deque[tuple[str, float, float]] = deque()
                for entry in self._buffer:
                    if to_remove and entry[0] == metric:
                        to_remove -= 1
                        continue
                    kept.append(entry)
                self._buffer = kept
            flushed += len(samples)
        return flushed

    def tick(self, now: Optional[float] = None) -> int:
        """Flush telemetry when the push interval has elapsed."""
        now = self.clock.now() if now is None else now
        if now - self._last_flush < self.config.telemetry_interval:
            return 0
        self._last_flush = now
        return self.flush_telemetry()


class _ActionRequestHandler(BaseHTTPRequestHandler):
    agent: DeviceAgent  # set by server factory

    def do_POST(self):  # noqa: N802 - stdlib naming
        if self.path != "/actions":
            self._respond(404, {"status": "error", "detail": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._respond(400, {"status": "error", "detail": "bad request body"})
            return
        code, doc = self.server.agent.handle_action(body)  # type: ignore[attr-defined]
        self._respond(code, doc)

    def _respond(self, code: int, doc: dict) -> None:
        payload = json.dumps(doc).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):  # quiet by default
        logger.debug("action server: " + fmt, *args)


class AgentActionServer:
    """HTTP wrapper around DeviceAgent.handle_action (production mode)."""

    def __init__(self, agent: DeviceAgent, host: str = "", port: Optional[int] = None):
        self.agent = agent
        bind_host = host if host else "0.0.0.0"
        bind_port = port if port is not None else agent.config.action_port
        self._server = ThreadingHTTPServer((bind_host, bind_port), _ActionRequestHandler)
        self._server.agent = agent  # type: ignore[attr-defined]
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


def run_agent(config: AgentConfig, poster: Optional[HttpPoster] = None) -> None:
    """Foreground agent loop: register, serve actions, push telemetry."""
    from .httpclient import HttpxPoster

    agent = DeviceAgent(config, poster if poster is not None else HttpxPoster())
    agent.boot_register()
    server = AgentActionServer(agent)
    server.start()
    logger.info("agent serving actions on :%d", server.port)
    try:
        while True:
            agent.clock.sleep(min(config.telemetry_interval, 1.0))
            agent.tick()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
