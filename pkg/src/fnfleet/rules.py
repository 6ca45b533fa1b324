"""Condition-action interoperability rules: storage, evaluation, dispatch.

Rules are evaluated on ingest, in creation order, against one telemetry
sample at a time. Dispatch failures become ActionOutcome records and never
propagate into the ingest path.
"""

from __future__ import annotations

import logging
import threading
from datetime import datetime, timezone
from typing import Optional

from .clock import Clock, WallClock
from .errors import NotFoundError
from .httpclient import HttpPoster, HttpPostError
from .ids import IdFactory
from .model import Action, ActionOutcome, DeviceInvoke, InteropRule, Notify
from .registry import Registry
from .storage import Store

logger = logging.getLogger(__name__)


def iso_utc(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")


def _format_value(value: float) -> str:
    return f"{value:g}"


class ActionDispatcher:
    """Delivers actions: device invokes to agent endpoints, notifications
    to the configured webhook."""

    def __init__(
        self,
        registry: Registry,
        poster: HttpPoster,
        notifier_url: str = "",
        clock: Optional[Clock] = None,
    ):
        self.registry = registry
        self.poster = poster
        self.notifier_url = notifier_url
        self.clock = clock if clock is not None else WallClock()

    def dispatch(
        self, action: Action, rule_id: str, action_index: int, context: dict
    ) -> ActionOutcome:
        fired_at = self.clock.now()
        try:
            if isinstance(action, DeviceInvoke):
                status, detail = self._invoke(action)
            else:
                status, detail = self._notify(action, rule_id, context, fired_at)
        except HttpPostError as exc:
            status, detail = "failed", str(exc)
        except NotFoundError as exc:
            status, detail = "failed", str(exc)
        return ActionOutcome(
            rule_id=rule_id,
            action_index=action_index,
            status=status,
            detail=detail,
            fired_at=fired_at,
        )

    def _invoke(self, action: DeviceInvoke) -> tuple[str, str]:
        device = self.registry.get_device(action.target_device_id)
        url = f"http://{device.address}/actions"
        code, body = self.poster.post(
            url, {"action": action.action_name, "params": action.params}
        )
        if 200 <= code < 300:
            return "delivered", body.get("detail", "")
        return "failed", f"agent returned {code}: {body.get('detail', '')}"

    def _notify(
        self, action: Notify, rule_id: str, context: dict, fired_at: float
    ) -> tuple[str, str]:
        text = action.message_template
        replacements = {
            "device": str(context.get("device", "")),
            "metric": str(context.get("metric", "")),
            "value": _format_value(context.get("value", 0.0)),
            "timestamp": iso_utc(context.get("timestamp", 0.0)),
        }
        for key, value in replacements.items():
            text = text.replace("{" + key + "}", value)
        if not self.notifier_url:
            return "failed", "no notifier webhook configured"
        code, _ = self.poster.post(
            self.notifier_url,
            {"text": text, "fired_at": iso_utc(fired_at), "rule_id": rule_id},
        )
        if 200 <= code < 300:
            return "delivered", text
        return "failed", f"webhook returned {code}"


class RuleEngine:
    def __init__(
        self,
        store: Store,
        registry: Registry,
        dispatcher: ActionDispatcher,
        clock: Optional[Clock] = None,
        ids: Optional[IdFactory] = None,
    ):
        self.store = store
        self.registry = registry
        self.dispatcher = dispatcher
        self.clock = clock if clock is not None else WallClock()
        self.ids = ids if ids is not None else IdFactory()
        self._lock = threading.RLock()
        self._rules: dict[str, InteropRule] = {}
        self.outcomes: list[ActionOutcome] = []
        self.firings: list[tuple[str, float]] = []  # (rule_id, event time)
        self._hydrate()

    def _hydrate(self) -> None:
        for key, doc in self.store.all("interop_rule").items():
            self._rules[key] = InteropRule.from_doc(doc)
        for doc in self.store.all("outcome").values():
            self.outcomes.append(ActionOutcome.from_doc(doc))
        self._next_seq = max((r.seq for r in self._rules.values()), default=0) + 1

    # ------------------------------------------------------------------
    # Rule CRUD
    # ------------------------------------------------------------------

    def create_rule(
        self,
        source_device_id: str,
        metric: str,
        comparator: str,
        threshold: float,
        actions: list[Action],
        cooldown: float = 0.0,
    ) -> InteropRule:
        with self._lock:
            rule = InteropRule(
                id=self.ids.new("rule"),
                source_device_id=source_device_id,
                metric=metric,
                comparator=comparator,
                threshold=threshold,
                actions=actions,
                cooldown=cooldown,
                created_at=self.clock.now(),
                seq=self._next_seq,
            )
            rule.validate()
            for action in rule.actions:
                if isinstance(action, DeviceInvoke) and not self.registry.has_device(
                    action.target_device_id
                ):
                    raise NotFoundError(
                        f"action target device {action.target_device_id} not found"
                    )
            self._rules[rule.id] = rule
            self.store.put("interop_rule", rule.id, rule.to_doc())
            self._next_seq += 1
            return rule

    def list_rules(self) -> list[InteropRule]:
        with self._lock:
            return sorted(self._rules.values(), key=lambda r: r.seq)

    def get_rule(self, rule_id: str) -> InteropRule:
        with self._lock:
            rule = self._rules.get(rule_id)
            if rule is None:
                raise NotFoundError(f"interop rule {rule_id} not found")
            return rule

    def delete_rule(self, rule_id: str) -> None:
        with self._lock:
            if rule_id not in self._rules:
                raise NotFoundError(f"interop rule {rule_id} not found")
            del self._rules[rule_id]
            self.store.delete("interop_rule", rule_id)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, device_id: str, metric: str, value: float, ts: float) -> list[Action]:
        """Fire every matching rule whose cooldown elapsed; returns actions fired.

        Cooldown is measured in event time: a rule with cooldown c fires for
        an event at t only if t - last_fired >= c.
        """
        fired: list[Action] = []
        with self._lock:
            for rule in self.list_rules():
                if rule.source_device_id != device_id or rule.metric != metric:
                    continue
                if not rule.condition_holds(value):
                    continue
                if rule.last_fired is not None and ts - rule.last_fired < rule.cooldown:
                    continue
                rule.last_fired = ts
                self.store.put("interop_rule", rule.id, rule.to_doc())
                self.firings.append((rule.id, ts))
                context = {
                    "device": device_id,
                    "metric": metric,
                    "value": value,
                    "timestamp": ts,
                }
                for index, action in enumerate(rule.actions):
                    outcome = self.dispatcher.dispatch(action, rule.id, index, context)
                    self.outcomes.append(outcome)
                    self.store.put("outcome", self.ids.new("out"), outcome.to_doc())
                    if outcome.status == "failed":
                        logger.warning(
                            "rule %s action %d failed: %s", rule.id, index, outcome.detail
                        )
                    fired.append(action)
        return fired
