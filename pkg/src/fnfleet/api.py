"""HTTP surface of the control plane.

Endpoint table (device-facing endpoints are unauthenticated; everything
else requires ``Authorization: Bearer <admin token>``):

    POST   /devices                      register a device
    POST   /telemetry                    ingest a telemetry batch
    GET    /devices?status=...           list devices            (admin)
    POST   /functions                    create function         (admin)
    GET    /functions                    list functions          (admin)
    GET    /functions/{id}               fetch function          (admin)
    PUT    /functions/{id}               update function         (admin)
    DELETE /functions/{id}               delete function         (admin)
    POST   /deployments                  assign + deploy         (admin)
    POST   /deployments/{id}/stop        stop deployment         (admin)
    POST   /rules/interop                create interop rule     (admin)
    GET    /rules/interop                list interop rules      (admin)
    DELETE /rules/interop/{id}           delete interop rule     (admin)
    POST   /rules/autodeploy             create auto-deploy rule (admin)
    GET    /rules/autodeploy             list auto-deploy rules  (admin)
    DELETE /rules/autodeploy/{id}        delete auto-deploy rule (admin)
    GET    /telemetry?device=&metric=&from=&to=   query samples  (admin)

Core errors map to exactly one status each: validation 400, auth 401,
not-found 404, in-use/illegal-state 409.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Optional

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .errors import (
    FnFleetError,
    IllegalStateError,
    InUseError,
    NotFoundError,
    ValidationError,
)
from .model import (
    Deployment,
    Device,
    FunctionDefinition,
    InteropRule,
    ParamSpec,
    action_from_doc,
)
from .plane import ControlPlane
from .rules import iso_utc

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (ValidationError, 400),
    (NotFoundError, 404),
    (InUseError, 409),
    (IllegalStateError, 409),
]


def status_for_error(exc: FnFleetError) -> int:
    for cls, code in _STATUS_BY_ERROR:
        if isinstance(exc, cls):
            return code
    return 500


def parse_timestamp(value) -> float:
    """Accept epoch numbers or ISO-8601 strings."""
    if isinstance(value, bool):
        raise ValidationError(f"bad timestamp {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)  # epoch seconds arriving as a query string
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            raise ValidationError(f"bad timestamp {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError(f"bad timestamp {value!r}")


def _require(payload: dict, *keys: str) -> None:
    for key in keys:
        if key not in payload:
            raise ValidationError(f"missing required field {key!r}")


def _parse_samples(raw) -> list[tuple[float, float]]:
    if not isinstance(raw, list):
        raise ValidationError("samples must be a list")
    samples: list[tuple[float, float]] = []
    for item in raw:
        if isinstance(item, dict):
            _require(item, "t", "v")
            samples.append((parse_timestamp(item["t"]), item["v"]))
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            samples.append((parse_timestamp(item[0]), item[1]))
        else:
            raise ValidationError(f"bad sample {item!r}")
    return samples


# -- document renderers ------------------------------------------------------

def device_doc(device: Device) -> dict:
    return {
        "id": device.id,
        "address": device.address,
        "capabilities": [c.render() for c in device.capabilities],
        "status": device.status.value,
        "registered_at": iso_utc(device.registered_at),
    }


def function_doc(fn: FunctionDefinition) -> dict:
    return {
        "id": fn.id,
        "name": fn.name,
        "source": fn.source.decode("utf-8"),
        "interpreter_template": fn.interpreter_template,
        "params": [p.to_doc() for p in fn.params],
        "version": fn.version,
        "extension": fn.extension,
    }


def deployment_doc(dep: Deployment) -> dict:
    return {
        "id": dep.id,
        "device_id": dep.device_id,
        "function_id": dep.function_id,
        "function_version": dep.function_version,
        "bindings": dep.bindings,
        "state": dep.state.value,
        "handle": dep.handle,
        "failure_reason": dep.failure_reason,
    }


def interop_rule_doc(rule: InteropRule) -> dict:
    return {
        "id": rule.id,
        "device_id": rule.source_device_id,
        "metric": rule.metric,
        "comparator": rule.comparator,
        "threshold": rule.threshold,
        "actions": [a.to_doc() for a in rule.actions],
        "cooldown": rule.cooldown,
    }


def _parse_params(raw) -> list[ParamSpec]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise ValidationError("params must be a list")
    return [ParamSpec.from_doc(p) for p in raw]


def create_app(plane: ControlPlane, admin_token: str) -> FastAPI:
    app = FastAPI(title="fnfleet", docs_url=None, redoc_url=None, openapi_url=None)

    def admin(authorization: Optional[str] = Header(default=None)) -> None:
        if authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=401, detail="admin token required")

    @app.exception_handler(FnFleetError)
    def _core_error(_request: Request, exc: FnFleetError):
        return JSONResponse(
            status_code=status_for_error(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    def _body_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "ValidationError", "detail": str(exc)},
        )

    # -- device-facing endpoints (no auth: devices hold no admin secrets) --

    @app.post("/devices", status_code=201)
    def register_device(payload: dict = Body(...)):
        _require(payload, "address")
        device, deployments = plane.register_device(
            payload["address"], payload.get("capabilities", [])
        )
        return {
            "device_id": device.id,
            "status": device.status.value,
            "deployments": [deployment_doc(d) for d in deployments],
        }

    @app.post("/telemetry", status_code=202)
    def ingest_telemetry(payload: dict = Body(...)):
        _require(payload, "device_id", "metric", "samples")
        stored = plane.ingest_telemetry(
            payload["device_id"], payload["metric"], _parse_samples(payload["samples"])
        )
        return {"stored": stored}

    # -- admin: devices -----------------------------------------------------

    @app.get("/devices", dependencies=[Depends(admin)])
    def list_devices(status: Optional[str] = None):
        from .model import DeviceStatus

        status_filter = None
        if status is not None:
            try:
                status_filter = DeviceStatus(status)
            except ValueError:
                raise ValidationError(f"unknown device status {status!r}") from None
        devices = plane.registry.list_devices(status_filter)
        return {"devices": [device_doc(d) for d in devices]}

    # -- admin: functions ----------------------------------------------------

    @app.post("/functions", status_code=201, dependencies=[Depends(admin)])
    def create_function(payload: dict = Body(...)):
        _require(payload, "name", "source", "interpreter_template")
        fn = plane.registry.create_function(
            name=payload["name"],
            source=str(payload["source"]).encode("utf-8"),
            interpreter_template=payload["interpreter_template"],
            params=_parse_params(payload.get("params")),
            extension=payload.get("extension", ""),
        )
        return function_doc(fn)

    @app.get("/functions", dependencies=[Depends(admin)])
    def list_functions():
        return {"functions": [function_doc(f) for f in plane.registry.list_functions()]}

    @app.get("/functions/{function_id}", dependencies=[Depends(admin)])
    def get_function(function_id: str):
        return function_doc(plane.registry.get_function(function_id))

    @app.put("/functions/{function_id}", dependencies=[Depends(admin)])
    def update_function(function_id: str, payload: dict = Body(...)):
        changes: dict = {}
        for key in ("name", "interpreter_template", "extension"):
            if key in payload:
                changes[key] = payload[key]
        if "source" in payload:
            changes["source"] = str(payload["source"]).encode("utf-8")
        if "params" in payload:
            changes["params"] = _parse_params(payload["params"])
        fn = plane.registry.update_function(function_id, **changes)
        return function_doc(fn)

    @app.delete("/functions/{function_id}", status_code=204, dependencies=[Depends(admin)])
    def delete_function(function_id: str):
        plane.registry.delete_function(function_id)
        return Response(status_code=204)

    # -- admin: deployments ---------------------------------------------------

    @app.post("/deployments", status_code=201, dependencies=[Depends(admin)])
    def create_deployment(payload: dict = Body(...)):
        _require(payload, "device_id", "function_id")
        dep = plane.assign_deployment(
            payload["device_id"], payload["function_id"], payload.get("bindings", {})
        )
        return deployment_doc(dep)

    @app.post("/deployments/{deployment_id}/stop", dependencies=[Depends(admin)])
    def stop_deployment(deployment_id: str):
        return deployment_doc(plane.stop_deployment(deployment_id))

    # -- admin: interop rules --------------------------------------------------

    @app.post("/rules/interop", status_code=201, dependencies=[Depends(admin)])
    def create_interop_rule(payload: dict = Body(...)):
        _require(payload, "device_id", "metric", "comparator", "threshold", "actions")
        if not isinstance(payload["actions"], list):
            raise ValidationError("actions must be a list")
        actions = [action_from_doc(a) for a in payload["actions"]]
        rule = plane.rules.create_rule(
            source_device_id=payload["device_id"],
            metric=payload["metric"],
            comparator=payload["comparator"],
            threshold=payload["threshold"],
            actions=actions,
            cooldown=float(payload.get("cooldown", 0.0)),
        )
        return interop_rule_doc(rule)

    @app.get("/rules/interop", dependencies=[Depends(admin)])
    def list_interop_rules():
        return {"rules": [interop_rule_doc(r) for r in plane.rules.list_rules()]}

    @app.delete("/rules/interop/{rule_id}", status_code=204, dependencies=[Depends(admin)])
    def delete_interop_rule(rule_id: str):
        plane.rules.delete_rule(rule_id)
        return Response(status_code=204)

    # -- admin: auto-deploy rules -----------------------------------------------

    @app.post("/rules/autodeploy", status_code=201, dependencies=[Depends(admin)])
    def create_autodeploy_rule(payload: dict = Body(...)):
        _require(payload, "function_id")
        rule = plane.registry.create_autodeploy_rule(
            capability_predicate=payload.get("capabilities", []),
            function_id=payload["function_id"],
            binding_template=payload.get("bindings", {}),
        )
        return {
            "id": rule.id,
            "capabilities": rule.capability_predicate,
            "function_id": rule.function_id,
            "bindings": rule.binding_template,
        }

    @app.get("/rules/autodeploy", dependencies=[Depends(admin)])
    def list_autodeploy_rules():
        return {
            "rules": [
                {
                    "id": r.id,
                    "capabilities": r.capability_predicate,
                    "function_id": r.function_id,
                    "bindings": r.binding_template,
                }
                for r in plane.registry.list_autodeploy_rules()
            ]
        }

    @app.delete("/rules/autodeploy/{rule_id}", status_code=204, dependencies=[Depends(admin)])
    def delete_autodeploy_rule(rule_id: str):
        plane.registry.delete_autodeploy_rule(rule_id)
        return Response(status_code=204)

    # -- admin: telemetry query ---------------------------------------------------

    @app.get("/telemetry", dependencies=[Depends(admin)])
    def query_telemetry(
        device: str,
        metric: str,
        from_: Optional[str] = Query(default=None, alias="from"),
        to: Optional[str] = Query(default=None),
    ):
        start = parse_timestamp(from_) if from_ is not None else float("-inf")
        end = parse_timestamp(to) if to is not None else float("inf")
        samples = plane.telemetry.query(device, metric, start, end)
        return {
            "device_id": device,
            "metric": metric,
            "samples": [{"t": iso_utc(t), "v": v} for t, v in samples],
        }

    return app
