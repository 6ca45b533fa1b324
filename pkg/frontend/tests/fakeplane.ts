// In-process stand-in for the control plane API, faithful to its paths,
// status codes, auth split, and {error, detail} error bodies. Used as a
// FetchLike by the tests; it also records every URL so tests can prove
// the admin token never leaks into one.

import type { FetchLike } from "../src/api";
import type {
  ActionDoc,
  DeviceDoc,
  DeviceStatus,
  FunctionDoc,
  InteropRuleDoc,
  ParamSpec,
  SampleDoc,
} from "../src/types";

interface DeploymentRec {
  id: string;
  device_id: string;
  function_id: string;
  function_version: number;
  bindings: Record<string, number | string | boolean>;
  state: string;
  handle: string | null;
  failure_reason: string | null;
}

function json(status: number, doc: unknown): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function errorResponse(status: number, error: string, detail: string): Response {
  return json(status, { error, detail });
}

export class FakePlane {
  token = "secret-token";
  functions: FunctionDoc[] = [];
  devices: DeviceDoc[] = [];
  rules: InteropRuleDoc[] = [];
  deployments: DeploymentRec[] = [];
  telemetry = new Map<string, SampleDoc[]>();
  seenUrls: string[] = [];
  private counter = 0;

  readonly fetch: FetchLike = async (url, init) => {
    this.seenUrls.push(url);
    return this.handle(url, init ?? {});
  };

  private nextId(prefix: string): string {
    this.counter += 1;
    return `${prefix}-${String(this.counter).padStart(12, "0")}`;
  }

  addDevice(address: string, capabilities: string[] = [], status: DeviceStatus = "pending"): DeviceDoc {
    const device: DeviceDoc = {
      id: this.nextId("dev"),
      address,
      capabilities,
      status,
      registered_at: "1970-01-01T00:00:00Z",
    };
    this.devices.push(device);
    return device;
  }

  injectSample(deviceId: string, metric: string, t: string, v: number): void {
    const key = `${deviceId}:${metric}`;
    const series = this.telemetry.get(key) ?? [];
    series.push({ t, v });
    this.telemetry.set(key, series);
  }

  // -- request handling ---------------------------------------------------

  private handle(url: string, init: RequestInit): Response {
    const method = (init.method ?? "GET").toUpperCase();
    const parsed = new URL(url, "http://plane.test");
    const path = parsed.pathname.replace(/^\/api/, "");
    const body = init.body ? JSON.parse(String(init.body)) : {};
    const headers = (init.headers ?? {}) as Record<string, string>;
    const authed = headers["Authorization"] === `Bearer ${this.token}`;

    const open = path === "/devices" && method === "POST" || path === "/telemetry" && method === "POST";
    if (!open && !authed) {
      return errorResponse(401, "AuthError", "admin token required");
    }

    if (path === "/functions" && method === "GET") {
      return json(200, { functions: this.functions });
    }
    if (path === "/functions" && method === "POST") {
      return this.createFunction(body);
    }
    let match = path.match(/^\/functions\/([^/]+)$/);
    if (match) {
      const fn = this.functions.find((f) => f.id === match![1]);
      if (!fn) return errorResponse(404, "NotFoundError", `function ${match[1]} not found`);
      if (method === "GET") return json(200, fn);
      if (method === "PUT") return this.updateFunction(fn, body);
      if (method === "DELETE") {
        if (this.deployments.some((d) => d.function_id === fn.id && d.state === "running")) {
          return errorResponse(409, "InUseError", "function has running deployments");
        }
        this.functions = this.functions.filter((f) => f.id !== fn.id);
        return new Response(null, { status: 204 });
      }
    }

    if (path === "/devices" && method === "GET") {
      const status = parsed.searchParams.get("status");
      const devices = status ? this.devices.filter((d) => d.status === status) : this.devices;
      return json(200, { devices });
    }

    if (path === "/deployments" && method === "POST") {
      return this.createDeployment(body);
    }

    if (path === "/rules/interop" && method === "GET") {
      return json(200, { rules: this.rules });
    }
    if (path === "/rules/interop" && method === "POST") {
      return this.createRule(body);
    }
    match = path.match(/^\/rules\/interop\/([^/]+)$/);
    if (match && method === "DELETE") {
      if (!this.rules.some((r) => r.id === match![1])) {
        return errorResponse(404, "NotFoundError", `rule ${match[1]} not found`);
      }
      this.rules = this.rules.filter((r) => r.id !== match![1]);
      return new Response(null, { status: 204 });
    }

    if (path === "/telemetry" && method === "GET") {
      return this.queryTelemetry(parsed);
    }

    return errorResponse(404, "NotFoundError", `no route ${method} ${path}`);
  }

  private validateFunction(doc: {
    name?: string;
    interpreter_template?: string;
    params?: ParamSpec[];
  }): Response | null {
    if (!doc.name) {
      return errorResponse(400, "ValidationError", "function name must be non-empty");
    }
    const names = (doc.params ?? []).map((p) => p.name);
    const dupes = names.filter((n, i) => names.indexOf(n) !== i);
    if (dupes.length > 0) {
      return errorResponse(400, "ValidationError", `duplicate parameter name: ${dupes[0]}`);
    }
    const fileSlots = (doc.interpreter_template ?? "").match(/\{file\}/g) ?? [];
    if (fileSlots.length !== 1) {
      return errorResponse(
        400, "ValidationError", "interpreter template must contain exactly one {file} placeholder",
      );
    }
    return null;
  }

  private createFunction(body: Record<string, unknown>): Response {
    const invalid = this.validateFunction(body as never);
    if (invalid) return invalid;
    const fn: FunctionDoc = {
      id: this.nextId("fn"),
      name: String(body.name),
      source: String(body.source ?? ""),
      interpreter_template: String(body.interpreter_template),
      params: (body.params as ParamSpec[]) ?? [],
      version: 1,
      extension: String(body.extension ?? ""),
    };
    this.functions.push(fn);
    return json(201, fn);
  }

  private updateFunction(fn: FunctionDoc, body: Record<string, unknown>): Response {
    const merged = { ...fn, ...body, version: fn.version + 1 } as FunctionDoc;
    const invalid = this.validateFunction(merged);
    if (invalid) return invalid;
    Object.assign(fn, merged);
    return json(200, fn);
  }

  private createDeployment(body: {
    device_id?: string;
    function_id?: string;
    bindings?: Record<string, number | string | boolean>;
  }): Response {
    const device = this.devices.find((d) => d.id === body.device_id);
    if (!device) return errorResponse(404, "NotFoundError", `device ${body.device_id} not found`);
    const fn = this.functions.find((f) => f.id === body.function_id);
    if (!fn) return errorResponse(404, "NotFoundError", `function ${body.function_id} not found`);
    const bindings = { ...(body.bindings ?? {}) };
    for (const spec of fn.params) {
      if (spec.name in bindings) continue;
      if (spec.required) {
        return errorResponse(400, "BindingError", `missing required parameter '${spec.name}'`);
      }
      if (spec.default !== undefined) bindings[spec.name] = spec.default;
    }
    const dep: DeploymentRec = {
      id: this.nextId("dep"),
      device_id: device.id,
      function_id: fn.id,
      function_version: fn.version,
      bindings,
      state: "running",
      handle: "pid-1",
      failure_reason: null,
    };
    this.deployments.push(dep);
    device.status = "active";
    return json(201, dep);
  }

  private createRule(body: {
    device_id?: string;
    metric?: string;
    comparator?: string;
    threshold?: number;
    actions?: ActionDoc[];
    cooldown?: number;
  }): Response {
    if (!body.actions || body.actions.length === 0) {
      return errorResponse(400, "ValidationError", "rule must declare at least one action");
    }
    if (!body.metric) {
      return errorResponse(400, "ValidationError", "rule metric must be non-empty");
    }
    for (const action of body.actions) {
      if (action.kind === "invoke" && !this.devices.some((d) => d.id === action.target_device_id)) {
        return errorResponse(
          404, "NotFoundError", `action target device ${action.target_device_id} not found`,
        );
      }
    }
    const rule: InteropRuleDoc = {
      id: this.nextId("rule"),
      device_id: String(body.device_id),
      metric: body.metric,
      comparator: (body.comparator ?? "=") as InteropRuleDoc["comparator"],
      threshold: Number(body.threshold ?? 0),
      actions: body.actions,
      cooldown: Number(body.cooldown ?? 0),
    };
    this.rules.push(rule);
    return json(201, rule);
  }

  private queryTelemetry(parsed: URL): Response {
    const device = parsed.searchParams.get("device") ?? "";
    const metric = parsed.searchParams.get("metric") ?? "";
    if (!this.devices.some((d) => d.id === device)) {
      return errorResponse(404, "UnknownDeviceError", `device ${device} not registered`);
    }
    const from = parsed.searchParams.get("from");
    const to = parsed.searchParams.get("to");
    const fromTs = from ? Date.parse(from) : -Infinity;
    const toTs = to ? Date.parse(to) : Infinity;
    const samples = (this.telemetry.get(`${device}:${metric}`) ?? []).filter((s) => {
      const t = Date.parse(s.t);
      return t >= fromTs && t < toTs;
    });
    return json(200, { device_id: device, metric, samples });
  }
}
