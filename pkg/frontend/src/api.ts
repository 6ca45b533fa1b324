// Typed client for the control plane API. The admin token travels only in
// the Authorization header, never in URLs.

import type {
  ActionDoc,
  Comparator,
  DeploymentDoc,
  DeviceDoc,
  DeviceStatus,
  FunctionDoc,
  InteropRuleDoc,
  ParamSpec,
  TelemetryResult,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly errorKind: string,
    readonly detail: string,
  ) {
    super(detail || errorKind);
  }
}

export interface FunctionInput {
  name: string;
  source: string;
  interpreter_template: string;
  params: ParamSpec[];
  extension?: string;
}

export interface RuleInput {
  device_id: string;
  metric: string;
  comparator: Comparator;
  threshold: number;
  actions: ActionDoc[];
  cooldown: number;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    authenticated = true,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (authenticated) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 204) return undefined as T;
    let doc: unknown = undefined;
    try {
      doc = await resp.json();
    } catch {
      doc = undefined;
    }
    if (!resp.ok) {
      const err = (doc ?? {}) as { error?: string; detail?: string };
      throw new ApiRequestError(
        resp.status,
        err.error ?? `HTTP ${resp.status}`,
        err.detail ?? `request failed with ${resp.status}`,
      );
    }
    return doc as T;
  }

  // functions
  async listFunctions(): Promise<FunctionDoc[]> {
    const doc = await this.request<{ functions: FunctionDoc[] }>("GET", "/functions");
    return doc.functions;
  }

  createFunction(input: FunctionInput): Promise<FunctionDoc> {
    return this.request("POST", "/functions", input);
  }

  updateFunction(id: string, input: Partial<FunctionInput>): Promise<FunctionDoc> {
    return this.request("PUT", `/functions/${id}`, input);
  }

  deleteFunction(id: string): Promise<void> {
    return this.request("DELETE", `/functions/${id}`);
  }

  // devices and deployments
  async listDevices(status?: DeviceStatus): Promise<DeviceDoc[]> {
    const query = status ? `?status=${status}` : "";
    const doc = await this.request<{ devices: DeviceDoc[] }>("GET", `/devices${query}`);
    return doc.devices;
  }

  createDeployment(
    deviceId: string,
    functionId: string,
    bindings: Record<string, number | string | boolean>,
  ): Promise<DeploymentDoc> {
    return this.request("POST", "/deployments", {
      device_id: deviceId,
      function_id: functionId,
      bindings,
    });
  }

  // interop rules
  async listInteropRules(): Promise<InteropRuleDoc[]> {
    const doc = await this.request<{ rules: InteropRuleDoc[] }>("GET", "/rules/interop");
    return doc.rules;
  }

  createInteropRule(input: RuleInput): Promise<InteropRuleDoc> {
    return this.request("POST", "/rules/interop", input);
  }

  deleteInteropRule(id: string): Promise<void> {
    return this.request("DELETE", `/rules/interop/${id}`);
  }

  // telemetry
  queryTelemetry(
    device: string,
    metric: string,
    from?: string,
    to?: string,
  ): Promise<TelemetryResult> {
    const params = new URLSearchParams({ device, metric });
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    return this.request("GET", `/telemetry?${params.toString()}`);
  }
}
