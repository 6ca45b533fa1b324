// Document shapes exchanged with the control plane API.

export type ParamKind = "integer" | "real" | "string" | "boolean";

export interface ParamSpec {
  name: string;
  kind: ParamKind;
  required?: boolean;
  default?: number | string | boolean;
}

export interface FunctionDoc {
  id: string;
  name: string;
  source: string;
  interpreter_template: string;
  params: ParamSpec[];
  version: number;
  extension: string;
}

export type DeviceStatus = "pending" | "active" | "unreachable";

export interface DeviceDoc {
  id: string;
  address: string;
  capabilities: string[];
  status: DeviceStatus;
  registered_at: string;
}

export interface DeploymentDoc {
  id: string;
  device_id: string;
  function_id: string;
  function_version: number;
  bindings: Record<string, number | string | boolean>;
  state: string;
  handle: string | null;
  failure_reason: string | null;
}

export interface InvokeAction {
  kind: "invoke";
  target_device_id: string;
  action_name: string;
  params: Record<string, unknown>;
}

export interface NotifyAction {
  kind: "notify";
  message_template: string;
}

export type ActionDoc = InvokeAction | NotifyAction;

export const COMPARATORS = ["<", "<=", ">", ">=", "=", "!="] as const;
export type Comparator = (typeof COMPARATORS)[number];

export interface InteropRuleDoc {
  id: string;
  device_id: string;
  metric: string;
  comparator: Comparator;
  threshold: number;
  actions: ActionDoc[];
  cooldown: number;
}

export interface SampleDoc {
  t: string;
  v: number;
}

export interface TelemetryResult {
  device_id: string;
  metric: string;
  samples: SampleDoc[];
}
