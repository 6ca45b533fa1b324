// Pending-device list with a per-device assignment dialog whose binding
// form is generated from the chosen function's parameter specs.

import { ApiRequestError } from "../api";
import { clear, el, option } from "../dom";
import { BindingForm, ErrorBox } from "../forms";
import type { DeviceDoc, FunctionDoc } from "../types";
import type { ViewContext } from "./context";

export class DevicesView {
  readonly root: HTMLElement;
  private pendingBox: HTMLElement;
  private activeBox: HTMLElement;
  private dialogBox: HTMLElement;
  private errors = new ErrorBox();
  private functions: FunctionDoc[] = [];
  private assigning: DeviceDoc | null = null;
  private bindingForm = new BindingForm();
  private functionSelect: HTMLSelectElement;
  private assignButton: HTMLButtonElement;

  constructor(private ctx: ViewContext) {
    this.pendingBox = el("div", { class: "pending-devices" });
    this.activeBox = el("div", { class: "active-devices" });
    this.dialogBox = el("div", { class: "assign-dialog" });
    this.functionSelect = el("select", { class: "assign-function" });
    this.assignButton = el("button", { class: "assign-submit", onclick: () => void this.submit() }, "assign");
    this.root = el(
      "div",
      { class: "view view-devices" },
      el("div", { class: "pane" },
        el("h2", {}, "Pending devices"),
        el("p", { class: "muted" }, "Registered devices awaiting a function assignment."),
        this.pendingBox,
        el("h2", {}, "Active devices"),
        this.activeBox,
      ),
      el("div", { class: "pane" }, this.dialogBox),
    );
    this.renderDialog();
  }

  async refresh(): Promise<void> {
    try {
      const [devices, functions] = await Promise.all([
        this.ctx.session.load("devices", (api) => api.listDevices()),
        this.ctx.session.load("functions", (api) => api.listFunctions()),
      ]);
      this.functions = functions;
      this.renderDevices(devices);
      this.fillFunctionSelect();
    } catch (err) {
      this.handle(err);
    }
  }

  private renderDevices(devices: DeviceDoc[]): void {
    clear(this.pendingBox);
    clear(this.activeBox);
    const pending = devices.filter((d) => d.status === "pending");
    const rest = devices.filter((d) => d.status !== "pending");
    if (pending.length === 0) {
      this.pendingBox.append(el("p", { class: "empty" }, "No devices waiting."));
    }
    for (const device of pending) {
      this.pendingBox.append(
        el(
          "div",
          { class: "card device-card pending", "data-address": device.address },
          el("strong", {}, device.address),
          el("span", { class: "muted" }, ` ${device.capabilities.join(", ") || "no capabilities"}`),
          el("button", { class: "assign-open", onclick: () => this.startAssign(device) }, "assign function"),
        ),
      );
    }
    if (rest.length === 0) {
      this.activeBox.append(el("p", { class: "empty" }, "No active devices."));
    }
    for (const device of rest) {
      this.activeBox.append(
        el(
          "div",
          { class: `card device-card ${device.status}`, "data-address": device.address },
          el("strong", {}, device.address),
          el("span", { class: "muted" }, ` ${device.status}`),
        ),
      );
    }
  }

  private fillFunctionSelect(): void {
    const current = this.functionSelect.value;
    clear(this.functionSelect);
    for (const fn of this.functions) {
      this.functionSelect.append(option(fn.id, `${fn.name} v${fn.version}`));
    }
    if (current) this.functionSelect.value = current;
    if (this.assigning) this.syncBindingForm();
  }

  private startAssign(device: DeviceDoc): void {
    this.assigning = device;
    this.renderDialog();
    this.syncBindingForm();
  }

  private renderDialog(): void {
    clear(this.dialogBox);
    if (!this.assigning) {
      this.dialogBox.append(el("p", { class: "empty" }, "Pick a pending device to assign a function."));
      return;
    }
    this.errors.clearError();
    this.functionSelect.addEventListener("change", () => this.syncBindingForm());
    this.dialogBox.append(
      el("h2", {}, `Assign to ${this.assigning.address}`),
      this.errors.root,
      el("label", {}, "Function"),
      this.functionSelect,
      el("label", {}, "Parameters"),
      this.bindingForm.root,
      el("div", { class: "row" },
        this.assignButton,
        el("button", { class: "assign-cancel", onclick: () => { this.assigning = null; this.renderDialog(); } }, "cancel"),
      ),
    );
  }

  private selectedFunction(): FunctionDoc | undefined {
    return this.functions.find((f) => f.id === this.functionSelect.value);
  }

  private syncBindingForm(): void {
    const fn = this.selectedFunction();
    this.bindingForm.setParams(fn?.params ?? []);
    this.bindingForm.onchange = () => this.syncSubmitState();
    this.syncSubmitState();
  }

  private syncSubmitState(): void {
    // a missing required binding blocks submission client-side; the API
    // enforces the same rule with a 400
    this.assignButton.disabled = this.bindingForm.read().missing.length > 0;
  }

  private async submit(): Promise<void> {
    const fn = this.selectedFunction();
    if (!fn || !this.assigning) return;
    const { bindings, missing } = this.bindingForm.read();
    if (missing.length > 0) return;
    this.errors.clearError();
    try {
      await this.ctx.session.mutate((api) => api.createDeployment(this.assigning!.id, fn.id, bindings));
      this.assigning = null;
      this.renderDialog();
      await this.refresh();
    } catch (err) {
      this.handle(err);
    }
  }

  private handle(err: unknown): void {
    if (err instanceof ApiRequestError && err.status === 401) {
      this.ctx.onAuthFailure();
      return;
    }
    this.errors.show(err instanceof Error ? err.message : String(err));
  }
}
