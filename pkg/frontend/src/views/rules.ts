// Interop rule builder: one condition, an ordered action list, cooldown.

import { ApiRequestError } from "../api";
import { clear, el, option } from "../dom";
import { ErrorBox } from "../forms";
import { COMPARATORS, type ActionDoc, type Comparator, type DeviceDoc, type InteropRuleDoc } from "../types";
import type { ViewContext } from "./context";

export class RulesView {
  readonly root: HTMLElement;
  private listBox: HTMLElement;
  private errors = new ErrorBox();
  private devices: DeviceDoc[] = [];
  private actions: ActionDoc[] = [];
  private deviceSelect: HTMLSelectElement;
  private metricInput: HTMLInputElement;
  private comparatorSelect: HTMLSelectElement;
  private thresholdInput: HTMLInputElement;
  private cooldownInput: HTMLInputElement;
  private actionsBox: HTMLElement;
  private submitButton: HTMLButtonElement;
  private invokeTarget: HTMLSelectElement;

  constructor(private ctx: ViewContext) {
    this.listBox = el("div", { class: "rule-list" });
    this.deviceSelect = el("select", { class: "rule-device" });
    this.metricInput = el("input", { class: "rule-metric", placeholder: "metric, e.g. motion" });
    this.comparatorSelect = el("select", { class: "rule-comparator" }, ...COMPARATORS.map((c) => option(c)));
    this.thresholdInput = el("input", { class: "rule-threshold", type: "number", step: "any", value: "1" });
    this.cooldownInput = el("input", { class: "rule-cooldown", type: "number", step: "any", value: "0" });
    this.actionsBox = el("div", { class: "rule-actions" });
    this.invokeTarget = el("select", { class: "invoke-device" });
    this.submitButton = el("button", { class: "rule-submit", onclick: () => void this.submit() }, "create rule");

    const invokeAction = el("input", { class: "invoke-action", placeholder: "action, e.g. record" });
    const invokeParams = el("input", { class: "invoke-params", value: "{}", placeholder: '{"duration": 5}' });
    const notifyTemplate = el("input", {
      class: "notify-template",
      placeholder: "message, e.g. motion at {device}",
    });

    this.root = el(
      "div",
      { class: "view view-rules" },
      el("div", { class: "pane" }, el("h2", {}, "Interoperability rules"), this.listBox),
      el(
        "div",
        { class: "pane rule-builder" },
        el("h2", {}, "New rule"),
        this.errors.root,
        el("h3", {}, "When"),
        el("div", { class: "row" },
          el("label", {}, "device"), this.deviceSelect,
          el("label", {}, "metric"), this.metricInput,
          this.comparatorSelect,
          this.thresholdInput,
        ),
        el("div", { class: "row" }, el("label", {}, "cooldown (s)"), this.cooldownInput),
        el("h3", {}, "Then (in order)"),
        this.actionsBox,
        el("div", { class: "row add-invoke-row" },
          this.invokeTarget, invokeAction, invokeParams,
          el("button", {
            class: "add-invoke",
            onclick: () => this.addInvoke(invokeAction, invokeParams),
          }, "add device action"),
        ),
        el("div", { class: "row add-notify-row" },
          notifyTemplate,
          el("button", {
            class: "add-notify",
            onclick: () => this.addNotify(notifyTemplate),
          }, "add notification"),
        ),
        el("div", { class: "row" }, this.submitButton),
      ),
    );
    this.renderActions();
  }

  async refresh(): Promise<void> {
    try {
      const [rules, devices] = await Promise.all([
        this.ctx.session.load("rules", (api) => api.listInteropRules()),
        this.ctx.session.load("devices", (api) => api.listDevices()),
      ]);
      this.devices = devices;
      this.fillDeviceSelects();
      this.renderList(rules);
    } catch (err) {
      this.handle(err);
    }
  }

  private fillDeviceSelects(): void {
    for (const select of [this.deviceSelect, this.invokeTarget]) {
      const current = select.value;
      clear(select);
      for (const device of this.devices) {
        select.append(option(device.id, device.address));
      }
      if (current) select.value = current;
    }
  }

  private deviceLabel(id: string): string {
    return this.devices.find((d) => d.id === id)?.address ?? id;
  }

  private renderList(rules: InteropRuleDoc[]): void {
    clear(this.listBox);
    if (rules.length === 0) {
      this.listBox.append(el("p", { class: "empty" }, "No rules yet."));
      return;
    }
    for (const rule of rules) {
      const actions = rule.actions
        .map((a) =>
          a.kind === "invoke"
            ? `${a.action_name} @ ${this.deviceLabel(a.target_device_id)}`
            : `notify "${a.message_template}"`,
        )
        .join(" → ");
      this.listBox.append(
        el(
          "div",
          { class: "card rule-card" },
          el("code", {}, `${this.deviceLabel(rule.device_id)}.${rule.metric} ${rule.comparator} ${rule.threshold}`),
          el("div", { class: "muted" }, actions + (rule.cooldown ? ` (cooldown ${rule.cooldown}s)` : "")),
          el("button", { class: "delete-rule", onclick: () => void this.remove(rule) }, "delete"),
        ),
      );
    }
  }

  private addInvoke(action: HTMLInputElement, params: HTMLInputElement): void {
    this.errors.clearError();
    if (!this.invokeTarget.value || !action.value.trim()) {
      this.errors.show("device action needs a target device and an action name");
      return;
    }
    let parsed: Record<string, unknown>;
    try {
      parsed = JSON.parse(params.value || "{}");
    } catch {
      this.errors.show("action params must be valid JSON");
      return;
    }
    this.actions.push({
      kind: "invoke",
      target_device_id: this.invokeTarget.value,
      action_name: action.value.trim(),
      params: parsed,
    });
    action.value = "";
    this.renderActions();
  }

  private addNotify(template: HTMLInputElement): void {
    this.errors.clearError();
    if (!template.value.trim()) {
      this.errors.show("notification needs a message template");
      return;
    }
    this.actions.push({ kind: "notify", message_template: template.value.trim() });
    template.value = "";
    this.renderActions();
  }

  private renderActions(): void {
    clear(this.actionsBox);
    if (this.actions.length === 0) {
      this.actionsBox.append(el("p", { class: "empty no-actions" }, "No actions yet - add at least one."));
    }
    this.actions.forEach((action, index) => {
      const label =
        action.kind === "invoke"
          ? `${index + 1}. invoke ${action.action_name} on ${this.deviceLabel(action.target_device_id)}`
          : `${index + 1}. notify "${action.message_template}"`;
      this.actionsBox.append(
        el(
          "div",
          { class: "action-row" },
          el("span", {}, label),
          el("button", {
            class: "remove-action",
            onclick: () => {
              this.actions.splice(index, 1);
              this.renderActions();
            },
          }, "remove"),
        ),
      );
    });
    // a rule with zero actions is invalid; keep submit disabled until one exists
    this.submitButton.disabled = this.actions.length === 0;
  }

  private async submit(): Promise<void> {
    this.errors.clearError();
    try {
      await this.ctx.session.mutate((api) =>
        api.createInteropRule({
          device_id: this.deviceSelect.value,
          metric: this.metricInput.value.trim(),
          comparator: this.comparatorSelect.value as Comparator,
          threshold: parseFloat(this.thresholdInput.value),
          actions: this.actions,
          cooldown: parseFloat(this.cooldownInput.value) || 0,
        }),
      );
      this.actions = [];
      this.metricInput.value = "";
      this.renderActions();
      await this.refresh();
    } catch (err) {
      this.handle(err);
    }
  }

  private async remove(rule: InteropRuleDoc): Promise<void> {
    try {
      await this.ctx.session.mutate((api) => api.deleteInteropRule(rule.id));
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
