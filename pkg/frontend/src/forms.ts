// Form building blocks: the function parameter table and binding forms
// generated from parameter specs. These mirror server-side checks for
// convenience only; the API remains the authority.

import { clear, el, option } from "./dom";
import type { ParamKind, ParamSpec } from "./types";

const KINDS: ParamKind[] = ["integer", "real", "string", "boolean"];

export class ParamTableEditor {
  readonly root: HTMLElement;
  private body: HTMLTableSectionElement;

  constructor(initial: ParamSpec[] = []) {
    this.body = el("tbody");
    this.root = el(
      "div",
      { class: "param-table" },
      el(
        "table",
        {},
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "name"),
            el("th", {}, "kind"),
            el("th", {}, "required"),
            el("th", {}, "default"),
            el("th", {}, ""),
          ),
        ),
        this.body,
      ),
      el("button", { type: "button", class: "add-param", onclick: () => this.addRow() }, "add parameter"),
    );
    for (const spec of initial) this.addRow(spec);
  }

  addRow(spec?: ParamSpec): void {
    const row = el(
      "tr",
      { class: "param-row" },
      el("td", {}, el("input", { class: "p-name", value: spec?.name ?? "", placeholder: "name" })),
      el("td", {}, el("select", { class: "p-kind" }, ...KINDS.map((k) => option(k)))),
      el("td", {}, el("input", { class: "p-required", type: "checkbox" })),
      el("td", {}, el("input", { class: "p-default", value: spec?.default !== undefined ? String(spec.default) : "" })),
      el("td", {}, el("button", { type: "button", class: "p-remove", onclick: () => row.remove() }, "remove")),
    );
    if (spec) {
      (row.querySelector(".p-kind") as HTMLSelectElement).value = spec.kind;
      (row.querySelector(".p-required") as HTMLInputElement).checked = !!spec.required;
    }
    this.body.append(row);
  }

  /** Read the table back into specs; defaults are typed by kind. */
  read(): ParamSpec[] {
    const specs: ParamSpec[] = [];
    for (const row of this.body.querySelectorAll("tr.param-row")) {
      const name = (row.querySelector(".p-name") as HTMLInputElement).value.trim();
      if (!name) continue;
      const kind = (row.querySelector(".p-kind") as HTMLSelectElement).value as ParamKind;
      const required = (row.querySelector(".p-required") as HTMLInputElement).checked;
      const rawDefault = (row.querySelector(".p-default") as HTMLInputElement).value.trim();
      const spec: ParamSpec = { name, kind, required };
      if (rawDefault !== "") {
        spec.default = parseByKind(kind, rawDefault);
      }
      specs.push(spec);
    }
    return specs;
  }
}

function parseByKind(kind: ParamKind, raw: string): number | string | boolean {
  if (kind === "integer") return parseInt(raw, 10);
  if (kind === "real") return parseFloat(raw);
  if (kind === "boolean") return raw === "true" || raw === "1" || raw === "on";
  return raw;
}

export interface BindingReadResult {
  bindings: Record<string, number | string | boolean>;
  missing: string[]; // required params without a usable value
}

/** Binding form generated from a function's parameter specs. */
export class BindingForm {
  readonly root: HTMLElement;
  private specs: ParamSpec[] = [];
  onchange: (() => void) | null = null;

  constructor() {
    this.root = el("div", { class: "binding-form" });
  }

  setParams(specs: ParamSpec[]): void {
    this.specs = specs;
    clear(this.root);
    for (const spec of specs) {
      const label = el(
        "label",
        { class: "binding-label" },
        `${spec.name} (${spec.kind})${spec.required ? " *" : ""}`,
      );
      let input: HTMLElement;
      if (spec.kind === "boolean") {
        input = el("input", { class: "binding-input", type: "checkbox", "data-param": spec.name });
        if (spec.default === true) (input as HTMLInputElement).checked = true;
      } else {
        input = el("input", {
          class: "binding-input",
          type: spec.kind === "string" ? "text" : "number",
          "data-param": spec.name,
          value: spec.default !== undefined ? String(spec.default) : "",
        });
        if (spec.kind === "real") input.setAttribute("step", "any");
      }
      input.addEventListener("input", () => this.onchange?.());
      input.addEventListener("change", () => this.onchange?.());
      this.root.append(el("div", { class: "binding-row" }, label, input));
    }
  }

  read(): BindingReadResult {
    const bindings: Record<string, number | string | boolean> = {};
    const missing: string[] = [];
    for (const spec of this.specs) {
      const input = this.root.querySelector(
        `[data-param="${spec.name}"]`,
      ) as HTMLInputElement | null;
      if (!input) continue;
      if (spec.kind === "boolean") {
        bindings[spec.name] = input.checked;
        continue;
      }
      const raw = input.value.trim();
      if (raw === "") {
        if (spec.required) missing.push(spec.name);
        continue;
      }
      if (spec.kind === "string") {
        bindings[spec.name] = raw;
      } else {
        const parsed = spec.kind === "integer" ? parseInt(raw, 10) : parseFloat(raw);
        if (Number.isNaN(parsed)) {
          if (spec.required) missing.push(spec.name);
          continue;
        }
        bindings[spec.name] = parsed;
      }
    }
    return { bindings, missing };
  }
}

/** Inline error banner used by every form view. */
export class ErrorBox {
  readonly root: HTMLElement;

  constructor() {
    this.root = el("div", { class: "error-box", role: "alert" });
    this.root.style.display = "none";
  }

  show(message: string): void {
    this.root.textContent = message;
    this.root.style.display = "block";
  }

  clearError(): void {
    this.root.textContent = "";
    this.root.style.display = "none";
  }
}
