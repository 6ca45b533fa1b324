// Function management: list, create, edit, delete.

import { ApiRequestError } from "../api";
import { clear, el } from "../dom";
import { ErrorBox, ParamTableEditor } from "../forms";
import type { FunctionDoc } from "../types";
import type { ViewContext } from "./context";

export class FunctionsView {
  readonly root: HTMLElement;
  private listBox: HTMLElement;
  private editorBox: HTMLElement;
  private errors = new ErrorBox();
  private editing: FunctionDoc | null = null;
  private params = new ParamTableEditor();

  constructor(private ctx: ViewContext) {
    this.listBox = el("div", { class: "function-list" });
    this.editorBox = el("div", { class: "function-editor" });
    this.root = el(
      "div",
      { class: "view view-functions" },
      el("div", { class: "pane" }, el("h2", {}, "Functions"), this.listBox),
      el("div", { class: "pane" }, this.editorBox),
    );
    this.renderEditor();
  }

  async refresh(): Promise<void> {
    try {
      const functions = await this.ctx.session.load("functions", (api) => api.listFunctions());
      this.renderList(functions);
    } catch (err) {
      this.handle(err);
    }
  }

  private renderList(functions: FunctionDoc[]): void {
    clear(this.listBox);
    if (functions.length === 0) {
      this.listBox.append(el("p", { class: "empty" }, "No functions defined yet."));
      return;
    }
    for (const fn of functions) {
      const params = fn.params.map((p) => p.name).join(", ") || "none";
      this.listBox.append(
        el(
          "div",
          { class: "card function-card", "data-function": fn.name },
          el("strong", {}, fn.name),
          el("span", { class: "muted" }, ` v${fn.version} · params: ${params}`),
          el("div", { class: "row" },
            el("button", { class: "edit-fn", onclick: () => this.startEdit(fn) }, "edit"),
            el("button", { class: "delete-fn", onclick: () => void this.remove(fn) }, "delete"),
          ),
        ),
      );
    }
  }

  private startEdit(fn: FunctionDoc): void {
    this.editing = fn;
    this.renderEditor(fn);
  }

  private renderEditor(fn?: FunctionDoc): void {
    clear(this.editorBox);
    this.params = new ParamTableEditor(fn?.params ?? []);
    this.errors.clearError();
    const name = el("input", { class: "fn-name", value: fn?.name ?? "", placeholder: "function name" });
    const template = el("input", {
      class: "fn-template",
      value: fn?.interpreter_template ?? "python {file}",
      placeholder: "interpreter command, e.g. python {file} {port}",
    });
    const extension = el("input", { class: "fn-extension", value: fn?.extension ?? "", placeholder: ".py" });
    const source = el("textarea", { class: "fn-source", rows: "10", placeholder: "script source" });
    source.value = fn?.source ?? "";
    const submit = el(
      "button",
      { class: "fn-submit", onclick: () => void this.submit(name, source, template, extension) },
      fn ? `save (bumps to v${fn.version + 1})` : "create function",
    );
    this.editorBox.append(
      el("h2", {}, fn ? `Edit ${fn.name}` : "New function"),
      this.errors.root,
      el("label", {}, "Name"), name,
      el("label", {}, "Script"), source,
      el("label", {}, "Interpreter command"), template,
      el("label", {}, "File extension"), extension,
      el("label", {}, "Parameters"), this.params.root,
      el("div", { class: "row" },
        submit,
        fn ? el("button", { class: "fn-cancel", onclick: () => { this.editing = null; this.renderEditor(); } }, "cancel") : null,
      ),
    );
  }

  private async submit(
    name: HTMLInputElement,
    source: HTMLTextAreaElement,
    template: HTMLInputElement,
    extension: HTMLInputElement,
  ): Promise<void> {
    const input = {
      name: name.value.trim(),
      source: source.value,
      interpreter_template: template.value.trim(),
      params: this.params.read(),
      extension: extension.value.trim(),
    };
    this.errors.clearError();
    try {
      if (this.editing) {
        await this.ctx.session.mutate((api) => api.updateFunction(this.editing!.id, input));
        this.editing = null;
      } else {
        await this.ctx.session.mutate((api) => api.createFunction(input));
      }
      this.renderEditor();
      await this.refresh();
    } catch (err) {
      this.handle(err);
    }
  }

  private async remove(fn: FunctionDoc): Promise<void> {
    this.errors.clearError();
    try {
      await this.ctx.session.mutate((api) => api.deleteFunction(fn.id));
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
