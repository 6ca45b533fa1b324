// Application shell: login screen, tab navigation, 3-second polling.

import { clear, el } from "./dom";
import { POLL_INTERVAL_MS, UiSession } from "./session";
import type { FetchLike } from "./api";
import type { View } from "./views/context";
import { DevicesView } from "./views/devices";
import { FunctionsView } from "./views/functions";
import { RulesView } from "./views/rules";
import { TelemetryView } from "./views/telemetry";

const TABS = ["functions", "rules", "devices", "telemetry"] as const;
type Tab = (typeof TABS)[number];

export class App {
  session: UiSession | null = null;
  private views: Partial<Record<Tab, View>> = {};
  private activeTab: Tab = "functions";
  private timer: ReturnType<typeof setInterval> | null = null;
  private main: HTMLElement;
  private nav: HTMLElement;

  constructor(
    root: HTMLElement,
    private fetchFn?: FetchLike,
    private pollIntervalMs = POLL_INTERVAL_MS,
  ) {
    this.nav = el("nav", { class: "topbar" });
    this.main = el("main", { class: "main" });
    root.append(this.nav, this.main);
    this.renderLogin();
  }

  // -- login ---------------------------------------------------------------

  renderLogin(message?: string): void {
    this.stopPolling();
    this.session = null;
    this.views = {};
    clear(this.nav);
    clear(this.main);
    const base = el("input", { class: "login-base", value: "/api", placeholder: "API base URL" });
    const token = el("input", { class: "login-token", type: "password", placeholder: "admin token" });
    const error = el("div", { class: "error-box login-error" });
    if (message) error.textContent = message;
    const connect = el("button", {
      class: "login-connect",
      onclick: () => void this.connect(base.value.trim().replace(/\/$/, ""), token.value, error),
    }, "connect");
    this.main.append(
      el("div", { class: "login" },
        el("h1", {}, "fnfleet admin"),
        error,
        el("label", {}, "API base URL"), base,
        el("label", {}, "Admin token"), token,
        connect,
      ),
    );
  }

  private async connect(baseUrl: string, token: string, error: HTMLElement): Promise<void> {
    const session = new UiSession(baseUrl, token, this.fetchFn);
    try {
      await session.api.listFunctions(); // validates the token
    } catch (err) {
      error.textContent = err instanceof Error ? err.message : String(err);
      return;
    }
    this.session = session;
    this.renderShell();
    await this.showTab("functions");
    this.startPolling();
  }

  // -- shell ---------------------------------------------------------------

  private renderShell(): void {
    clear(this.nav);
    clear(this.main);
    for (const tab of TABS) {
      this.nav.append(
        el("button", {
          class: `tab tab-${tab}`,
          onclick: () => void this.showTab(tab),
        }, tab),
      );
    }
    this.nav.append(
      el("button", { class: "logout", onclick: () => this.renderLogin() }, "log out"),
    );
  }

  async showTab(tab: Tab): Promise<void> {
    if (!this.session) return;
    this.activeTab = tab;
    for (const button of this.nav.querySelectorAll(".tab")) {
      button.classList.toggle("active", button.classList.contains(`tab-${tab}`));
    }
    const view = this.view(tab);
    clear(this.main);
    this.main.append(view.root);
    await view.refresh();
  }

  view(tab: Tab): View {
    let view = this.views[tab];
    if (!view) {
      const ctx = {
        session: this.session!,
        onAuthFailure: () => this.renderLogin("session expired: enter the admin token again"),
      };
      view =
        tab === "functions" ? new FunctionsView(ctx)
        : tab === "rules" ? new RulesView(ctx)
        : tab === "devices" ? new DevicesView(ctx)
        : new TelemetryView(ctx);
      this.views[tab] = view;
    }
    return view;
  }

  // -- polling ---------------------------------------------------------------

  startPolling(): void {
    this.stopPolling();
    this.timer = setInterval(() => void this.pollTick(), this.pollIntervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async pollTick(): Promise<void> {
    if (!this.session) return;
    const view = this.views[this.activeTab];
    if (view) await view.refresh();
  }
}
