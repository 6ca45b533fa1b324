// Telemetry inspection: per device/metric time-range table plus a simple
// line chart, paginated at 100 rows per page.

import { ApiRequestError } from "../api";
import { drawLineChart } from "../chart";
import { clear, el, option } from "../dom";
import { ErrorBox } from "../forms";
import type { DeviceDoc, SampleDoc } from "../types";
import type { ViewContext } from "./context";

export const PAGE_SIZE = 100;

export class TelemetryView {
  readonly root: HTMLElement;
  private errors = new ErrorBox();
  private deviceSelect: HTMLSelectElement;
  private metricInput: HTMLInputElement;
  private fromInput: HTMLInputElement;
  private toInput: HTMLInputElement;
  private tableBox: HTMLElement;
  private pagerBox: HTMLElement;
  private canvas: HTMLCanvasElement;
  private samples: SampleDoc[] = [];
  private page = 0;

  constructor(private ctx: ViewContext) {
    this.deviceSelect = el("select", { class: "tel-device" });
    this.metricInput = el("input", { class: "tel-metric", placeholder: "metric, e.g. motion" });
    this.fromInput = el("input", { class: "tel-from", placeholder: "from (ISO-8601, optional)" });
    this.toInput = el("input", { class: "tel-to", placeholder: "to (ISO-8601, optional)" });
    this.tableBox = el("div", { class: "tel-table" });
    this.pagerBox = el("div", { class: "tel-pager" });
    this.canvas = el("canvas", { class: "tel-chart", width: "640", height: "160" });
    this.root = el(
      "div",
      { class: "view view-telemetry" },
      el("h2", {}, "Telemetry"),
      this.errors.root,
      el("div", { class: "row" },
        this.deviceSelect, this.metricInput, this.fromInput, this.toInput,
      ),
      this.canvas,
      this.pagerBox,
      this.tableBox,
    );
  }

  async refresh(): Promise<void> {
    try {
      const devices = await this.ctx.session.load("devices", (api) => api.listDevices());
      this.fillDevices(devices);
      const device = this.deviceSelect.value;
      const metric = this.metricInput.value.trim();
      if (!device || !metric) {
        this.renderEmpty("Pick a device and metric to inspect.");
        return;
      }
      const result = await this.ctx.session.load(
        `telemetry:${device}:${metric}:${this.fromInput.value}:${this.toInput.value}`,
        (api) =>
          api.queryTelemetry(
            device,
            metric,
            this.fromInput.value.trim() || undefined,
            this.toInput.value.trim() || undefined,
          ),
      );
      this.samples = result.samples;
      this.renderSamples();
    } catch (err) {
      this.handle(err);
    }
  }

  private fillDevices(devices: DeviceDoc[]): void {
    const current = this.deviceSelect.value;
    clear(this.deviceSelect);
    for (const device of devices) {
      this.deviceSelect.append(option(device.id, device.address));
    }
    if (current) this.deviceSelect.value = current;
  }

  private renderEmpty(message: string): void {
    clear(this.tableBox);
    clear(this.pagerBox);
    this.tableBox.append(el("p", { class: "empty" }, message));
    drawLineChart(this.canvas, []);
  }

  private renderSamples(): void {
    if (this.samples.length === 0) {
      this.renderEmpty("No samples in this range.");
      return;
    }
    const pages = Math.max(1, Math.ceil(this.samples.length / PAGE_SIZE));
    if (this.page >= pages) this.page = pages - 1;
    const start = this.page * PAGE_SIZE;
    const visible = this.samples.slice(start, start + PAGE_SIZE);

    clear(this.tableBox);
    const body = el("tbody");
    for (const sample of visible) {
      body.append(el("tr", {}, el("td", {}, sample.t), el("td", {}, String(sample.v))));
    }
    this.tableBox.append(
      el("table", {},
        el("thead", {}, el("tr", {}, el("th", {}, "timestamp"), el("th", {}, "value"))),
        body,
      ),
    );

    clear(this.pagerBox);
    this.pagerBox.append(
      el("button", {
        class: "pager-prev",
        disabled: this.page === 0,
        onclick: () => { this.page -= 1; this.renderSamples(); },
      }, "prev"),
      el("span", { class: "pager-label" }, ` page ${this.page + 1} / ${pages} (${this.samples.length} samples) `),
      el("button", {
        class: "pager-next",
        disabled: this.page >= pages - 1,
        onclick: () => { this.page += 1; this.renderSamples(); },
      }, "next"),
    );
    drawLineChart(this.canvas, this.samples);
  }

  private handle(err: unknown): void {
    if (err instanceof ApiRequestError && err.status === 401) {
      this.ctx.onAuthFailure();
      return;
    }
    this.errors.show(err instanceof Error ? err.message : String(err));
  }
}
