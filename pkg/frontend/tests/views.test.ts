// View behavior against the fake control plane.

import { beforeEach, describe, expect, it } from "vitest";

import { UiSession } from "../src/session";
import { DevicesView } from "../src/views/devices";
import { FunctionsView } from "../src/views/functions";
import { RulesView } from "../src/views/rules";
import { PAGE_SIZE, TelemetryView } from "../src/views/telemetry";
import { FakePlane } from "./fakeplane";

function setup(plane: FakePlane) {
  let now = 0;
  const session = new UiSession("/api", plane.token, plane.fetch, () => now);
  const ctx = {
    session,
    onAuthFailure: () => {
      authFailures.push(1);
    },
  };
  const authFailures: number[] = [];
  return { session, ctx, authFailures, advance: (ms: number) => (now += ms) };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

const MONITOR = {
  name: "motion-monitor",
  source: "print('monitor')\n",
  interpreter_template: "python {file} {port} {interval}",
  params: [
    { name: "port", kind: "integer" as const, required: true },
    { name: "interval", kind: "integer" as const, required: false, default: 10 },
  ],
};

describe("FunctionsView", () => {
  it("lists functions from the API", async () => {
    const plane = new FakePlane();
    const { ctx } = setup(plane);
    await ctx.session.api.createFunction(MONITOR);
    const view = new FunctionsView(ctx);
    document.body.append(view.root);
    await view.refresh();
    expect(document.querySelector('[data-function="motion-monitor"]')).toBeTruthy();
    expect(view.root.textContent).toContain("port, interval");
  });

  it("shows the server's inline error for duplicate param names and persists nothing", async () => {
    const plane = new FakePlane();
    const { ctx } = setup(plane);
    const view = new FunctionsView(ctx);
    document.body.append(view.root);
    await view.refresh();

    (view.root.querySelector(".fn-name") as HTMLInputElement).value = "dupe";
    (view.root.querySelector(".fn-template") as HTMLInputElement).value = "python {file} {p}";
    const table = view.root.querySelector(".param-table")!;
    (table.querySelector(".add-param") as HTMLButtonElement).click();
    (table.querySelector(".add-param") as HTMLButtonElement).click();
    for (const row of table.querySelectorAll("tr.param-row")) {
      (row.querySelector(".p-name") as HTMLInputElement).value = "p";
    }
    (view.root.querySelector(".fn-submit") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));

    const error = view.root.querySelector(".error-box") as HTMLElement;
    expect(error.textContent).toContain("duplicate parameter name");
    expect(plane.functions).toEqual([]);
  });

  it("routes a 401 to the auth-failure handler", async () => {
    const plane = new FakePlane();
    const { ctx, authFailures } = setup(plane);
    plane.token = "rotated";  // session token is now wrong
    const view = new FunctionsView(ctx);
    await view.refresh();
    expect(authFailures.length).toBe(1);
  });
});

describe("RulesView", () => {
  it("disables submit while the action list is empty", async () => {
    const plane = new FakePlane();
    plane.addDevice("10.0.0.1:9000");
    const { ctx } = setup(plane);
    const view = new RulesView(ctx);
    document.body.append(view.root);
    await view.refresh();

    const submit = view.root.querySelector(".rule-submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(true);

    (view.root.querySelector(".notify-template") as HTMLInputElement).value = "hi {device}";
    (view.root.querySelector(".add-notify") as HTMLButtonElement).click();
    expect(submit.disabled).toBe(false);

    (view.root.querySelector(".remove-action") as HTMLButtonElement).click();
    expect(submit.disabled).toBe(true);
  });

  it("creates a rule with ordered actions and lists it", async () => {
    const plane = new FakePlane();
    const a = plane.addDevice("10.0.0.1:9000");
    plane.addDevice("10.0.0.2:9000");
    const { ctx } = setup(plane);
    const view = new RulesView(ctx);
    document.body.append(view.root);
    await view.refresh();

    (view.root.querySelector(".rule-metric") as HTMLInputElement).value = "motion";
    (view.root.querySelector(".rule-threshold") as HTMLInputElement).value = "1";
    (view.root.querySelector(".invoke-device") as HTMLSelectElement).value = a.id;
    (view.root.querySelector(".invoke-action") as HTMLInputElement).value = "record";
    (view.root.querySelector(".invoke-params") as HTMLInputElement).value = '{"duration": 5}';
    (view.root.querySelector(".add-invoke") as HTMLButtonElement).click();
    (view.root.querySelector(".notify-template") as HTMLInputElement).value = "motion at {device}";
    (view.root.querySelector(".add-notify") as HTMLButtonElement).click();
    (view.root.querySelector(".rule-submit") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));

    expect(plane.rules.length).toBe(1);
    expect(plane.rules[0].actions.map((x) => x.kind)).toEqual(["invoke", "notify"]);
    await view.refresh();
    expect(view.root.querySelectorAll(".rule-card").length).toBe(1);
  });

  it("deletes a rule from the list", async () => {
    const plane = new FakePlane();
    const a = plane.addDevice("10.0.0.1:9000");
    plane.rules.push({
      id: "rule-1", device_id: a.id, metric: "m", comparator: "=",
      threshold: 1, actions: [{ kind: "notify", message_template: "x" }], cooldown: 0,
    });
    const { ctx } = setup(plane);
    const view = new RulesView(ctx);
    document.body.append(view.root);
    await view.refresh();
    (view.root.querySelector(".delete-rule") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));
    expect(plane.rules).toEqual([]);
  });
});

describe("DevicesView", () => {
  it("blocks assignment while a required binding is missing", async () => {
    const plane = new FakePlane();
    plane.addDevice("10.0.0.1:9000", ["camera"]);
    const { ctx } = setup(plane);
    await ctx.session.api.createFunction(MONITOR);
    const view = new DevicesView(ctx);
    document.body.append(view.root);
    await view.refresh();

    (view.root.querySelector(".assign-open") as HTMLButtonElement).click();
    const assign = view.root.querySelector(".assign-submit") as HTMLButtonElement;
    expect(assign.disabled).toBe(true);  // port is required and empty

    const port = view.root.querySelector('[data-param="port"]') as HTMLInputElement;
    port.value = "4";
    port.dispatchEvent(new Event("input"));
    expect(assign.disabled).toBe(false);
  });

  it("assigning moves the device out of the pending list", async () => {
    const plane = new FakePlane();
    plane.addDevice("10.0.0.1:9000", ["camera"]);
    const { ctx, advance } = setup(plane);
    await ctx.session.api.createFunction(MONITOR);
    const view = new DevicesView(ctx);
    document.body.append(view.root);
    await view.refresh();

    (view.root.querySelector(".assign-open") as HTMLButtonElement).click();
    const port = view.root.querySelector('[data-param="port"]') as HTMLInputElement;
    port.value = "4";
    port.dispatchEvent(new Event("input"));
    (view.root.querySelector(".assign-submit") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));

    expect(plane.deployments.length).toBe(1);
    expect(plane.deployments[0].bindings).toEqual({ port: 4, interval: 10 });

    advance(5000);  // past the cache window, as a poll tick would be
    await view.refresh();
    expect(view.root.querySelector(".pending-devices .device-card")).toBeNull();
    expect(
      (view.root.querySelector(".active-devices .device-card") as HTMLElement).dataset.address,
    ).toBe("10.0.0.1:9000");
  });
});

describe("TelemetryView", () => {
  it("paginates at 100 rows per page", async () => {
    const plane = new FakePlane();
    const device = plane.addDevice("10.0.0.1:9000");
    for (let i = 0; i < 250; i++) {
      const ts = new Date(i * 1000).toISOString().replace(".000", "");
      plane.injectSample(device.id, "motion", ts, i % 2);
    }
    const { ctx } = setup(plane);
    const view = new TelemetryView(ctx);
    document.body.append(view.root);
    await view.refresh();  // fills the device select
    (view.root.querySelector(".tel-metric") as HTMLInputElement).value = "motion";
    await view.refresh();

    expect(view.root.querySelectorAll("tbody tr").length).toBe(PAGE_SIZE);
    expect(view.root.textContent).toContain("page 1 / 3 (250 samples)");

    (view.root.querySelector(".pager-next") as HTMLButtonElement).click();
    expect(view.root.textContent).toContain("page 2 / 3");
    (view.root.querySelector(".pager-next") as HTMLButtonElement).click();
    expect(view.root.querySelectorAll("tbody tr").length).toBe(50);
    expect((view.root.querySelector(".pager-next") as HTMLButtonElement).disabled).toBe(true);
  });

  it("shows an empty state for a range with no samples", async () => {
    const plane = new FakePlane();
    plane.addDevice("10.0.0.1:9000");
    const { ctx } = setup(plane);
    const view = new TelemetryView(ctx);
    document.body.append(view.root);
    await view.refresh();
    (view.root.querySelector(".tel-metric") as HTMLInputElement).value = "motion";
    await view.refresh();
    expect(view.root.textContent).toContain("No samples in this range.");
  });
});
