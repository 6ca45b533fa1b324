// UI round-trip acceptance: create the monitor function with two params,
// build the motion rule, assign a pending device - verifying each step via
// direct API GETs - then inject a motion event and watch the telemetry
// view update within one polling interval.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/app";
import { FakePlane } from "./fakeplane";

const POLL_MS = 3000;

const flush = () => vi.advanceTimersByTimeAsync(0);

async function loginWith(plane: FakePlane): Promise<void> {
  (document.querySelector(".login-base") as HTMLInputElement).value = "/api";
  (document.querySelector(".login-token") as HTMLInputElement).value = plane.token;
  (document.querySelector(".login-connect") as HTMLButtonElement).click();
  await flush();
}

async function openTab(name: string): Promise<void> {
  (document.querySelector(`.tab-${name}`) as HTMLButtonElement).click();
  await flush();
}

describe("admin UI round-trip", () => {
  beforeEach(() => {
    vi.useFakeTimers();
    document.body.innerHTML = '<div id="app"></div>';
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("drives function, rule, assignment, and telemetry through the UI", async () => {
    const plane = new FakePlane();
    const rb1 = plane.addDevice("RB1:9100", ["pir-motion;pir-port=4", "camera"]);
    const rb2 = plane.addDevice("RB2:9101", ["camera", "relay"]);
    const directApi = new ApiClient("/api", plane.token, plane.fetch);

    const app = new App(document.getElementById("app")!, plane.fetch, POLL_MS);
    await loginWith(plane);
    expect(document.querySelector(".view-functions")).toBeTruthy();

    // 1. create the motion-monitor function with two parameters
    (document.querySelector(".fn-name") as HTMLInputElement).value = "motion-monitor";
    (document.querySelector(".fn-source") as HTMLTextAreaElement).value = "print('monitor')\n";
    (document.querySelector(".fn-template") as HTMLInputElement).value =
      "python {file} {port} {interval}";
    const addParam = document.querySelector(".add-param") as HTMLButtonElement;
    addParam.click();
    addParam.click();
    const rows = document.querySelectorAll("tr.param-row");
    (rows[0].querySelector(".p-name") as HTMLInputElement).value = "port";
    (rows[0].querySelector(".p-required") as HTMLInputElement).checked = true;
    (rows[1].querySelector(".p-name") as HTMLInputElement).value = "interval";
    (rows[1].querySelector(".p-default") as HTMLInputElement).value = "10";
    (document.querySelector(".fn-submit") as HTMLButtonElement).click();
    await flush();

    // verified via a direct API GET, not through the UI
    const functions = await directApi.listFunctions();
    expect(functions.length).toBe(1);
    expect(functions[0].name).toBe("motion-monitor");
    expect(functions[0].params.map((p) => p.name)).toEqual(["port", "interval"]);

    // 2. build the motion -> record(A,B,5) + notify rule
    await openTab("rules");
    (document.querySelector(".rule-device") as HTMLSelectElement).value = rb1.id;
    (document.querySelector(".rule-metric") as HTMLInputElement).value = "motion";
    (document.querySelector(".rule-comparator") as HTMLSelectElement).value = "=";
    (document.querySelector(".rule-threshold") as HTMLInputElement).value = "1";
    (document.querySelector(".rule-cooldown") as HTMLInputElement).value = "5";
    const invokeAction = document.querySelector(".invoke-action") as HTMLInputElement;
    const invokeParams = document.querySelector(".invoke-params") as HTMLInputElement;
    const invokeTarget = document.querySelector(".invoke-device") as HTMLSelectElement;
    const addInvoke = document.querySelector(".add-invoke") as HTMLButtonElement;
    invokeTarget.value = rb1.id;
    invokeAction.value = "record";
    invokeParams.value = '{"duration": 5}';
    addInvoke.click();
    invokeTarget.value = rb2.id;
    invokeAction.value = "record";
    invokeParams.value = '{"duration": 5}';
    addInvoke.click();
    (document.querySelector(".notify-template") as HTMLInputElement).value = "motion at {device}";
    (document.querySelector(".add-notify") as HTMLButtonElement).click();
    (document.querySelector(".rule-submit") as HTMLButtonElement).click();
    await flush();

    const rules = await directApi.listInteropRules();
    expect(rules.length).toBe(1);
    expect(rules[0].metric).toBe("motion");
    expect(rules[0].cooldown).toBe(5);
    expect(rules[0].actions.map((a) => a.kind)).toEqual(["invoke", "invoke", "notify"]);

    // 3. assign the function to a pending device through the dialog
    await openTab("devices");
    const assignButtons = document.querySelectorAll(".assign-open");
    expect(assignButtons.length).toBe(2); // both devices pending
    (assignButtons[0] as HTMLButtonElement).click();
    const port = document.querySelector('[data-param="port"]') as HTMLInputElement;
    port.value = "4";
    port.dispatchEvent(new Event("input"));
    (document.querySelector(".assign-submit") as HTMLButtonElement).click();
    await flush();

    const active = await directApi.listDevices("active");
    expect(active.map((d) => d.address)).toEqual(["RB1:9100"]);
    const pending = await directApi.listDevices("pending");
    expect(pending.map((d) => d.address)).toEqual(["RB2:9101"]);

    // 4. inject a motion event; the telemetry view picks it up within one poll
    await openTab("telemetry");
    (document.querySelector(".tel-device") as HTMLSelectElement).value = rb1.id;
    (document.querySelector(".tel-metric") as HTMLInputElement).value = "motion";
    await vi.advanceTimersByTimeAsync(POLL_MS); // first poll: still empty
    expect(document.querySelector(".tel-table")!.textContent).toContain("No samples");

    plane.injectSample(rb1.id, "motion", "1970-01-01T00:00:01Z", 1);
    await vi.advanceTimersByTimeAsync(POLL_MS); // one polling interval later
    const table = document.querySelector(".tel-table")!;
    expect(table.textContent).toContain("1970-01-01T00:00:01Z");
    expect(document.querySelectorAll(".tel-table tbody tr").length).toBe(1);

    // the admin token never appears in the rendered document or any URL
    expect(document.body.innerHTML).not.toContain(plane.token);
    for (const url of plane.seenUrls) {
      expect(url).not.toContain(plane.token);
    }
    app.stopPolling();
  });

  it("returns to the login screen when the token stops working", async () => {
    const plane = new FakePlane();
    const app = new App(document.getElementById("app")!, plane.fetch, POLL_MS);
    await loginWith(plane);
    expect(document.querySelector(".view-functions")).toBeTruthy();

    plane.token = "rotated-away";
    await vi.advanceTimersByTimeAsync(POLL_MS);
    expect(document.querySelector(".login")).toBeTruthy();
    expect(document.querySelector(".login-error")!.textContent).toContain("token");
    app.stopPolling();
  });
});
