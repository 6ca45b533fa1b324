// Session cache: freshness window and invalidation on mutation.

import { describe, expect, it } from "vitest";

import { UiSession } from "../src/session";
import { FakePlane } from "./fakeplane";

function makeSession(plane: FakePlane) {
  let now = 0;
  const session = new UiSession("/api", plane.token, plane.fetch, () => now);
  return { session, advance: (ms: number) => (now += ms) };
}

describe("UiSession cache", () => {
  it("serves cached reads within the freshness window", async () => {
    const plane = new FakePlane();
    const { session } = makeSession(plane);
    await session.load("functions", (api) => api.listFunctions());
    await session.load("functions", (api) => api.listFunctions());
    expect(plane.seenUrls.length).toBe(1);
  });

  it("re-fetches once the entry is stale", async () => {
    const plane = new FakePlane();
    const { session, advance } = makeSession(plane);
    await session.load("functions", (api) => api.listFunctions());
    advance(3000);
    await session.load("functions", (api) => api.listFunctions());
    expect(plane.seenUrls.length).toBe(2);
  });

  it("invalidates every cached read after a mutating call", async () => {
    const plane = new FakePlane();
    plane.addDevice("10.0.0.7:9000");
    const { session } = makeSession(plane);
    await session.load("functions", (api) => api.listFunctions());
    await session.load("devices", (api) => api.listDevices());
    expect(session.cachedKeys().sort()).toEqual(["devices", "functions"]);

    await session.mutate((api) =>
      api.createFunction({
        name: "f", source: "x", interpreter_template: "run {file}", params: [],
      }),
    );
    expect(session.cachedKeys()).toEqual([]);
    const functions = await session.load("functions", (api) => api.listFunctions());
    expect(functions.length).toBe(1);
  });

  it("does not clear the cache when a mutation fails", async () => {
    const plane = new FakePlane();
    const { session } = makeSession(plane);
    await session.load("functions", (api) => api.listFunctions());
    await expect(
      session.mutate((api) =>
        api.createFunction({
          name: "", source: "", interpreter_template: "run {file}", params: [],
        }),
      ),
    ).rejects.toThrow();
    expect(session.cachedKeys()).toEqual(["functions"]);
  });
});
