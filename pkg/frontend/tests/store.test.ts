import { describe, expect, it } from "vitest";

import { ApiError, StudioClient } from "../src/api.js";
import { beginDrag, moveDrag } from "../src/editor.js";
import { StudioStore } from "../src/store.js";
import { makeMockServer } from "./mockServer.js";

describe("store", () => {
  it("reload reproduces the server state after mutations", async () => {
    const server = makeMockServer();
    const client = new StudioClient("http://mock", server.fetch);
    const first = new StudioStore(client, "p1");
    await first.load();
    await first.selectPlan(2);
    let gesture = beginDrag("mark-0", first.markBounds("mark-0")!, 0, 0);
    gesture = moveDrag(gesture, 15, -5);
    await first.commitDrag(gesture);

    const reloaded = new StudioStore(client, "p1");
    const summary = await reloaded.load();
    expect(summary.selection).toBe(2);
    expect(summary.plans.find((p) => p.selected)!.index).toBe(2);
    expect(reloaded.markBounds("mark-0")).toEqual(first.markBounds("mark-0"));
    expect(reloaded.appliedCalls()).toEqual(first.appliedCalls());
  });

  it("selecting a plan resets the undo history", async () => {
    const server = makeMockServer();
    const store = new StudioStore(new StudioClient("http://mock", server.fetch), "p1");
    await store.load();
    let gesture = beginDrag("mark-0", store.markBounds("mark-0")!, 0, 0);
    gesture = moveDrag(gesture, 5, 5);
    await store.commitDrag(gesture);
    expect(store.canUndo()).toBe(true);
    await store.selectPlan(1);
    expect(store.canUndo()).toBe(false);
  });

  it("surfaces server errors with their status", async () => {
    const server = makeMockServer();
    const store = new StudioStore(new StudioClient("http://mock", server.fetch), "p1");
    await store.load();
    await expect(store.selectPlan(99)).rejects.toThrowError(ApiError);
  });
});
