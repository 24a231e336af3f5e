/** In-memory stand-in for the orchestrator API, used with mocked fetch. */

import { FetchLike } from "../src/api.js";
import { BBox, Summary, ToolCall } from "../src/types.js";

export function baseSummary(): Summary {
  return {
    projectId: "p1",
    outcome: "composed",
    selection: 0,
    completedStages: ["design-mapping", "composition"],
    errors: {},
    plans: [
      {
        index: 0,
        chartId: "bar-0",
        elementId: "group-0",
        overview: "Bind the bars to the trees",
        scores: { spatial: 0.4, shape: 0.5, layout: 0.4, semantic: 0.3, total: 0.4003 },
        selected: true,
      },
      {
        index: 1,
        chartId: "line-0",
        elementId: "group-0",
        overview: "Trace the trend across the scene",
        scores: { spatial: 0.4, shape: 0.5, layout: 0.4, semantic: 0.3, total: 0.4002 },
        selected: false,
      },
      {
        index: 2,
        chartId: "area-0",
        elementId: "group-0",
        overview: "Fill the skyline",
        scores: { spatial: 0.5, shape: 0.5, layout: 0.4, semantic: 0.3, total: 0.41 },
        selected: false,
      },
    ],
    toolCalls: [],
    telemetryTotals: { elapsed_seconds: 0.2, input_tokens: 100, output_tokens: 20 },
    evaluation: {
      data_accuracy: { score: 4, explanation: "ok", conflict_detected: true },
      readability: { score: 5, explanation: "clear" },
    },
    markBounds: {
      "mark-0": { xmin: 290, ymin: 270, xmax: 510, ymax: 650 },
      "mark-1": { xmin: 700, ymin: 300, xmax: 900, ymax: 650 },
    },
  };
}

export interface MockServer {
  fetch: FetchLike;
  state: Summary;
  refineBodies: unknown[];
  selectBodies: unknown[];
}

function applyCall(bounds: Record<string, BBox>, call: ToolCall): void {
  if (call.name !== "editSvgPosition") {
    throw new Error(`mock server only supports editSvgPosition, got ${call.name}`);
  }
  const [markClass, x, y] = call.args as [string, number, number];
  const b = bounds[markClass];
  if (b === undefined) {
    throw new Error(`unknown mark ${markClass}`);
  }
  bounds[markClass] = {
    xmin: x,
    ymin: y,
    xmax: x + (b.xmax - b.xmin),
    ymax: y + (b.ymax - b.ymin),
  };
}

export function makeMockServer(): MockServer {
  const server: MockServer = {
    state: baseSummary(),
    refineBodies: [],
    selectBodies: [],
    fetch: async (input, init) => {
      const url = new URL(input, "http://mock");
      const respond = (body: unknown, status = 200) => ({
        ok: status < 400,
        status,
        json: async () => body,
        text: async () => JSON.stringify(body),
      });
      if (url.pathname === "/projects/p1" && (init?.method ?? "GET") === "GET") {
        return respond(server.state);
      }
      if (url.pathname === "/projects/p1/refine") {
        const body = JSON.parse(init?.body ?? "{}");
        server.refineBodies.push(body);
        for (const call of body.calls as ToolCall[]) {
          applyCall(server.state.markBounds!, call);
          server.state.toolCalls.push(call);
        }
        return respond(server.state);
      }
      if (url.pathname === "/projects/p1/select") {
        const body = JSON.parse(init?.body ?? "{}");
        server.selectBodies.push(body);
        const index = body.planIndex as number;
        if (index < 0 || index >= server.state.plans.length) {
          return respond({ detail: "plan index out of range" }, 400);
        }
        server.state.selection = index;
        server.state.plans = server.state.plans.map((p) => ({
          ...p,
          selected: p.index === index,
        }));
        return respond(server.state);
      }
      return respond({ detail: "not found" }, 404);
    },
  };
  return server;
}
