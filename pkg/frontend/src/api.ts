/** Typed client over the orchestrator HTTP API. */

import { Summary, SummarySchema, ToolCall } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown>; text(): Promise<string> }>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

let requestCounter = 0;

/** Unique id so retried mutations are idempotent on the server. */
export function nextRequestId(): string {
  requestCounter += 1;
  return `studio-${Date.now()}-${requestCounter}`;
}

export class StudioClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(path: string, init?: Parameters<FetchLike>[1]): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response.json();
  }

  private async mutate(path: string, body: Record<string, unknown>): Promise<Summary> {
    const raw = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ...body, requestId: nextRequestId() }),
    });
    return SummarySchema.parse(raw);
  }

  async getProject(projectId: string): Promise<Summary> {
    return SummarySchema.parse(await this.request(`/projects/${projectId}`));
  }

  async selectPlan(projectId: string, planIndex: number): Promise<Summary> {
    return this.mutate(`/projects/${projectId}/select`, { planIndex });
  }

  async refine(projectId: string, calls: ToolCall[]): Promise<Summary> {
    return this.mutate(`/projects/${projectId}/refine`, { calls });
  }

  compositionUrl(projectId: string): string {
    return `${this.baseUrl}/projects/${projectId}/composition.svg`;
  }

  previewUrl(projectId: string): string {
    return `${this.baseUrl}/projects/${projectId}/preview.html`;
  }
}
