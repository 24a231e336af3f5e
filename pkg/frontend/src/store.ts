/** Client state: a cached summary plus an undo stack of applied gestures.
 *
 * Every mutation round-trips through the server and replaces the cached
 * summary with the server's reply, so a reload always reproduces state.
 */

import { StudioClient } from "./api.js";
import { DragGesture, endDrag, inverseCall } from "./editor.js";
import { Summary, ToolCall } from "./types.js";

export class StudioStore {
  summary: Summary | null = null;
  private undoStack: DragGesture[] = [];

  constructor(
    private readonly client: StudioClient,
    private readonly projectId: string,
  ) {}

  async load(): Promise<Summary> {
    this.summary = await this.client.getProject(this.projectId);
    return this.summary;
  }

  async selectPlan(planIndex: number): Promise<Summary> {
    this.summary = await this.client.selectPlan(this.projectId, planIndex);
    this.undoStack = [];
    return this.summary;
  }

  /** Commit one finished drag gesture as exactly one refine call. */
  async commitDrag(gesture: DragGesture): Promise<Summary | null> {
    const call = endDrag(gesture);
    if (call === null) {
      return null;
    }
    this.summary = await this.client.refine(this.projectId, [call]);
    this.undoStack.push(gesture);
    return this.summary;
  }

  async undo(): Promise<Summary | null> {
    const gesture = this.undoStack.pop();
    if (gesture === undefined) {
      return null;
    }
    this.summary = await this.client.refine(this.projectId, [inverseCall(gesture)]);
    return this.summary;
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  markBounds(markClass: string) {
    return this.summary?.markBounds?.[markClass] ?? null;
  }

  appliedCalls(): ToolCall[] {
    return this.summary?.toolCalls ?? [];
  }
}
