/** Canvas editor drag handling.
 *
 * A full pointer gesture (down, any number of moves, up) collapses to a
 * single editSvgPosition call; the server document stays authoritative.
 */

import { BBox, ToolCall } from "./types.js";

export interface DragGesture {
  markClass: string;
  startBounds: BBox;
  lastX: number;
  lastY: number;
  dx: number;
  dy: number;
}

export function beginDrag(markClass: string, bounds: BBox, x: number, y: number): DragGesture {
  return { markClass, startBounds: bounds, lastX: x, lastY: y, dx: 0, dy: 0 };
}

export function moveDrag(gesture: DragGesture, x: number, y: number): DragGesture {
  return {
    ...gesture,
    lastX: x,
    lastY: y,
    dx: gesture.dx + (x - gesture.lastX),
    dy: gesture.dy + (y - gesture.lastY),
  };
}

/** The one refine call for the finished gesture, or null for a no-op click. */
export function endDrag(gesture: DragGesture): ToolCall | null {
  if (gesture.dx === 0 && gesture.dy === 0) {
    return null;
  }
  return {
    name: "editSvgPosition",
    args: [
      gesture.markClass,
      gesture.startBounds.xmin + gesture.dx,
      gesture.startBounds.ymin + gesture.dy,
    ],
  };
}

/** The call that puts a moved mark back where the gesture started. */
export function inverseCall(gesture: DragGesture): ToolCall {
  return {
    name: "editSvgPosition",
    args: [gesture.markClass, gesture.startBounds.xmin, gesture.startBounds.ymin],
  };
}

export function expectedBounds(gesture: DragGesture): BBox {
  const { startBounds: b, dx, dy } = gesture;
  return { xmin: b.xmin + dx, ymin: b.ymin + dy, xmax: b.xmax + dx, ymax: b.ymax + dy };
}
