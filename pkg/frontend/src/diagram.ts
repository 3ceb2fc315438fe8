/** Frame-diagram scatter: one dot per frame, colored by its edit state.
 *
 * Horizontal axis is the frame index, vertical axis the mean blend weight;
 * plain frames are white, keyframes green, user-adjusted frames red, with
 * precedence adjusted > keyframe > plain.  A vertical line marks the
 * current frame.
 */

import type { DiagramPoint } from "./api.js";

export const DOT_COLORS: Record<DiagramPoint["kind"], string> = {
  plain: "#ffffff",
  keyframe: "#37c871",
  adjusted: "#e53935",
};

export interface DiagramDot {
  frameIndex: number;
  x: number; // [0, 1] across the plot width
  y: number; // [0, 1] from the bottom
  color: string;
  kind: DiagramPoint["kind"];
}

export interface DiagramView {
  dots: DiagramDot[];
  progressX: number | null; // [0, 1], null when no current frame
}

export function dotColor(kind: DiagramPoint["kind"]): string {
  return DOT_COLORS[kind];
}

export function buildDiagram(
  points: DiagramPoint[],
  currentFrame: number | null,
): DiagramView {
  if (points.length === 0) {
    return { dots: [], progressX: null };
  }
  const span = Math.max(points.length - 1, 1);
  const dots = points.map((p) => ({
    frameIndex: p.frame_index,
    x: p.frame_index / span,
    y: p.mean_alpha,
    color: dotColor(p.kind),
    kind: p.kind,
  }));
  const progressX =
    currentFrame === null ? null : Math.min(Math.max(currentFrame / span, 0), 1);
  return { dots, progressX };
}

/** Map a click position (in plot-width fractions) to the nearest frame. */
export function frameAtPosition(points: DiagramPoint[], x: number): number {
  if (points.length === 0) {
    throw new Error("empty diagram");
  }
  const span = Math.max(points.length - 1, 1);
  const index = Math.round(Math.min(Math.max(x, 0), 1) * span);
  return points[Math.min(index, points.length - 1)].frame_index;
}
