/** Scripted fetch mock emulating the service's session semantics. */

import type { DiagramPoint, FetchLike } from "../src/api.js";

interface FrameState {
  meanAlpha: number;
  kind: DiagramPoint["kind"];
  values: number[];
}

export class MockServer {
  frames: FrameState[] = [];
  channels = ["brow", "smile", "jaw"];
  rigName = "mock-rig";
  ledger: { frame: number; target: number; auto: number; value: number }[] = [];
  applied = false;
  requests: { method: string; path: string; body?: unknown }[] = [];

  constructor(frameCount = 10) {
    for (let i = 0; i < frameCount; i++) {
      const keyframe = i % 5 === 0 || i === frameCount - 1;
      this.frames.push({
        meanAlpha: 0.3,
        kind: keyframe ? "keyframe" : "plain",
        values: [0.3, 0.3, 0.3],
      });
    }
  }

  diagram(): DiagramPoint[] {
    return this.frames.map((f, i) => ({
      frame_index: i,
      mean_alpha: f.meanAlpha,
      kind: f.kind,
    }));
  }

  private respond(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.requests.push({ method, path, body });

    let m: RegExpMatchArray | null;
    if ((m = path.match(/^\/projects\/([^/]+)$/)) && method === "GET") {
      return this.respond(200, {
        id: m[1],
        status: "initialized",
        rig_name: this.rigName,
        channels: this.channels,
        frame_count: this.frames.length,
      });
    }
    if (path.match(/^\/projects\/[^/]+\/diagram$/) && method === "GET") {
      return this.respond(200, this.diagram());
    }
    if ((m = path.match(/^\/projects\/[^/]+\/frames\/(\d+)\/mesh$/))) {
      const frame = Number(m[1]);
      if (frame >= this.frames.length) {
        return this.respond(400, { detail: `frame ${frame} out of range` });
      }
      return this.respond(200, {
        vertices: [0, 0, 0, 1, 0, 0, 0, 1, 0],
        faces: [[0, 1, 2]],
        channel_names: this.channels,
        channel_values: this.frames[frame].values,
        pose: {
          rotation: [
            [1, 0, 0],
            [0, 1, 0],
            [0, 0, 1],
          ],
          translation: [0, 0],
          scale: 1,
        },
      });
    }
    if (path.match(/^\/projects\/[^/]+\/adjust$/) && method === "POST") {
      const { frame, target, value } = body as {
        frame: number;
        target: number;
        value: number;
      };
      if (value < 0 || value > 1) {
        return this.respond(400, {
          detail: `value must lie in [0, 1], got ${value}`,
        });
      }
      const state = this.frames[frame];
      const previous = state.values[target];
      this.ledger.push({ frame, target, auto: previous, value });
      state.values = [...state.values];
      state.values[target] = value;
      state.meanAlpha =
        state.values.reduce((a, b) => a + b, 0) / state.values.length;
      state.kind = "adjusted";
      this.applied = false;
      return this.respond(200, { frame, target, value, previous });
    }
    if (path.match(/^\/projects\/[^/]+\/preference\/apply$/)) {
      if (this.applied || this.ledger.length === 0) {
        return this.respond(200, { applied: false, delta: null, touched: null });
      }
      const delta = this.channels.map(() => 0);
      const counts = this.channels.map(() => 0);
      for (const r of this.ledger) {
        delta[r.target] += r.value - r.auto;
        counts[r.target] += 1;
      }
      const touched = counts.map((c) => c > 0);
      for (let c = 0; c < delta.length; c++) {
        delta[c] = counts[c] > 0 ? delta[c] / counts[c] : 0;
      }
      for (const f of this.frames) {
        f.values = f.values.map((v, c) =>
          touched[c] ? Math.min(Math.max(v + delta[c], 0), 1) : v,
        );
        f.meanAlpha = f.values.reduce((a, b) => a + b, 0) / f.values.length;
      }
      this.applied = true;
      return this.respond(200, { applied: true, delta, touched });
    }
    if (path.match(/^\/projects\/[^/]+\/preference\/clear$/)) {
      const count = this.ledger.length;
      this.ledger = [];
      this.applied = false;
      return this.respond(200, { cleared_records: count });
    }
    if (path.match(/^\/projects\/[^/]+\/keyframes$/) && method === "POST") {
      const { frame } = body as { frame: number };
      if (frame < 0 || frame >= this.frames.length) {
        return this.respond(400, { detail: `frame ${frame} out of range` });
      }
      if (this.frames[frame].kind === "plain") {
        this.frames[frame].kind = "keyframe";
      }
      const keyframes = this.frames
        .map((f, i) => (f.kind !== "plain" ? i : -1))
        .filter((i) => i >= 0);
      return this.respond(200, { keyframes });
    }
    if (path.match(/^\/projects\/[^/]+\/export$/)) {
      return this.respond(200, {
        rig_name: this.rigName,
        fps: 25,
        channels: this.channels,
        frames: this.frames.map((f) => [...f.values]),
        poses: this.frames.map(() => ({
          axis_angle: [0, 0, 0],
          translation: [0, 0],
          scale: 1,
        })),
        keyframes: this.frames
          .map((f, i) => (f.kind !== "plain" ? i : -1))
          .filter((i) => i >= 0),
        adjustments: this.ledger.map((r) => ({
          frame_index: r.frame,
          channel_index: r.target,
          auto_value: r.auto,
          adjusted_value: r.value,
        })),
      });
    }
    return this.respond(404, { detail: `no route: ${method} ${path}` });
  };
}
