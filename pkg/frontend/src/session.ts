/** Session controller: the state machine behind the control panel.
 *
 * Holds no authoritative data — every view is rebuilt from API responses,
 * and mutations update local state only after the server confirms.  One
 * mutation may be in flight at a time; controls are disabled meanwhile.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  AnimationExport,
  DiagramPoint,
  JobResponse,
  MeshPayload,
  ProjectInfo,
} from "./api.js";
import { buildDiagram, DiagramView } from "./diagram.js";
import { validateTargetField, validateValueField } from "./validation.js";

export type PlaybackState = "stopped" | "forward" | "backward";

export class Session {
  info: ProjectInfo | null = null;
  points: DiagramPoint[] = [];
  currentFrame = 0;
  playback: PlaybackState = "stopped";
  mesh: MeshPayload | null = null;
  /** Set when the latest mesh fetch failed and the viewport shows a stale frame. */
  staleFrame = false;
  lastError: string | null = null;
  busy = false;

  constructor(
    private api: ApiClient,
    public projectId: string,
  ) {}

  get frameCount(): number {
    return this.points.length;
  }

  diagramView(): DiagramView {
    return buildDiagram(this.points, this.frameCount > 0 ? this.currentFrame : null);
  }

  private async mutate<T>(op: () => Promise<T>): Promise<T | null> {
    if (this.busy) {
      throw new Error("another operation is in flight");
    }
    this.busy = true;
    this.lastError = null;
    try {
      return await op();
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return null;
    } finally {
      this.busy = false;
    }
  }

  private async refreshDiagram(): Promise<void> {
    this.points = await this.api.diagram(this.projectId);
  }

  async load(): Promise<void> {
    this.info = await this.api.projectInfo(this.projectId);
    if (this.info.frame_count !== null) {
      await this.refreshDiagram();
      await this.seek(Math.min(this.currentFrame, this.frameCount - 1));
    }
  }

  async initialize(rampFrames = 0): Promise<void> {
    await this.mutate(async () => {
      await this.api.initialize(this.projectId, rampFrames);
      await this.load();
    });
  }

  async seek(frame: number): Promise<void> {
    if (frame < 0 || frame >= this.frameCount) {
      throw new Error(`frame ${frame} out of range`);
    }
    this.currentFrame = frame;
    try {
      this.mesh = await this.api.frameMesh(this.projectId, frame);
      this.staleFrame = false;
    } catch (err) {
      this.staleFrame = true;
      this.lastError = err instanceof Error ? err.message : String(err);
    }
  }

  stepForward(): Promise<void> {
    return this.seek(Math.min(this.currentFrame + 1, this.frameCount - 1));
  }

  stepBackward(): Promise<void> {
    return this.seek(Math.max(this.currentFrame - 1, 0));
  }

  /** Submit the Adjust Blendshape form; returns false when validation fails. */
  async adjust(targetRaw: string, valueRaw: string): Promise<boolean> {
    const channels = this.info?.channels.length ?? 0;
    const target = validateTargetField(targetRaw, channels);
    if (!target.ok) {
      this.lastError = target.message!;
      return false;
    }
    const value = validateValueField(valueRaw);
    if (!value.ok) {
      this.lastError = value.message!;
      return false;
    }
    const result = await this.mutate(async () => {
      await this.api.adjust(
        this.projectId,
        this.currentFrame,
        target.value!,
        value.value!,
      );
      await this.refreshDiagram();
      await this.seek(this.currentFrame);
      return true;
    });
    return result === true;
  }

  async applyPreference(): Promise<boolean> {
    const result = await this.mutate(async () => {
      const response = await this.api.applyPreference(this.projectId);
      await this.refreshDiagram();
      await this.seek(this.currentFrame);
      return response.applied;
    });
    return result === true;
  }

  async clearPreference(): Promise<number | null> {
    return this.mutate(async () => {
      const response = await this.api.clearPreference(this.projectId);
      return response.cleared_records;
    });
  }

  async addKeyframe(): Promise<void> {
    await this.mutate(async () => {
      await this.api.addKeyframe(this.projectId, this.currentFrame);
      await this.refreshDiagram();
    });
  }

  async startFinetune(): Promise<JobResponse | null> {
    return this.mutate(() => this.api.startFinetune(this.projectId));
  }

  async exportResults(): Promise<AnimationExport | null> {
    return this.mutate(() => this.api.exportAnimation(this.projectId));
  }

  static describeError(err: unknown): string {
    if (err instanceof ApiError) {
      return `${err.status}: ${err.message}`;
    }
    return err instanceof Error ? err.message : String(err);
  }
}
