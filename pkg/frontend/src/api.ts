/** Typed client for the faceforge HTTP API.
 *
 * The fetch implementation is injectable so the contract suite can run
 * against a scripted mock without a network.
 */

export interface DiagramPoint {
  frame_index: number;
  mean_alpha: number;
  kind: "plain" | "keyframe" | "adjusted";
}

export interface ProjectInfo {
  id: string;
  status: string;
  rig_name: string;
  channels: string[];
  frame_count: number | null;
}

export interface InitializeResponse {
  frame_count: number;
  keyframes: number[];
  seconds: number;
}

export interface PoseTransform {
  rotation: number[][];
  translation: number[];
  scale: number;
}

export interface MeshPayload {
  vertices: number[];
  faces: number[][];
  channel_names: string[];
  channel_values: number[];
  pose: PoseTransform;
}

export interface AdjustResponse {
  frame: number;
  target: number;
  value: number;
  previous: number;
}

export interface ApplyPreferenceResponse {
  applied: boolean;
  delta: number[] | null;
  touched: boolean[] | null;
}

export interface JobResponse {
  id: string;
  status: string;
  project_ids: string[];
  error: string | null;
  mae_before: number | null;
  mae_after: number | null;
}

export interface AnimationExport {
  rig_name: string;
  fps: number;
  channels: string[];
  frames: number[][];
  poses: { axis_angle: number[]; translation: number[]; scale: number }[];
  keyframes: number[];
  adjustments: unknown[];
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload.detail ?? payload);
    }
    return payload as T;
  }

  projectInfo(id: string): Promise<ProjectInfo> {
    return this.request("GET", `/projects/${id}`);
  }

  initialize(id: string, rampFrames = 0): Promise<InitializeResponse> {
    const query = rampFrames > 0 ? `?ramp_frames=${rampFrames}` : "";
    return this.request("POST", `/projects/${id}/initialize${query}`);
  }

  diagram(id: string): Promise<DiagramPoint[]> {
    return this.request("GET", `/projects/${id}/diagram`);
  }

  frameMesh(id: string, frame: number): Promise<MeshPayload> {
    return this.request("GET", `/projects/${id}/frames/${frame}/mesh`);
  }

  adjust(
    id: string,
    frame: number,
    target: number,
    value: number,
  ): Promise<AdjustResponse> {
    return this.request("POST", `/projects/${id}/adjust`, {
      frame,
      target,
      value,
    });
  }

  applyPreference(id: string): Promise<ApplyPreferenceResponse> {
    return this.request("POST", `/projects/${id}/preference/apply`);
  }

  clearPreference(id: string): Promise<{ cleared_records: number }> {
    return this.request("POST", `/projects/${id}/preference/clear`);
  }

  addKeyframe(id: string, frame: number): Promise<{ keyframes: number[] }> {
    return this.request("POST", `/projects/${id}/keyframes`, { frame });
  }

  startFinetune(id: string, projects?: string[]): Promise<JobResponse> {
    return this.request("POST", `/projects/${id}/finetune`,
      projects ? { projects } : {});
  }

  jobStatus(jobId: string): Promise<JobResponse> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  exportAnimation(id: string): Promise<AnimationExport> {
    return this.request("GET", `/projects/${id}/export`);
  }
}
