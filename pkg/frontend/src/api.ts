/** Typed client for the labeling service's JSON API. */

export interface StatusResponse {
  round: number;
  pending_id: string | null;
  num_consistent: number;
  median_f1: number | null;
  state: "synthesizing" | "idle" | "done" | "aborted" | string;
}

export interface ObjectFrame {
  x: number;
  y: number;
  vx: number;
  vy: number;
  ax: number;
  ay: number;
  present: boolean;
}

export interface RegionDoc {
  id: number;
  polyline: [number, number][];
  max_dist: number;
  max_angle_deg: number;
}

export interface SceneDoc {
  object_count: number;
  frame_rate: number;
  trajectories: { id: string; label: number | null; frames: ObjectFrame[][] }[];
  regions: RegionDoc[];
}

export interface NextResponse {
  trajectory_id: string;
  frames: SceneDoc;
  J: number;
}

export interface QueryInfo {
  query: string;
  train_accuracy: number | null;
}

export interface LabelResult {
  accepted: boolean;
  stale: boolean;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) throw new Error(`GET ${path} failed: ${res.status}`);
    return (await res.json()) as T;
  }

  status(): Promise<StatusResponse> {
    return this.getJson<StatusResponse>("/api/status");
  }

  next(): Promise<NextResponse> {
    return this.getJson<NextResponse>("/api/next");
  }

  queries(): Promise<QueryInfo[]> {
    return this.getJson<QueryInfo[]>("/api/queries");
  }

  transcript(): Promise<Record<string, unknown>[]> {
    return this.getJson<Record<string, unknown>[]>("/api/transcript");
  }

  /** Posts one label; a 409 means the question went stale (not an error). */
  async label(trajectoryId: string, label: 0 | 1): Promise<LabelResult> {
    const res = await fetch(this.baseUrl + "/api/label", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trajectory_id: trajectoryId, label }),
    });
    if (res.status === 409) return { accepted: false, stale: true };
    if (!res.ok) throw new Error(`POST /api/label failed: ${res.status}`);
    const body = (await res.json()) as { accepted: boolean };
    return { accepted: body.accepted, stale: false };
  }
}

/** Polls until the session is waiting for a label or finished. */
export async function waitForQuestion(
  api: ApiClient,
  opts: { intervalMs?: number; timeoutMs?: number } = {},
): Promise<StatusResponse> {
  const interval = opts.intervalMs ?? 150;
  const deadline = Date.now() + (opts.timeoutMs ?? 120_000);
  for (;;) {
    const st = await api.status();
    if (st.state === "idle" || st.state === "done" || st.state === "aborted") return st;
    if (Date.now() > deadline) throw new Error("timed out waiting for the service");
    await new Promise((r) => setTimeout(r, interval));
  }
}
