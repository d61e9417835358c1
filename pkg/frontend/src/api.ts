/** Typed client for the teaching-session HTTP API. */

export interface TrajectoryBody {
  horizon: number;
  states: number[][];
}

export interface SessionSnapshot {
  id: string;
  env: string;
  horizon: number;
  start: number[];
  goal: number[] | null;
  store: { demos: number; corrections: number; prefs: number };
  status: string;
  fail_reason: string | null;
  last_loss: number | null;
  retrain_count: number;
  allow_demos_anytime: boolean;
  trajectory: TrajectoryBody;
}

export interface QueryPair {
  token: string;
  a: TrajectoryBody;
  b: TrajectoryBody;
}

export interface TrainingStatus {
  status: "idle" | "running" | "failed";
  reason: string | null;
  last_loss: number | null;
  retrain_count: number;
}

export interface RewardField {
  grid: number;
  lo: number[];
  hi: number[];
  values: number[][];
}

export interface EnvironmentDetail {
  name: string;
  d: number;
  lo: number[];
  hi: number[];
  landmarks: Record<string, number[]>;
  default_horizon: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

async function request<T>(
  method: string,
  url: string,
  body?: unknown,
): Promise<T> {
  const resp = await fetch(url, {
    method,
    headers: body !== undefined ? { "Content-Type": "application/json" } : {},
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const text = await resp.text();
  if (!resp.ok) throw new ApiError(resp.status, text);
  return text ? (JSON.parse(text) as T) : (undefined as T);
}

export class ApiClient {
  constructor(readonly base = "") {}

  createSession(opts: {
    env: string;
    H?: number;
    seed?: number;
    allow_demos_anytime?: boolean;
  }): Promise<{ id: string }> {
    return request("POST", `${this.base}/sessions`, opts);
  }

  getEnvironment(name: string): Promise<EnvironmentDetail> {
    return request("GET", `${this.base}/environments/${name}`);
  }

  listEnvironments(): Promise<{ environments: string[] }> {
    return request("GET", `${this.base}/environments`);
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return request("GET", `${this.base}/sessions/${id}`);
  }

  postDemonstration(id: string, trajectory: TrajectoryBody): Promise<void> {
    return request("POST", `${this.base}/sessions/${id}/demonstration`, {
      trajectory,
    });
  }

  postCorrection(
    id: string,
    window: [number, number],
    snippet: TrajectoryBody,
  ): Promise<void> {
    return request("POST", `${this.base}/sessions/${id}/correction`, {
      window,
      snippet,
    });
  }

  getQuery(id: string, mode: "active" | "passive" = "active"): Promise<QueryPair> {
    return request("GET", `${this.base}/sessions/${id}/query?mode=${mode}`);
  }

  postPreference(
    id: string,
    winner: "a" | "b",
    queryToken: string,
  ): Promise<void> {
    return request("POST", `${this.base}/sessions/${id}/preference`, {
      winner,
      query_token: queryToken,
    });
  }

  retrain(id: string): Promise<void> {
    return request("POST", `${this.base}/sessions/${id}/retrain`);
  }

  getStatus(id: string): Promise<TrainingStatus> {
    return request("GET", `${this.base}/sessions/${id}/status`);
  }

  getTrajectory(id: string): Promise<TrajectoryBody> {
    return request("GET", `${this.base}/sessions/${id}/trajectory`);
  }

  getRewardField(id: string, grid = 48): Promise<RewardField> {
    return request("GET", `${this.base}/sessions/${id}/reward-field?grid=${grid}`);
  }
}
