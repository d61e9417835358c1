/** Contract tests against a recorded server.
 *
 * fixtures/recorded.json holds real request/response exchanges captured
 * from the session service. Each response must validate against the
 * client's schema for that endpoint, and the ApiClient (run against a
 * fetch stub that replays the recording) must produce exactly the
 * recorded request shapes.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterEach, describe, expect, it, vi } from "vitest";
import { z } from "zod";
import { ApiClient, ApiError } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));
const recording = JSON.parse(
  readFileSync(join(here, "fixtures", "recorded.json"), "utf-8"),
) as {
  exchanges: Array<{
    name: string;
    request: { method: string; path: string; body: unknown };
    response: { status: number; body: unknown };
  }>;
};

function exchange(name: string) {
  const found = recording.exchanges.find((e) => e.name === name);
  if (!found) throw new Error(`no recorded exchange named ${name}`);
  return found;
}

const trajectorySchema = z.object({
  horizon: z.number().int().min(1),
  states: z.array(z.array(z.number())).min(2),
});

const snapshotSchema = z.object({
  id: z.string(),
  env: z.string(),
  horizon: z.number().int(),
  start: z.array(z.number()),
  goal: z.array(z.number()).nullable(),
  store: z.object({
    demos: z.number().int().min(0),
    corrections: z.number().int().min(0),
    prefs: z.number().int().min(0),
  }),
  status: z.string(),
  fail_reason: z.string().nullable(),
  last_loss: z.number().nullable(),
  retrain_count: z.number().int().min(0),
  allow_demos_anytime: z.boolean(),
  trajectory: trajectorySchema,
});

const querySchema = z.object({
  token: z.string().min(1),
  a: trajectorySchema,
  b: trajectorySchema,
});

const statusSchema = z.object({
  status: z.enum(["idle", "running", "failed"]),
  reason: z.string().nullable(),
  last_loss: z.number().nullable(),
  retrain_count: z.number().int(),
});

const rewardFieldSchema = z.object({
  grid: z.number().int().min(2),
  lo: z.array(z.number()),
  hi: z.array(z.number()),
  values: z.array(z.array(z.number())),
});

const environmentSchema = z.object({
  name: z.string(),
  d: z.number().int(),
  lo: z.array(z.number()),
  hi: z.array(z.number()),
  landmarks: z.record(z.string(), z.array(z.number())),
  default_horizon: z.number().int(),
});

describe("recorded server responses validate against client schemas", () => {
  it("create_session", () => {
    const e = exchange("create_session");
    expect(e.response.status).toBe(201);
    z.object({ id: z.string().min(1) }).parse(e.response.body);
  });

  it("environment detail", () => {
    const detail = environmentSchema.parse(exchange("get_environment").response.body);
    expect(detail.d).toBe(2);
  });

  it("session snapshot", () => {
    const snap = snapshotSchema.parse(exchange("session_snapshot").response.body);
    expect(snap.trajectory.states).toHaveLength(snap.horizon + 1);
  });

  it("unknown session is a 404", () => {
    expect(exchange("unknown_session").response.status).toBe(404);
  });

  it("feedback endpoints accept with 202", () => {
    for (const name of ["post_demonstration", "post_correction", "post_preference"]) {
      expect(exchange(name).response.status).toBe(202);
    }
  });

  it("dimension mismatch is a 422", () => {
    expect(exchange("post_demonstration_wrong_dim").response.status).toBe(422);
  });

  it("late demonstrations are a 409", () => {
    expect(exchange("post_demonstration_after_preference").response.status).toBe(409);
  });

  it("query pair is stable until answered (token and both trajectories)", () => {
    const q1 = querySchema.parse(exchange("get_query").response.body);
    const q2 = querySchema.parse(exchange("get_query_repeat").response.body);
    expect(q2.token).toBe(q1.token);
    expect(q2.a).toEqual(q1.a);
    expect(q2.b).toEqual(q1.b);
    expect(q1.a.horizon).toBe(q1.b.horizon);
  });

  it("stale preference tokens are a 409", () => {
    expect(exchange("post_preference_stale").response.status).toBe(409);
  });

  it("retrain accepted, status and trajectory retrievable", () => {
    expect(exchange("post_retrain").response.status).toBe(202);
    const status = statusSchema.parse(exchange("get_status").response.body);
    expect(status.status).not.toBe("running");
    const traj = trajectorySchema.parse(exchange("get_trajectory").response.body);
    expect(traj.states).toHaveLength(traj.horizon + 1);
  });

  it("reward field has a square grid", () => {
    const field = rewardFieldSchema.parse(exchange("get_reward_field").response.body);
    expect(field.values).toHaveLength(field.grid);
    for (const row of field.values) expect(row).toHaveLength(field.grid);
  });
});

describe("the client reproduces the recorded request shapes", () => {
  afterEach(() => {
    vi.unstubAllGlobals();
  });

  function stubFetchWith(name: string) {
    const e = exchange(name);
    const stub = vi.fn(async (url: string, init?: RequestInit) => {
      expect(init?.method ?? "GET").toBe(e.request.method);
      expect(url).toBe(e.request.path);
      if (e.request.body !== null && e.request.method !== "GET") {
        expect(JSON.parse(String(init?.body))).toEqual(e.request.body);
      }
      return new Response(JSON.stringify(e.response.body), {
        status: e.response.status,
      });
    });
    vi.stubGlobal("fetch", stub);
    return { exchangeData: e, stub };
  }

  it("createSession sends the recorded body shape", async () => {
    const { exchangeData } = stubFetchWith("create_session");
    const api = new ApiClient("");
    const out = await api.createSession(
      exchangeData.request.body as Parameters<ApiClient["createSession"]>[0],
    );
    expect(out.id).toBeTypeOf("string");
  });

  it("postDemonstration sends {trajectory} and resolves on 202", async () => {
    const { exchangeData } = stubFetchWith("post_demonstration");
    const api = new ApiClient("");
    const body = exchangeData.request.body as { trajectory: { horizon: number; states: number[][] } };
    const sid = exchangeData.request.path.split("/")[2];
    await api.postDemonstration(sid, body.trajectory);
  });

  it("postCorrection sends {window, snippet}", async () => {
    const { exchangeData } = stubFetchWith("post_correction");
    const api = new ApiClient("");
    const body = exchangeData.request.body as {
      window: [number, number];
      snippet: { horizon: number; states: number[][] };
    };
    const sid = exchangeData.request.path.split("/")[2];
    await api.postCorrection(sid, body.window, body.snippet);
  });

  it("getQuery parses the pair", async () => {
    const { exchangeData } = stubFetchWith("get_query");
    const api = new ApiClient("");
    const sid = exchangeData.request.path.split("/")[2];
    const q = await api.getQuery(sid, "active");
    querySchema.parse(q);
  });

  it("postPreference raises ApiError(409) on a stale token", async () => {
    const { exchangeData } = stubFetchWith("post_preference_stale");
    const api = new ApiClient("");
    const sid = exchangeData.request.path.split("/")[2];
    await expect(
      api.postPreference(sid, "a", "stale-token"),
    ).rejects.toMatchObject({ status: 409 });
  });

  it("getStatus parses training status", async () => {
    const { exchangeData } = stubFetchWith("get_status");
    const api = new ApiClient("");
    const sid = exchangeData.request.path.split("/")[2];
    statusSchema.parse(await api.getStatus(sid));
  });

  it("getRewardField builds the grid query", async () => {
    const { exchangeData } = stubFetchWith("get_reward_field");
    const api = new ApiClient("");
    const sid = exchangeData.request.path.split("/")[2];
    rewardFieldSchema.parse(await api.getRewardField(sid, 8));
  });

  it("non-2xx responses surface as ApiError", async () => {
    stubFetchWith("unknown_session");
    const api = new ApiClient("");
    await expect(api.getSession("doesnotexist")).rejects.toBeInstanceOf(ApiError);
  });
});
