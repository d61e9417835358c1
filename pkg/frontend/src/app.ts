/** Page wiring for the interactive teaching studio (2D sessions). */

import { ApiClient, ApiError, SessionSnapshot, QueryPair } from "./api.js";
import { applyDrag, validWindow } from "./falloff.js";
import { rewardToRgba } from "./heatmap.js";
import { ModeController, InteractionMode, demoAllowed } from "./modes.js";
import { pollUntilIdle } from "./polling.js";
import { Point, strokeToDemonstration } from "./resample.js";
import { renderScene, SceneState } from "./scene.js";
import { Viewport } from "./viewport.js";

const api = new ApiClient("");

interface AppState {
  sessionId: string | null;
  snapshot: SessionSnapshot | null;
  env: { lo: Point; hi: Point; landmarks: Record<string, number[]> } | null;
  viewport: Viewport | null;
  scene: SceneState;
  modes: ModeController;
  query: QueryPair | null;
  // correction editing state
  selecting: number | null; // first clicked waypoint index
  snippet: { window: [number, number]; points: Point[] } | null;
  dragIndex: number | null;
}

const state: AppState = {
  sessionId: null,
  snapshot: null,
  env: null,
  viewport: null,
  scene: {
    heatmap: null,
    landmarks: {},
    trajectory: null,
    stroke: null,
    snippet: null,
    queryPair: null,
    selection: null,
  },
  modes: new ModeController(),
  query: null,
  selecting: null,
  snippet: null,
  dragIndex: null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d")!;

function notice(text: string, isError = false) {
  const panel = el<HTMLDivElement>("notice");
  panel.textContent = text;
  panel.className = isError ? "notice error" : "notice";
}

function redraw() {
  if (!state.viewport) return;
  renderScene(ctx, state.viewport, state.scene);
}

function trajectoryPoints(states: number[][]): Point[] {
  return states.map((s) => [s[0], s[1]] as Point);
}

async function refreshSnapshot() {
  if (!state.sessionId) return;
  const snap = await api.getSession(state.sessionId);
  state.snapshot = snap;
  state.scene.trajectory = trajectoryPoints(snap.trajectory.states);
  el<HTMLSpanElement>("store-counts").textContent =
    `${snap.store.demos} demos / ${snap.store.corrections} corrections / ${snap.store.prefs} preferences`;
  el<HTMLSpanElement>("loss").textContent =
    snap.last_loss === null ? "-" : snap.last_loss.toFixed(4);
  el<HTMLSpanElement>("train-status").textContent = snap.status;
  const demoBtn = el<HTMLButtonElement>("mode-demonstrate");
  demoBtn.disabled = !demoAllowed(snap.store, snap.allow_demos_anytime);
  redraw();
}

async function refreshHeatmap() {
  if (!state.sessionId) return;
  const field = await api.getRewardField(state.sessionId, 48);
  const { width, height, pixels } = rewardToRgba(field.values);
  const off = document.createElement("canvas");
  off.width = width;
  off.height = height;
  const offCtx = off.getContext("2d")!;
  const image = new ImageData(pixels, width, height);
  offCtx.putImageData(image, 0, 0);
  // reward-field rows go lo->hi in y; canvas draws top-down, so flip
  const flipped = document.createElement("canvas");
  flipped.width = width;
  flipped.height = height;
  const fctx = flipped.getContext("2d")!;
  fctx.scale(1, -1);
  fctx.drawImage(off, 0, -height);
  state.scene.heatmap = flipped;
  redraw();
}

async function startSession() {
  const envName = el<HTMLSelectElement>("env-select").value;
  const detail = await api.getEnvironment(envName);
  if (detail.d !== 2) {
    notice("the studio only drives 2D environments", true);
    return;
  }
  const created = await api.createSession({ env: envName, seed: 0 });
  state.sessionId = created.id;
  state.env = {
    lo: [detail.lo[0], detail.lo[1]],
    hi: [detail.hi[0], detail.hi[1]],
    landmarks: detail.landmarks,
  };
  state.viewport = new Viewport(
    { lo: state.env.lo, hi: state.env.hi },
    canvas.width,
    canvas.height,
  );
  state.scene.landmarks = detail.landmarks;
  state.scene.queryPair = null;
  state.scene.snippet = null;
  state.query = null;
  el<HTMLSpanElement>("session-id").textContent = created.id;
  notice(`session ${created.id} started on ${envName}`);
  await refreshSnapshot();
  await refreshHeatmap();
}

// -- demonstration drawing

let stroke: Point[] | null = null;

function pointerWorld(ev: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  const sx = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const sy = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  const vp = state.viewport!;
  return vp.clampToBox(vp.toWorld(sx, sy));
}

async function submitDemonstration(points: Point[]) {
  const snap = state.snapshot!;
  if (!demoAllowed(snap.store, snap.allow_demos_anytime)) {
    notice("demonstrations are closed once corrections/preferences exist", true);
    return;
  }
  const env = state.env!;
  const goal = snap.goal ? ([snap.goal[0], snap.goal[1]] as Point) : null;
  const states = strokeToDemonstration(
    points,
    snap.horizon,
    [snap.start[0], snap.start[1]],
    goal,
    env.lo,
    env.hi,
  );
  await api.postDemonstration(state.sessionId!, {
    horizon: snap.horizon,
    states: states.map((p) => [p[0], p[1]]),
  });
  notice("demonstration submitted");
  await refreshSnapshot();
}

// -- correction selection and dragging

function nearestWaypoint(p: Point): number | null {
  const traj = state.scene.trajectory;
  const vp = state.viewport;
  if (!traj || !vp) return null;
  let best = -1;
  let bestPx = Infinity;
  const [px, py] = vp.toScreen(p[0], p[1]);
  traj.forEach((w, i) => {
    const [wx, wy] = vp.toScreen(w[0], w[1]);
    const d = Math.hypot(px - wx, py - wy);
    if (d < bestPx) {
      bestPx = d;
      best = i;
    }
  });
  return bestPx <= 14 ? best : null;
}

function beginCorrectionAt(index: number) {
  if (state.selecting === null) {
    state.selecting = index;
    state.scene.selection = [index, index];
    notice(`window start at ${index}; click the end waypoint`);
  } else {
    const s = Math.min(state.selecting, index);
    const e = Math.max(state.selecting, index);
    const horizon = state.snapshot!.horizon;
    if (!validWindow(s, e, horizon)) {
      notice("selection rejected: a window needs at least 3 waypoints", true);
      state.selecting = null;
      state.scene.selection = null;
      redraw();
      return;
    }
    state.selecting = null;
    state.scene.selection = [s, e];
    const points = state.scene.trajectory!.slice(s, e + 1).map(
      (p) => [...p] as Point,
    );
    state.snippet = { window: [s, e], points };
    state.scene.snippet = state.snippet;
    el<HTMLButtonElement>("submit-correction").disabled = true;
    notice(`window [${s}, ${e}] selected; drag interior waypoints`);
  }
  redraw();
}

function snippetDragTarget(p: Point): number | null {
  if (!state.snippet || !state.viewport) return null;
  const [px, py] = state.viewport.toScreen(p[0], p[1]);
  for (let i = 1; i < state.snippet.points.length - 1; i++) {
    const [wx, wy] = state.viewport.toScreen(
      state.snippet.points[i][0],
      state.snippet.points[i][1],
    );
    if (Math.hypot(px - wx, py - wy) <= 12) return i;
  }
  return null;
}

async function submitCorrection() {
  if (!state.snippet) return;
  const [s, e] = state.snippet.window;
  await api.postCorrection(state.sessionId!, [s, e], {
    horizon: e - s,
    states: state.snippet.points.map((p) => [p[0], p[1]]),
  });
  state.snippet = null;
  state.scene.snippet = null;
  state.scene.selection = null;
  el<HTMLButtonElement>("submit-correction").disabled = true;
  notice("correction submitted");
  await refreshSnapshot();
}

// -- preference flow

async function fetchQuery() {
  if (!state.sessionId) return;
  const query = await api.getQuery(state.sessionId, "active");
  state.query = query;
  state.scene.queryPair = {
    a: trajectoryPoints(query.a.states),
    b: trajectoryPoints(query.b.states),
  };
  redraw();
}

async function answerQuery(winner: "a" | "b") {
  if (!state.query) return;
  try {
    await api.postPreference(state.sessionId!, winner, state.query.token);
    notice(`preference recorded: ${winner}`);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // the pair went stale (e.g. a retrain invalidated it): refetch and
      // let the user answer the fresh pair instead
      notice("that pair is no longer current; here is a fresh one", true);
      await fetchQuery();
      return;
    }
    throw err;
  }
  await refreshSnapshot();
  await fetchQuery();
}

// -- retraining

async function retrain() {
  if (!state.sessionId) return;
  try {
    await api.retrain(state.sessionId);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      notice("nothing to train on yet, or training already running", true);
      return;
    }
    throw err;
  }
  const spinner = el<HTMLSpanElement>("spinner");
  spinner.hidden = false;
  const status = await pollUntilIdle(api, state.sessionId, (tick) => {
    el<HTMLSpanElement>("train-status").textContent = tick.status;
  });
  spinner.hidden = true;
  if (status.status === "failed") {
    notice(`training failed: ${status.reason}`, true);
    return;
  }
  notice(`retrained (loss ${status.last_loss?.toFixed(4) ?? "?"})`);
  state.query = null;
  state.scene.queryPair = null;
  await refreshSnapshot();
  await refreshHeatmap();
}

// -- event wiring

export function wire() {
  el<HTMLButtonElement>("start-session").addEventListener("click", () => {
    startSession().catch((err) => notice(String(err), true));
  });
  for (const mode of ["demonstrate", "correct", "prefer", "observe"] as InteractionMode[]) {
    el<HTMLButtonElement>(`mode-${mode}`).addEventListener("click", () => {
      state.modes.set(mode);
      document
        .querySelectorAll(".mode-button")
        .forEach((b) => b.classList.remove("active"));
      el(`mode-${mode}`).classList.add("active");
      if (mode === "prefer") fetchQuery().catch((err) => notice(String(err), true));
      else {
        state.scene.queryPair = null;
        redraw();
      }
    });
  }
  el<HTMLButtonElement>("retrain").addEventListener("click", () => {
    retrain().catch((err) => notice(String(err), true));
  });
  el<HTMLButtonElement>("submit-correction").addEventListener("click", () => {
    submitCorrection().catch((err) => notice(String(err), true));
  });
  el<HTMLButtonElement>("choose-a").addEventListener("click", () => {
    answerQuery("a").catch((err) => notice(String(err), true));
  });
  el<HTMLButtonElement>("choose-b").addEventListener("click", () => {
    answerQuery("b").catch((err) => notice(String(err), true));
  });

  canvas.addEventListener("pointerdown", (ev) => {
    if (!state.sessionId || !state.viewport) return;
    const p = pointerWorld(ev);
    if (state.modes.mode === "demonstrate") {
      stroke = [p];
      state.scene.stroke = stroke;
    } else if (state.modes.mode === "correct") {
      const drag = snippetDragTarget(p);
      if (drag !== null) {
        state.dragIndex = drag;
      } else {
        const idx = nearestWaypoint(p);
        if (idx !== null) beginCorrectionAt(idx);
      }
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!state.viewport) return;
    const p = pointerWorld(ev);
    if (state.modes.mode === "demonstrate" && stroke) {
      stroke.push(p);
      redraw();
    } else if (
      state.modes.mode === "correct" &&
      state.dragIndex !== null &&
      state.snippet
    ) {
      const i = state.dragIndex;
      const delta: Point = [
        p[0] - state.snippet.points[i][0],
        p[1] - state.snippet.points[i][1],
      ];
      state.snippet.points = applyDrag(state.snippet.points, i, delta);
      state.scene.snippet = state.snippet;
      el<HTMLButtonElement>("submit-correction").disabled = false;
      redraw();
    }
  });
  canvas.addEventListener("pointerup", () => {
    if (state.modes.mode === "demonstrate" && stroke) {
      const done = stroke;
      stroke = null;
      state.scene.stroke = null;
      submitDemonstration(done).catch((err) => notice(String(err), true));
    }
    state.dragIndex = null;
  });
}

if (typeof document !== "undefined" && document.getElementById("scene")) {
  wire();
}
