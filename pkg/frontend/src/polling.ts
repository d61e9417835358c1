/** Poll training status until it leaves the running state. */

import type { ApiClient, TrainingStatus } from "./api.js";

export async function pollUntilIdle(
  api: ApiClient,
  sessionId: string,
  onTick?: (status: TrainingStatus) => void,
  intervalMs = 400,
  timeoutMs = 10 * 60 * 1000,
): Promise<TrainingStatus> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const status = await api.getStatus(sessionId);
    onTick?.(status);
    if (status.status !== "running") return status;
    if (Date.now() > deadline) throw new Error("training timed out");
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
