/** Exactly one interaction mode is active at a time. */

export type InteractionMode = "demonstrate" | "correct" | "prefer" | "observe";

export const ALL_MODES: InteractionMode[] = [
  "demonstrate",
  "correct",
  "prefer",
  "observe",
];

export interface StoreCounts {
  demos: number;
  corrections: number;
  prefs: number;
}

export class ModeController {
  private current: InteractionMode = "observe";
  private listeners: Array<(mode: InteractionMode) => void> = [];

  get mode(): InteractionMode {
    return this.current;
  }

  set(mode: InteractionMode): void {
    if (!ALL_MODES.includes(mode)) throw new Error(`unknown mode ${mode}`);
    this.current = mode;
    for (const fn of this.listeners) fn(mode);
  }

  onChange(fn: (mode: InteractionMode) => void): void {
    this.listeners.push(fn);
  }
}

/**
 * Demonstrations are only allowed while the session has no corrections or
 * preferences (unless the session was created with allow_demos_anytime);
 * mirror the server's 409 rule so the user finds out before drawing.
 */
export function demoAllowed(counts: StoreCounts, allowAnytime: boolean): boolean {
  return allowAnytime || (counts.corrections === 0 && counts.prefs === 0);
}

/** A submission in one mode must have been produced in that mode. */
export function assertSubmissionMode(
  active: InteractionMode,
  required: InteractionMode,
): void {
  if (active !== required) {
    throw new Error(`cannot submit ${required} input while in ${active} mode`);
  }
}
