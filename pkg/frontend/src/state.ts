/** Pure transitions on UiState; the DOM layer applies and repaints. */

import type { ApiError, RenderOk, UiState, UploadOk, UploadOutcome } from "./types.js";
import type { Point } from "./types.js";

export function describeError(err: ApiError): string {
  return `${err.code}: ${err.message}`;
}

/**
 * Fold an upload response into the state. A success replaces the whole
 * session (focus and readouts reset, stale errors clear); a failure keeps
 * the previous session usable and only sets the inline error text.
 */
export function applyUpload(state: UiState, outcome: UploadOutcome): UiState {
  if (!outcome.ok) {
    return { ...state, busy: false, error: describeError(outcome) };
  }
  return {
    ...state,
    sessionId: outcome.session_id,
    image: { width: outcome.width, height: outcome.height },
    focus: null,
    focusDisparity: null,
    busy: false,
    error: null,
  };
}

export function applyFocusClick(state: UiState, p: Point): UiState {
  return { ...state, focus: p, error: null };
}

/** Clamp into the legal blur range; the slider can't overshoot but typed
 * values could. */
export function applyK(state: UiState, k: number): UiState {
  const clamped = Math.min(64, Math.max(0, k));
  return { ...state, k: Number.isFinite(clamped) ? clamped : 0 };
}

export function applyRender(state: UiState, result: RenderOk): UiState {
  return { ...state, focusDisparity: result.focusDisparity, error: null };
}

export function applyRenderError(state: UiState, err: ApiError): UiState {
  return { ...state, error: describeError(err) };
}
