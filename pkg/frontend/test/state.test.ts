import { describe, expect, it } from "vitest";

import {
  applyFocusClick,
  applyK,
  applyRender,
  applyRenderError,
  applyUpload,
} from "../src/state.js";
import { initialState } from "../src/types.js";
import type { UiState } from "../src/types.js";

function sessionState(): UiState {
  return {
    ...initialState(),
    sessionId: "abc123",
    image: { width: 64, height: 48 },
    focus: { x: 10, y: 20 },
    focusDisparity: 0.42,
    k: 8,
  };
}

describe("applyUpload", () => {
  it("a success replaces the session and resets focus state", () => {
    const next = applyUpload(sessionState(), {
      ok: true,
      session_id: "fresh",
      width: 100,
      height: 80,
      disparity_preview_png: "AAAA",
    });
    expect(next.sessionId).toBe("fresh");
    expect(next.image).toEqual({ width: 100, height: 80 });
    expect(next.focus).toBeNull();
    expect(next.focusDisparity).toBeNull();
    expect(next.error).toBeNull();
    expect(next.busy).toBe(false);
    // untouched knobs survive the swap
    expect(next.k).toBe(8);
  });

  it("a rejection keeps the old session and surfaces the error code inline", () => {
    const before = sessionState();
    const next = applyUpload(before, {
      ok: false,
      status: 400,
      code: "dim_mismatch",
      message: "image (48, 64) vs depth (32, 32)",
    });
    expect(next.sessionId).toBe("abc123");
    expect(next.focus).toEqual(before.focus);
    expect(next.error).toContain("dim_mismatch");
    expect(next.error).toContain("(32, 32)");
    expect(next.busy).toBe(false);
  });
});

describe("parameter updates", () => {
  it("clicking stores the pixel and clears stale errors", () => {
    const withError = { ...sessionState(), error: "invalid_params: old" };
    const next = applyFocusClick(withError, { x: 3, y: 4 });
    expect(next.focus).toEqual({ x: 3, y: 4 });
    expect(next.error).toBeNull();
  });

  it("blur strength clamps to the legal range", () => {
    expect(applyK(sessionState(), -5).k).toBe(0);
    expect(applyK(sessionState(), 99).k).toBe(64);
    expect(applyK(sessionState(), Number.NaN).k).toBe(0);
    expect(applyK(sessionState(), 12.5).k).toBe(12.5);
  });
});

describe("render results", () => {
  it("stores the echoed focus disparity", () => {
    const next = applyRender(sessionState(), {
      ok: true,
      blob: new Blob(["x"]),
      focusDisparity: 0.61,
    });
    expect(next.focusDisparity).toBe(0.61);
    expect(next.error).toBeNull();
  });

  it("render failures show code and message without dropping the session", () => {
    const next = applyRenderError(sessionState(), {
      ok: false,
      status: 422,
      code: "invalid_params",
      message: "k must be finite",
    });
    expect(next.error).toBe("invalid_params: k must be finite");
    expect(next.sessionId).toBe("abc123");
  });
});
