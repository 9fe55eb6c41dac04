import { describe, expect, it } from "vitest";

import { formatK, K_FLOOR, K_MAX, kToSlider, sliderToK } from "../src/slider.js";

describe("slider mapping", () => {
  it("pins the endpoints exactly", () => {
    expect(sliderToK(0)).toBe(0);
    expect(sliderToK(1)).toBe(K_MAX);
    expect(kToSlider(0)).toBe(0);
    expect(kToSlider(K_MAX)).toBe(1);
  });

  it("round-trips positions through blur values", () => {
    for (let i = 1; i < 100; i += 1) {
      const p = i / 100;
      expect(kToSlider(sliderToK(p))).toBeCloseTo(p, 12);
    }
  });

  it("round-trips blur values through positions", () => {
    // K_FLOOR itself sits at position 0, which means "no blur", so the
    // invertible range starts just above it.
    for (let i = 1; i <= 40; i += 1) {
      const k = K_FLOOR * Math.pow(K_MAX / K_FLOOR, i / 40);
      expect(sliderToK(kToSlider(k))).toBeCloseTo(k, 9);
    }
  });

  it("is monotonic and stays inside [0, 64]", () => {
    let prev = -1;
    for (let i = 0; i <= 1000; i += 1) {
      const k = sliderToK(i / 1000);
      expect(k).toBeGreaterThan(prev);
      expect(k).toBeGreaterThanOrEqual(0);
      expect(k).toBeLessThanOrEqual(K_MAX);
      prev = k;
    }
  });

  it("clamps out-of-range inputs", () => {
    expect(sliderToK(-0.5)).toBe(0);
    expect(sliderToK(1.5)).toBe(K_MAX);
    expect(kToSlider(-3)).toBe(0);
    expect(kToSlider(200)).toBe(1);
    expect(kToSlider(K_FLOOR / 2)).toBe(0);
  });

  it("formats readouts at a sensible precision", () => {
    expect(formatK(0)).toBe("0");
    expect(formatK(0.25)).toBe("0.25");
    expect(formatK(12.52)).toBe("12.5");
    expect(formatK(64)).toBe("64.0");
  });
});
