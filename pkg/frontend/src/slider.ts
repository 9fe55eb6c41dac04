/**
 * Log-scale mapping for the blur slider.
 *
 * Blur strength spans 0..64 but most of the interesting range sits below
 * 10, so the slider is logarithmic: position 0 is exactly zero blur, and
 * the rest of the track covers K_FLOOR..K_MAX geometrically.
 */

export const K_MAX = 64;

/** Smallest nonzero blur the slider can express. */
export const K_FLOOR = 1 / 16;

const LN_FLOOR = Math.log(K_FLOOR);
const LN_SPAN = Math.log(K_MAX) - LN_FLOOR;

/** Slider position in [0, 1] -> blur strength in [0, K_MAX]. */
export function sliderToK(p: number): number {
  if (p <= 0) return 0;
  if (p >= 1) return K_MAX;
  return Math.exp(LN_FLOOR + p * LN_SPAN);
}

/** Blur strength -> slider position; inverse of sliderToK. */
export function kToSlider(k: number): number {
  if (k <= 0) return 0;
  if (k >= K_MAX) return 1;
  if (k <= K_FLOOR) return 0;
  return (Math.log(k) - LN_FLOOR) / LN_SPAN;
}

/** Human-readable readout, e.g. "12.5" or "0.25". */
export function formatK(k: number): string {
  if (k === 0) return "0";
  if (k >= 10) return k.toFixed(1);
  return k.toFixed(2);
}
