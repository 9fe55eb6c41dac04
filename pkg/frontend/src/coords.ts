/**
 * Mapping between the on-screen canvas box and source-image pixels.
 *
 * The canvas element is sized with fitContain so its box always has the
 * image's aspect ratio; the letterbox bars live in the surrounding
 * container, so a click that lands on the canvas is by construction
 * inside the drawn picture. Mapping is then a single uniform scale.
 */

import type { Point, Size } from "./types.js";

/**
 * Largest box with the image's aspect ratio that fits inside `box`.
 * Upscaling is allowed; the caller centers the result.
 */
export function fitContain(image: Size, box: Size): Size {
  if (image.width <= 0 || image.height <= 0) {
    return { width: 0, height: 0 };
  }
  const scale = Math.min(box.width / image.width, box.height / image.height);
  return {
    width: image.width * scale,
    height: image.height * scale,
  };
}

/**
 * Client-space click -> integer image pixel, or null when the click is
 * outside the canvas box (i.e. on the letterbox or elsewhere).
 *
 * `rect` is the canvas's bounding client rect; CSS zoom changes the rect
 * while the image size stays fixed, so the scale is recomputed per click.
 */
export function clientToImage(
  rect: { left: number; top: number; width: number; height: number },
  image: Size,
  clientX: number,
  clientY: number,
): Point | null {
  const fx = (clientX - rect.left) / rect.width;
  const fy = (clientY - rect.top) / rect.height;
  if (fx < 0 || fx >= 1 || fy < 0 || fy >= 1) {
    return null;
  }
  const x = Math.min(image.width - 1, Math.floor(fx * image.width));
  const y = Math.min(image.height - 1, Math.floor(fy * image.height));
  return { x, y };
}

/**
 * Center of an image pixel as a fraction of the canvas box, for
 * positioning the focus reticle with percentage offsets. Feeding the
 * result back through clientToImage recovers the same pixel at any zoom.
 */
export function imageToFraction(image: Size, p: Point): { fx: number; fy: number } {
  return {
    fx: (p.x + 0.5) / image.width,
    fy: (p.y + 0.5) / image.height,
  };
}
