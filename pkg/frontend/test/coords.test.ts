import { describe, expect, it } from "vitest";

import { clientToImage, fitContain, imageToFraction } from "../src/coords.js";
import type { Size } from "../src/types.js";

const ZOOMS = [0.05, 0.1, 0.33, 0.5, 1, 1.7, 2.5, 4, 8, 12];
const IMAGES: Size[] = [
  { width: 64, height: 48 },
  { width: 961, height: 540 },
  { width: 300, height: 1000 },
];

function rectFor(image: Size, zoom: number, left = 37.25, top = 11.5) {
  return { left, top, width: image.width * zoom, height: image.height * zoom };
}

describe("fitContain", () => {
  it("preserves aspect ratio and touches one pair of box edges", () => {
    const image = { width: 400, height: 300 };
    const wide = fitContain(image, { width: 1000, height: 300 });
    expect(wide.height).toBeCloseTo(300, 9);
    expect(wide.width).toBeCloseTo(400, 9);
    const tall = fitContain(image, { width: 200, height: 900 });
    expect(tall.width).toBeCloseTo(200, 9);
    expect(tall.height).toBeCloseTo(150, 9);
  });

  it("upscales small images to fill the box", () => {
    const fit = fitContain({ width: 10, height: 10 }, { width: 500, height: 400 });
    expect(fit).toEqual({ width: 400, height: 400 });
  });

  it("degenerate image sizes collapse to zero instead of dividing by it", () => {
    expect(fitContain({ width: 0, height: 10 }, { width: 100, height: 100 })).toEqual({
      width: 0,
      height: 0,
    });
  });
});

describe("click mapping", () => {
  it("image -> client -> image is the identity at every zoom", () => {
    for (const image of IMAGES) {
      for (const zoom of ZOOMS) {
        const rect = rectFor(image, zoom);
        for (const p of [
          { x: 0, y: 0 },
          { x: image.width - 1, y: image.height - 1 },
          { x: Math.floor(image.width / 2), y: Math.floor(image.height / 3) },
          { x: 1, y: image.height - 2 },
        ]) {
          const { fx, fy } = imageToFraction(image, p);
          const back = clientToImage(
            rect,
            image,
            rect.left + fx * rect.width,
            rect.top + fy * rect.height,
          );
          expect(back).toEqual(p);
        }
      }
    }
  });

  it("click -> pixel -> reticle stays within one image pixel of the click", () => {
    const image = { width: 200, height: 150 };
    for (const zoom of ZOOMS) {
      const rect = rectFor(image, zoom);
      const onePixel = zoom; // one image pixel measured in client units
      const clicks: [number, number][] = [
        [rect.left + 0.3 * rect.width, rect.top + 0.8 * rect.height],
        [rect.left + 0.01 * rect.width, rect.top + 0.01 * rect.height],
        [rect.left + 0.999 * rect.width, rect.top + 0.5 * rect.height],
      ];
      for (const [cx, cy] of clicks) {
        const p = clientToImage(rect, image, cx, cy);
        expect(p).not.toBeNull();
        const { fx, fy } = imageToFraction(image, p!);
        const backX = rect.left + fx * rect.width;
        const backY = rect.top + fy * rect.height;
        expect(Math.abs(backX - cx)).toBeLessThanOrEqual(onePixel);
        expect(Math.abs(backY - cy)).toBeLessThanOrEqual(onePixel);
      }
    }
  });

  it("returns pixels inside the image bounds for any in-rect click", () => {
    const image = { width: 33, height: 7 };
    const rect = rectFor(image, 3.3);
    for (let i = 0; i < 500; i += 1) {
      const cx = rect.left + ((i * 7919) % 1000) / 1000 * rect.width;
      const cy = rect.top + ((i * 104729) % 1000) / 1000 * rect.height;
      const p = clientToImage(rect, image, cx, cy);
      expect(p).not.toBeNull();
      expect(p!.x).toBeGreaterThanOrEqual(0);
      expect(p!.x).toBeLessThan(image.width);
      expect(p!.y).toBeGreaterThanOrEqual(0);
      expect(p!.y).toBeLessThan(image.height);
    }
  });

  it("ignores clicks outside the picture box", () => {
    const image = { width: 100, height: 100 };
    const rect = rectFor(image, 2);
    expect(clientToImage(rect, image, rect.left - 1, rect.top + 5)).toBeNull();
    expect(clientToImage(rect, image, rect.left + 5, rect.top - 0.01)).toBeNull();
    expect(clientToImage(rect, image, rect.left + rect.width, rect.top + 5)).toBeNull();
    expect(clientToImage(rect, image, rect.left + 5, rect.top + rect.height + 40)).toBeNull();
    // the last representable point inside still maps
    expect(
      clientToImage(rect, image, rect.left + rect.width - 1e-6, rect.top + rect.height - 1e-6),
    ).toEqual({ x: 99, y: 99 });
  });
});
