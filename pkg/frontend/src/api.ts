/**
 * Thin fetch wrappers for the refocus service. Every endpoint reports
 * failures as a JSON body {code, message}; these helpers normalize that
 * into a discriminated union so callers never touch Response objects.
 */

import type {
  ApiError,
  Point,
  RenderOutcome,
  ShapeEntry,
  UploadOutcome,
} from "./types.js";

async function errorFrom(res: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (typeof body.code === "string") code = body.code;
    if (typeof body.message === "string") message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return { ok: false, status: res.status, code, message };
}

export interface UploadFiles {
  image: File;
  depth: File;
  sidecar: File | null;
}

export interface RenderBody {
  session_id: string;
  focus: Point | { disparity: number };
  k: number;
  shape: string;
  preview: boolean;
}

export interface Api {
  shapes(): Promise<ShapeEntry[]>;
  upload(files: UploadFiles): Promise<UploadOutcome>;
  render(body: RenderBody): Promise<RenderOutcome>;
}

export function createApi(base = ""): Api {
  return {
    async shapes() {
      const res = await fetch(`${base}/api/shapes`);
      if (!res.ok) throw new Error(`shape list failed: ${res.status}`);
      return res.json();
    },

    async upload(files) {
      const form = new FormData();
      form.append("image", files.image);
      form.append("depth", files.depth);
      if (files.sidecar !== null) {
        form.append("depth_sidecar", files.sidecar);
      }
      const res = await fetch(`${base}/api/upload`, { method: "POST", body: form });
      if (!res.ok) return errorFrom(res);
      const body = await res.json();
      return { ok: true, ...body };
    },

    async render(body) {
      const res = await fetch(`${base}/api/render`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
      if (!res.ok) return errorFrom(res);
      const blob = await res.blob();
      const disparity = parseFloat(res.headers.get("X-Focus-Disparity") ?? "NaN");
      return { ok: true, blob, focusDisparity: disparity };
    },
  };
}
