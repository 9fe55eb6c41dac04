/** Shared shapes for the refocus viewer. */

export interface Size {
  width: number;
  height: number;
}

/** Integer pixel position in source-image coordinates. */
export interface Point {
  x: number;
  y: number;
}

export type Overlay = "none" | "disparity";

export interface UiState {
  sessionId: string | null;
  /** Dimensions of the uploaded image, in pixels. */
  image: Size | null;
  /** Last clicked focus pixel, or null before the first click. */
  focus: Point | null;
  /** Focus-plane disparity echoed back by the server. */
  focusDisparity: number | null;
  /** Blur strength, 0..64. */
  k: number;
  shape: string;
  overlay: Overlay;
  busy: boolean;
  /** Inline error text from the last failed request, or null. */
  error: string | null;
}

export function initialState(): UiState {
  return {
    sessionId: null,
    image: null,
    focus: null,
    focusDisparity: null,
    k: 0,
    shape: "circle",
    overlay: "none",
    busy: false,
    error: null,
  };
}

/** Successful POST /api/upload body. */
export interface UploadOk {
  ok: true;
  session_id: string;
  width: number;
  height: number;
  disparity_preview_png: string;
}

/** Error body shared by every endpoint: {code, message} plus HTTP status. */
export interface ApiError {
  ok: false;
  status: number;
  code: string;
  message: string;
}

export type UploadOutcome = UploadOk | ApiError;

export interface RenderOk {
  ok: true;
  /** Rendered PNG. */
  blob: Blob;
  /** Parsed X-Focus-Disparity header. */
  focusDisparity: number;
}

export type RenderOutcome = RenderOk | ApiError;

export interface ShapeEntry {
  name: string;
  /** base64 PNG thumbnail of the aperture footprint. */
  thumbnail_png: string;
}
