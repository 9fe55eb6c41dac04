/** Browser entry point: wires the DOM to the api/scheduler/state modules. */

import type { Api, RenderBody } from "./api.js";
import { createApi } from "./api.js";
import { clientToImage, fitContain, imageToFraction } from "./coords.js";
import { RenderScheduler } from "./scheduler.js";
import { formatK, kToSlider, sliderToK } from "./slider.js";
import {
  applyFocusClick,
  applyK,
  applyRender,
  applyRenderError,
  applyUpload,
} from "./state.js";
import type { ApiError, RenderOk, UiState } from "./types.js";
import { initialState } from "./types.js";

const SLIDER_STEPS = 1000;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function isApiError(v: unknown): v is ApiError {
  return (
    typeof v === "object" &&
    v !== null &&
    (v as { ok?: unknown }).ok === false &&
    typeof (v as { code?: unknown }).code === "string"
  );
}

class App {
  private state: UiState = initialState();
  private readonly scheduler: RenderScheduler<RenderBody, RenderOk>;
  private fullRenderRunning = false;

  // DOM refs
  private readonly root: HTMLElement;
  private readonly imageInput = el("input");
  private readonly depthInput = el("input");
  private readonly sidecarInput = el("input");
  private readonly uploadButton = el("button", "", "Upload");
  private readonly errorBox = el("div", "error");
  private readonly viewer = el("div", "viewer");
  private readonly frame = el("div", "frame");
  private readonly canvas = el("canvas");
  private readonly overlayImg = el("img", "overlay") as HTMLImageElement;
  private readonly reticle = el("div", "reticle");
  private readonly hint = el("div", "hint", "upload an image, then click to focus");
  private readonly slider = el("input") as HTMLInputElement;
  private readonly kReadout = el("span", "readout");
  private readonly shapeSelect = el("select") as HTMLSelectElement;
  private readonly shapeThumb = el("img", "thumb") as HTMLImageElement;
  private readonly overlaySelect = el("select") as HTMLSelectElement;
  private readonly disparityReadout = el("span", "readout", "—");
  private readonly busyBadge = el("span", "busy", "rendering…");
  private readonly fullButton = el("button", "", "Full render");

  constructor(root: HTMLElement, private readonly api: Api) {
    this.root = root;
    this.scheduler = new RenderScheduler<RenderBody, RenderOk>(
      (body) => this.api.render(body).then((o) => (o.ok ? o : Promise.reject(o))),
      (result) => {
        this.state = applyRender(this.state, result);
        this.showPreview(result.blob);
        this.paint();
      },
      (err) => {
        if (isApiError(err)) {
          this.state = applyRenderError(this.state, err);
        } else if (err != null) {
          this.state = { ...this.state, error: String(err) };
        }
        this.paint();
      },
    );
    this.build();
    this.bind();
    void this.loadShapes();
    this.paint();
  }

  private build(): void {
    this.imageInput.type = "file";
    this.imageInput.accept = "image/png,image/jpeg";
    this.depthInput.type = "file";
    this.sidecarInput.type = "file";
    this.sidecarInput.accept = "application/json";

    const uploadRow = el("div", "panel");
    for (const [label, input] of [
      ["image", this.imageInput],
      ["depth", this.depthInput],
      ["depth sidecar (optional)", this.sidecarInput],
    ] as const) {
      const wrap = el("label", "file-field", label + " ");
      wrap.append(input);
      uploadRow.append(wrap);
    }
    uploadRow.append(this.uploadButton);

    this.frame.append(this.canvas, this.overlayImg, this.reticle);
    this.viewer.append(this.frame, this.hint);

    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = String(SLIDER_STEPS);
    this.slider.step = "1";
    this.slider.value = "0";

    this.overlaySelect.append(new Option("no overlay", "none"), new Option("disparity", "disparity"));

    const controls = el("div", "panel controls");
    const sliderField = el("label", "field", "blur ");
    sliderField.append(this.slider, this.kReadout);
    const shapeField = el("label", "field", "aperture ");
    shapeField.append(this.shapeSelect, this.shapeThumb);
    const overlayField = el("label", "field", "view ");
    overlayField.append(this.overlaySelect);
    const focusField = el("span", "field", "focus disparity ");
    focusField.append(this.disparityReadout);
    controls.append(sliderField, shapeField, overlayField, focusField, this.busyBadge, this.fullButton);

    const title = el("h1", "", "refocus");
    this.root.append(title, uploadRow, this.errorBox, this.viewer, controls);
  }

  private bind(): void {
    this.uploadButton.addEventListener("click", () => void this.upload());
    this.viewer.addEventListener("click", (ev) => this.onViewerClick(ev));
    this.slider.addEventListener("input", () => this.onSlider());
    this.shapeSelect.addEventListener("change", () => this.onParamChange());
    this.overlaySelect.addEventListener("change", () => {
      this.state = { ...this.state, overlay: this.overlaySelect.value as UiState["overlay"] };
      this.paint();
    });
    this.fullButton.addEventListener("click", () => void this.fullRender());
    window.addEventListener("resize", () => this.layout());
  }

  private async loadShapes(): Promise<void> {
    try {
      const shapes = await this.api.shapes();
      this.shapeSelect.replaceChildren();
      const thumbs = new Map<string, string>();
      for (const s of shapes) {
        this.shapeSelect.append(new Option(s.name, s.name));
        thumbs.set(s.name, `data:image/png;base64,${s.thumbnail_png}`);
      }
      this.shapeSelect.addEventListener("change", () => {
        this.shapeThumb.src = thumbs.get(this.shapeSelect.value) ?? "";
      });
      this.shapeSelect.value = this.state.shape;
      this.shapeThumb.src = thumbs.get(this.state.shape) ?? "";
    } catch (err) {
      this.state = { ...this.state, error: String(err) };
      this.paint();
    }
  }

  private async upload(): Promise<void> {
    const image = this.imageInput.files?.[0];
    const depth = this.depthInput.files?.[0];
    if (!image || !depth) {
      this.state = { ...this.state, error: "choose both an image and a depth file" };
      this.paint();
      return;
    }
    this.state = { ...this.state, busy: true, error: null };
    this.paint();
    const outcome = await this.api.upload({
      image,
      depth,
      sidecar: this.sidecarInput.files?.[0] ?? null,
    });
    this.state = applyUpload(this.state, outcome);
    if (outcome.ok) {
      // A fresh session invalidates every render already in flight.
      this.scheduler.invalidate();
      this.overlayImg.src = `data:image/png;base64,${outcome.disparity_preview_png}`;
      this.showPreview(image);
    }
    this.paint();
  }

  private onViewerClick(ev: MouseEvent): void {
    if (this.state.sessionId === null || this.state.image === null) return;
    const rect = this.canvas.getBoundingClientRect();
    const p = clientToImage(rect, this.state.image, ev.clientX, ev.clientY);
    if (p === null) return; // letterbox or outside the picture
    this.state = applyFocusClick(this.state, p);
    this.scheduler.flush(this.renderBody());
    this.paint();
  }

  private onSlider(): void {
    const k = sliderToK(Number(this.slider.value) / SLIDER_STEPS);
    this.state = applyK(this.state, k);
    this.onParamChange();
  }

  private onParamChange(): void {
    this.state = { ...this.state, shape: this.shapeSelect.value || this.state.shape };
    if (this.state.focus !== null) {
      this.scheduler.request(this.renderBody());
    }
    this.paint();
  }

  private renderBody(): RenderBody {
    const focus = this.state.focus;
    if (focus === null || this.state.sessionId === null) {
      throw new Error("render requested without focus or session");
    }
    return {
      session_id: this.state.sessionId,
      focus: { x: focus.x, y: focus.y },
      k: this.state.k,
      shape: this.state.shape,
      preview: true,
    };
  }

  private async fullRender(): Promise<void> {
    if (this.fullRenderRunning || this.state.focus === null) return;
    this.fullRenderRunning = true;
    this.paint();
    const outcome = await this.api.render({ ...this.renderBody(), preview: false });
    this.fullRenderRunning = false;
    if (!outcome.ok) {
      this.state = applyRenderError(this.state, outcome);
      this.paint();
      return;
    }
    this.state = applyRender(this.state, outcome);
    const url = URL.createObjectURL(outcome.blob);
    const a = el("a");
    a.href = url;
    a.download = `refocus-k${formatK(this.state.k)}.png`;
    a.click();
    setTimeout(() => URL.revokeObjectURL(url), 10_000);
    this.paint();
  }

  /** Draw a PNG blob (or the uploaded file itself) onto the canvas. */
  private showPreview(blob: Blob): void {
    const url = URL.createObjectURL(blob);
    const img = new Image();
    img.onload = () => {
      this.canvas.width = img.naturalWidth;
      this.canvas.height = img.naturalHeight;
      const ctx = this.canvas.getContext("2d");
      ctx?.drawImage(img, 0, 0);
      URL.revokeObjectURL(url);
      this.layout();
    };
    img.src = url;
  }

  /** Size the frame to letterbox the image inside the viewer. */
  private layout(): void {
    if (this.state.image === null) return;
    const box = this.viewer.getBoundingClientRect();
    const fit = fitContain(this.state.image, { width: box.width, height: box.height });
    this.frame.style.width = `${fit.width}px`;
    this.frame.style.height = `${fit.height}px`;
    this.placeReticle();
  }

  private placeReticle(): void {
    if (this.state.focus === null || this.state.image === null) {
      this.reticle.style.display = "none";
      return;
    }
    const { fx, fy } = imageToFraction(this.state.image, this.state.focus);
    this.reticle.style.display = "block";
    this.reticle.style.left = `${fx * 100}%`;
    this.reticle.style.top = `${fy * 100}%`;
  }

  private paint(): void {
    const busy = this.state.busy || this.scheduler.busy || this.fullRenderRunning;
    this.errorBox.textContent = this.state.error ?? "";
    this.errorBox.style.display = this.state.error ? "block" : "none";
    this.busyBadge.style.visibility = busy ? "visible" : "hidden";
    this.kReadout.textContent = formatK(this.state.k);
    this.slider.value = String(Math.round(kToSlider(this.state.k) * SLIDER_STEPS));
    this.disparityReadout.textContent =
      this.state.focusDisparity === null ? "—" : this.state.focusDisparity.toFixed(4);
    this.overlayImg.style.display = this.state.overlay === "disparity" ? "block" : "none";
    this.hint.style.display = this.state.sessionId === null ? "block" : "none";
    const ready = this.state.sessionId !== null;
    this.slider.disabled = !ready;
    this.shapeSelect.disabled = !ready;
    this.overlaySelect.disabled = !ready;
    this.fullButton.disabled = !ready || this.state.focus === null || this.fullRenderRunning;
    this.placeReticle();
  }
}

const mount = document.getElementById("app");
if (mount) {
  new App(mount, createApi());
}
