/**
 * Debounced, coalescing dispatcher for preview renders.
 *
 * Guarantees, regardless of how fast parameters change or how slowly the
 * server answers:
 *   - at most one request is in flight at a time;
 *   - at most one set of parameters waits behind it (newer changes
 *     overwrite the waiting set, intermediate values are never sent);
 *   - every request carries a monotonically increasing id, and a response
 *     is delivered only if nothing newer has been delivered or requested
 *     since, so stale pixels never land on screen.
 *
 * invalidate() raises the delivery floor past every id handed out so far;
 * call it when the session changes and old renders stop being meaningful.
 */

export interface Timers {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

const realTimers: Timers = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle as number),
};

export class RenderScheduler<P, R> {
  private timer: unknown = null;
  private queued: P | null = null;
  private pending: P | null = null;
  private inFlight = false;
  private nextId = 1;
  private deliveryFloor = 0;

  constructor(
    private readonly send: (params: P, id: number) => Promise<R>,
    private readonly deliver: (result: R, params: P) => void,
    private readonly onIdle: (err: unknown | null) => void = () => {},
    private readonly delayMs = 150,
    private readonly timers: Timers = realTimers,
  ) {}

  /** True while a request is in flight, queued, or waiting on the timer. */
  get busy(): boolean {
    return this.inFlight || this.pending !== null || this.timer !== null;
  }

  /** Debounced entry point: fires delayMs after the last change. */
  request(params: P): void {
    this.queued = params;
    if (this.timer !== null) {
      this.timers.clear(this.timer);
    }
    this.timer = this.timers.set(() => {
      this.timer = null;
      const p = this.queued as P;
      this.queued = null;
      this.fire(p);
    }, this.delayMs);
  }

  /** Immediate entry point for discrete actions like a focus click. */
  flush(params: P): void {
    if (this.timer !== null) {
      this.timers.clear(this.timer);
      this.timer = null;
      this.queued = null;
    }
    this.fire(params);
  }

  /** Drop anything queued and refuse delivery of every outstanding id. */
  invalidate(): void {
    if (this.timer !== null) {
      this.timers.clear(this.timer);
      this.timer = null;
    }
    this.queued = null;
    this.pending = null;
    // refuse every id handed out so far; ids not yet issued stay valid
    this.deliveryFloor = this.nextId - 1;
  }

  private fire(params: P): void {
    if (this.inFlight) {
      this.pending = params;
      return;
    }
    const id = this.nextId++;
    this.inFlight = true;
    this.send(params, id).then(
      (result) => this.settle(id, params, result, null),
      (err) => this.settle(id, params, null, err ?? new Error("request failed")),
    );
  }

  private settle(id: number, params: P, result: R | null, err: unknown | null): void {
    this.inFlight = false;
    const stale = id <= this.deliveryFloor;
    if (!stale && result !== null) {
      this.deliveryFloor = id;
      this.deliver(result, params);
    }
    if (this.pending !== null) {
      const p = this.pending;
      this.pending = null;
      this.fire(p);
      return;
    }
    this.onIdle(stale ? null : err);
  }
}
