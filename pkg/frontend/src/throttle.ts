/** Trailing-edge rate limiter for interactive control streams.
 *
 * At most one send per interval; the newest value always wins, with the
 * final value flushed on the trailing edge so the server converges to
 * exactly where the drag ended.
 */

export class TrailingThrottle<T> {
  private lastSent = -Infinity;
  private pending: T | undefined;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (value: T) => void,
    private readonly intervalMs: number = 1000 / 60,
    private readonly clock: () => number = () => Date.now(),
  ) {}

  push(value: T): void {
    const now = this.clock();
    if (now - this.lastSent >= this.intervalMs) {
      this.lastSent = now;
      this.send(value);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      const wait = this.intervalMs - (now - this.lastSent);
      this.timer = setTimeout(() => this.flush(), wait);
    }
  }

  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending !== undefined) {
      this.lastSent = this.clock();
      this.send(this.pending);
      this.pending = undefined;
    }
  }

  dispose(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = undefined;
  }
}
