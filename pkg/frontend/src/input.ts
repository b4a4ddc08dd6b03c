// Keyboard + gamepad driving input. Sampled well above 20 Hz; outgoing
// commands are coalesced down to the service tick rate and always clamped
// to the legal command ranges before they leave the client.

export interface Command {
  steer: number;
  throttle: number;
  brake: number;
}

export const ZERO: Command = { steer: 0, throttle: 0, brake: 0 };

export const SAMPLE_HZ = 50; // input sampling (must stay >= 20)
export const SEND_HZ = 10;   // service tick rate; never send faster

export function clampCommand(c: Command): Command {
  const clip = (v: number, lo: number, hi: number) =>
    Number.isFinite(v) ? Math.min(Math.max(v, lo), hi) : 0;
  return {
    steer: clip(c.steer, -1, 1),
    throttle: clip(c.throttle, 0, 1),
    brake: clip(c.brake, 0, 1),
  };
}

/** Arrows steer/accelerate, space (or down arrow) brakes. */
export function commandFromKeys(down: ReadonlySet<string>): Command {
  let steer = 0;
  if (down.has("ArrowLeft")) steer -= 1;
  if (down.has("ArrowRight")) steer += 1;
  return {
    steer,
    throttle: down.has("ArrowUp") ? 1 : 0,
    brake: down.has(" ") || down.has("ArrowDown") ? 1 : 0,
  };
}

export interface PadLike {
  axes: ReadonlyArray<number>;
  buttons: ReadonlyArray<{ value: number }>;
}

/** Standard-mapping pad: left stick steers, triggers brake/accelerate. */
export function commandFromGamepad(
  pad: PadLike | null | undefined,
  deadzone = 0.08,
): Command | null {
  if (!pad) return null;
  const raw = pad.axes[0] ?? 0;
  return {
    steer: Math.abs(raw) < deadzone ? 0 : raw,
    throttle: pad.buttons[7]?.value ?? 0,
    brake: pad.buttons[6]?.value ?? 0,
  };
}

function active(c: Command): boolean {
  return c.steer !== 0 || c.throttle > 0.05 || c.brake > 0.05;
}

/** Gamepad wins while it is being used; keyboard is the fallback. */
export function mergeCommands(keyboard: Command, pad: Command | null): Command {
  if (pad && active(pad)) return pad;
  return keyboard;
}

export class KeyTracker {
  readonly down = new Set<string>();

  handle(key: string, pressed: boolean): void {
    if (pressed) this.down.add(key);
    else this.down.delete(key);
  }

  attach(target: {
    addEventListener(type: string, fn: (ev: KeyboardEvent) => void): void;
  }): void {
    target.addEventListener("keydown", (ev) => this.handle(ev.key, true));
    target.addEventListener("keyup", (ev) => this.handle(ev.key, false));
  }
}

/**
 * Polls `read` at `sampleHz` and forwards the latest clamped command to
 * `send` at `sendHz`. Two timers, one latest-wins slot in between.
 */
export class InputSampler {
  private current: Command = ZERO;
  private timers: ReturnType<typeof setInterval>[] = [];

  constructor(
    private read: () => Command,
    private send: (c: Command) => void,
    private sampleHz = SAMPLE_HZ,
    private sendHz = SEND_HZ,
  ) {}

  start(): void {
    this.stop();
    this.timers = [
      setInterval(() => {
        this.current = clampCommand(this.read());
      }, 1000 / this.sampleHz),
      setInterval(() => this.send(this.current), 1000 / this.sendHz),
    ];
  }

  stop(): void {
    for (const t of this.timers) clearInterval(t);
    this.timers = [];
  }
}
