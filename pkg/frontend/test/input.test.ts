import { afterEach, describe, expect, it, vi } from "vitest";

import {
  InputSampler,
  KeyTracker,
  SAMPLE_HZ,
  SEND_HZ,
  clampCommand,
  commandFromGamepad,
  commandFromKeys,
  mergeCommands,
} from "../src/input.js";

describe("commandFromKeys", () => {
  it("maps arrows and space onto steer/throttle/brake", () => {
    expect(commandFromKeys(new Set())).toEqual({ steer: 0, throttle: 0, brake: 0 });
    expect(commandFromKeys(new Set(["ArrowLeft"])).steer).toBe(-1);
    expect(commandFromKeys(new Set(["ArrowRight"])).steer).toBe(1);
    expect(commandFromKeys(new Set(["ArrowLeft", "ArrowRight"])).steer).toBe(0);
    expect(commandFromKeys(new Set(["ArrowUp"])).throttle).toBe(1);
    expect(commandFromKeys(new Set([" "])).brake).toBe(1);
    expect(commandFromKeys(new Set(["ArrowDown"])).brake).toBe(1);
  });
});

describe("clampCommand", () => {
  it("keeps every field inside the legal command ranges", () => {
    expect(clampCommand({ steer: -3, throttle: 2, brake: -1 })).toEqual({
      steer: -1,
      throttle: 1,
      brake: 0,
    });
    expect(clampCommand({ steer: NaN, throttle: Infinity, brake: 0.5 })).toEqual({
      steer: 0,
      throttle: 0,
      brake: 0.5,
    });
  });
});

describe("commandFromGamepad", () => {
  const pad = (axis0: number, brake = 0, throttle = 0) => ({
    axes: [axis0],
    buttons: Array.from({ length: 8 }, (_, i) => ({
      value: i === 6 ? brake : i === 7 ? throttle : 0,
    })),
  });

  it("applies a deadzone to the steering axis", () => {
    expect(commandFromGamepad(pad(0.04))!.steer).toBe(0);
    expect(commandFromGamepad(pad(0.5))!.steer).toBe(0.5);
    expect(commandFromGamepad(null)).toBeNull();
  });

  it("reads triggers as brake and throttle", () => {
    const c = commandFromGamepad(pad(0, 0.9, 0.3))!;
    expect(c.brake).toBe(0.9);
    expect(c.throttle).toBe(0.3);
  });
});

describe("mergeCommands", () => {
  it("prefers an active gamepad, falls back to the keyboard", () => {
    const kb = { steer: -1, throttle: 0, brake: 0 };
    expect(mergeCommands(kb, { steer: 0.7, throttle: 0, brake: 0 }).steer).toBe(0.7);
    expect(mergeCommands(kb, { steer: 0, throttle: 0, brake: 0 })).toEqual(kb);
    expect(mergeCommands(kb, null)).toEqual(kb);
  });
});

describe("KeyTracker", () => {
  it("tracks pressed keys", () => {
    const t = new KeyTracker();
    t.handle("ArrowUp", true);
    expect(commandFromKeys(t.down).throttle).toBe(1);
    t.handle("ArrowUp", false);
    expect(commandFromKeys(t.down).throttle).toBe(0);
  });
});

describe("InputSampler", () => {
  afterEach(() => vi.useRealTimers());

  it("samples at >= 20 Hz and sends at the service tick rate", () => {
    expect(SAMPLE_HZ).toBeGreaterThanOrEqual(20);
    vi.useFakeTimers();
    const sent: number[] = [];
    let reads = 0;
    const sampler = new InputSampler(
      () => ({ steer: ++reads, throttle: 0, brake: 0 }),
      (c) => sent.push(c.steer),
    );
    sampler.start();
    vi.advanceTimersByTime(1000);
    sampler.stop();
    expect(reads).toBeGreaterThanOrEqual(SAMPLE_HZ - 1); // sampled fast
    expect(sent.length).toBeLessThanOrEqual(SEND_HZ + 1); // sent slow
    expect(sent.length).toBeGreaterThanOrEqual(SEND_HZ - 1);
  });

  it("clamps whatever the reader produces before sending", () => {
    vi.useFakeTimers();
    const sent: number[] = [];
    const sampler = new InputSampler(
      () => ({ steer: 9, throttle: 0, brake: 0 }),
      (c) => sent.push(c.steer),
    );
    sampler.start();
    vi.advanceTimersByTime(500);
    sampler.stop();
    expect(sent.length).toBeGreaterThan(0);
    expect(sent.every((s) => s === 1)).toBe(true);
  });
});
