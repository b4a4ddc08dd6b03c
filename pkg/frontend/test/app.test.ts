import { beforeEach, describe, expect, it } from "vitest";

import { ClientApp, ReplayPlayer, type Ui } from "../src/main.js";
import { LabelState } from "../src/labelDialog.js";
import type { Grid, StateFrame } from "../src/protocol.js";

function pgmBase64(fill: number): string {
  const header = "P5\n2 2\n255\n";
  const bytes = new Uint8Array(header.length + 4);
  for (let i = 0; i < header.length; i++) bytes[i] = header.charCodeAt(i);
  bytes.fill(fill, header.length);
  return btoa(String.fromCharCode(...bytes));
}

function wire(type: string, seq: number, fields: Record<string, unknown> = {}): string {
  return JSON.stringify({ format: "aeye-wire/1", type, seq, ...fields });
}

function frameMsg(seq: number, views: Record<string, string>): string {
  return wire("state_frame", seq, {
    tick: seq,
    speed_kmh: 10,
    light_phase: "green",
    ...views,
  });
}

class FakeUi implements Ui {
  rendered: { frame: StateFrame; grid: Grid }[] = [];
  dialogShown: number[] = [];
  dialogHidden = 0;
  banners: (string | null)[] = [];
  statuses: string[] = [];

  render(frame: StateFrame, grid: Grid) {
    this.rendered.push({ frame, grid });
  }
  showLabelDialog(tick: number) {
    this.dialogShown.push(tick);
  }
  hideLabelDialog() {
    this.dialogHidden += 1;
  }
  banner(text: string | null) {
    this.banners.push(text);
  }
  status(text: string) {
    this.statuses.push(text);
  }
}

describe("ClientApp state machine", () => {
  let ui: FakeUi;
  let sent: string[];

  beforeEach(() => {
    ui = new FakeUi();
    sent = [];
  });

  const app = (role: "semantic" | "safety") =>
    new ClientApp(role, ui, (t) => sent.push(t));

  it("walks lobby -> driving -> labeling -> driving", () => {
    const a = app("safety");
    expect(a.phase).toBe("lobby");
    a.handleText(wire("session_event", 1, { kind: "started" }));
    expect(a.phase).toBe("driving");
    a.handleText(wire("label_request", 2, { tick: 41 }));
    expect(a.phase).toBe("labeling");
    expect(ui.dialogShown).toEqual([41]);
    a.handleText(wire("session_event", 3, { kind: "cc_captured", id: "cc-live-t0000041" }));
    expect(a.phase).toBe("driving");
    expect(ui.dialogHidden).toBe(1);
  });

  it("pauses back to the lobby when the session pauses or ends", () => {
    const a = app("semantic");
    a.handleText(wire("session_event", 1, { kind: "started" }));
    a.handleText(wire("session_event", 2, { kind: "paused", reason: "safety disconnected" }));
    expect(a.phase).toBe("lobby");
    a.handleText(wire("session_event", 3, { kind: "resumed" }));
    expect(a.phase).toBe("driving");
    a.handleText(wire("session_event", 4, { kind: "ended" }));
    expect(a.phase).toBe("lobby");
  });

  it("shows a banner on malformed messages and keeps handling traffic", () => {
    const a = app("semantic");
    a.handleText("garbage{{");
    expect(ui.banners[0]).toMatch(/protocol error/);
    a.handleText(wire("session_event", 1, { kind: "started" }));
    expect(a.phase).toBe("driving"); // connection still useful
  });

  it("drops out-of-order frames", () => {
    const a = app("semantic");
    a.handleText(frameMsg(10, { semantic_view: pgmBase64(1) }));
    a.handleText(frameMsg(9, { semantic_view: pgmBase64(6) })); // stale
    a.handleText(frameMsg(10, { semantic_view: pgmBase64(6) })); // duplicate
    a.handleText(frameMsg(11, { semantic_view: pgmBase64(2) }));
    expect(ui.rendered.map((r) => r.frame.seq)).toEqual([10, 11]);
  });

  it("renders only its own role's view field", () => {
    const sem = app("semantic");
    sem.handleText(frameMsg(1, { clear_view: pgmBase64(1) }));
    expect(ui.rendered).toHaveLength(0); // semantic never draws clear_view
    sem.handleText(frameMsg(2, { semantic_view: pgmBase64(1) }));
    expect(ui.rendered).toHaveLength(1);

    const ui2 = new FakeUi();
    const saf = new ClientApp("safety", ui2, () => {});
    saf.handleText(frameMsg(1, { semantic_view: pgmBase64(1) }));
    expect(ui2.rendered).toHaveLength(0);
    saf.handleText(frameMsg(2, { clear_view: pgmBase64(1) }));
    expect(ui2.rendered).toHaveLength(1);
  });

  it("sends clamped inputs only while driving, with increasing seqs", () => {
    const a = app("safety");
    a.sendInput({ steer: 0, throttle: 1, brake: 0 });
    expect(sent).toHaveLength(0); // still in the lobby
    a.hello();
    a.handleText(wire("session_event", 1, { kind: "started" }));
    a.sendInput({ steer: 0.5, throttle: 0, brake: 0 });
    a.sendInput({ steer: 0, throttle: 0, brake: 1 });
    const msgs = sent.map((t) => JSON.parse(t));
    expect(msgs.map((m) => m.type)).toEqual(["hello", "control_input", "control_input"]);
    expect(msgs.map((m) => m.seq)).toEqual([1, 2, 3]);
    expect(msgs[2].cmd.brake).toBe(1);
  });

  it("surfaces rejections without changing phase", () => {
    const a = app("safety");
    a.handleText(wire("session_event", 1, { kind: "started" }));
    a.handleText(wire("rejected", 2, { reason: "bad command: steer out of range" }));
    expect(a.phase).toBe("driving");
    expect(ui.banners).toContain("bad command: steer out of range");
  });
});

describe("LabelState", () => {
  it("blocks submit until one of the four causes is picked", () => {
    const s = new LabelState();
    expect(s.trySubmit()).toBeNull(); // skipping is not possible
    expect(s.select("sneezed")).toBe(false);
    expect(s.trySubmit()).toBeNull();
    expect(s.select("overlooked_walker")).toBe(true);
    s.comment = "x".repeat(500);
    const label = s.trySubmit()!;
    expect(label.cause).toBe("overlooked_walker");
    expect(label.comment).toHaveLength(500); // long comments ride along intact
  });

  it("accepts each of the four causes", () => {
    for (const cause of [
      "overlooked_walker",
      "overlooked_vehicle",
      "traffic_rule_violation",
      "boredom",
    ]) {
      const s = new LabelState();
      expect(s.select(cause)).toBe(true);
      expect(s.trySubmit()!.cause).toBe(cause);
    }
  });
});

describe("ReplayPlayer", () => {
  it("plays state frames from an NDJSON dump in order", () => {
    const seen: number[] = [];
    const player = new ReplayPlayer((f) => seen.push(f.tick));
    const dump = [
      frameMsg(1, { clear_view: pgmBase64(1) }),
      wire("session_event", 2, { kind: "ended" }), // ignored
      frameMsg(3, { clear_view: pgmBase64(2) }),
    ].join("\n");
    expect(player.load(dump)).toBe(2);
    expect(player.step()).toBe(true);
    expect(player.step()).toBe(true);
    expect(player.step()).toBe(false);
    expect(seen).toEqual([1, 3]);
  });
});
