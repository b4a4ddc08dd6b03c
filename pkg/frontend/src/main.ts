// Browser client for live two-driver sessions. One connection, one role:
// the semantic driver sees only the degraded semantic view, the safety
// driver only the clear view. A single event loop handles network
// receive, input sampling, and rendering; outgoing commands are limited
// to the service tick rate.

import {
  FrameGate,
  Outbox,
  ProtocolError,
  decodeGrid,
  parseMessage,
  type Cause,
  type Grid,
  type Role,
  type ServerMsg,
  type StateFrame,
} from "./protocol.js";
import {
  InputSampler,
  KeyTracker,
  commandFromGamepad,
  commandFromKeys,
  mergeCommands,
  type Command,
} from "./input.js";
import { GridRenderer } from "./render.js";
import { LabelDialog, type Label } from "./labelDialog.js";

export type Phase = "lobby" | "driving" | "labeling" | "replay";

// Which frame field a role is allowed to draw. Fixed at construction, so
// a semantic client never touches clear_view (and vice versa).
export const VIEW_FIELD: Record<Role, "semantic_view" | "clear_view"> = {
  semantic: "semantic_view",
  safety: "clear_view",
};

export interface Ui {
  render(frame: StateFrame, grid: Grid): void;
  showLabelDialog(tick: number): void;
  hideLabelDialog(): void;
  banner(text: string | null): void;
  status(text: string): void;
}

export class ClientApp {
  phase: Phase = "lobby";
  private readonly gate = new FrameGate();
  private readonly outbox = new Outbox();
  private readonly viewField: "semantic_view" | "clear_view";

  constructor(
    readonly role: Role,
    private readonly ui: Ui,
    private readonly sendRaw: (text: string) => void,
  ) {
    this.viewField = VIEW_FIELD[role];
  }

  hello(): void {
    this.sendRaw(this.outbox.hello(this.role));
  }

  /** Feed one raw wire message through the state machine. */
  handleText(text: string): void {
    let msg: ServerMsg;
    try {
      msg = parseMessage(text);
    } catch (e) {
      // Bad message, intact connection: complain visibly and carry on.
      const reason = e instanceof ProtocolError ? e.message : String(e);
      this.ui.banner(`protocol error: ${reason}`);
      return;
    }
    this.handle(msg);
  }

  private handle(msg: ServerMsg): void {
    switch (msg.type) {
      case "role_assigned":
        this.ui.status(`role ${msg.role} assigned; waiting for the other driver`);
        break;
      case "rejected":
        this.ui.banner(msg.reason);
        break;
      case "label_request":
        this.phase = "labeling";
        this.ui.showLabelDialog(msg.tick);
        break;
      case "session_event":
        this.handleEvent(msg.kind, msg);
        break;
      case "state_frame":
        this.handleFrame(msg);
        break;
    }
  }

  private handleEvent(kind: string, msg: { id?: string; reason?: string }): void {
    switch (kind) {
      case "started":
      case "resumed":
        if (this.phase !== "labeling") {
          this.phase = "driving";
          this.ui.status("driving");
          this.ui.banner(null);
        }
        break;
      case "paused":
        this.phase = "lobby";
        this.ui.status(`paused: ${msg.reason ?? "waiting for both drivers"}`);
        break;
      case "ended":
        this.phase = "lobby";
        this.ui.status("session ended");
        break;
      case "cc_captured":
        this.phase = "driving";
        this.ui.hideLabelDialog();
        this.ui.status(`corner case ${msg.id ?? "?"} captured`);
        break;
    }
  }

  private handleFrame(frame: StateFrame): void {
    if (!this.gate.accept(frame.seq)) return; // out of order: drop silently
    const payload = frame[this.viewField];
    if (payload === undefined) return;
    let grid: Grid;
    try {
      grid = decodeGrid(payload);
    } catch (e) {
      this.ui.banner(`protocol error: ${e instanceof Error ? e.message : e}`);
      return;
    }
    this.ui.render(frame, grid);
  }

  /** Called by the input sampler; only forwards while actually driving. */
  sendInput(cmd: Command): void {
    if (this.phase !== "driving") return;
    this.sendRaw(this.outbox.controlInput(this.role, cmd));
  }

  submitLabel(cause: Cause, comment: string): void {
    this.sendRaw(this.outbox.interventionLabel(cause, comment));
  }
}

/** Plays a saved NDJSON wire dump (from the replay subcommand). */
export class ReplayPlayer {
  private frames: StateFrame[] = [];
  private index = 0;

  constructor(private readonly onFrame: (f: StateFrame) => void) {}

  load(ndjson: string): number {
    this.frames = [];
    this.index = 0;
    for (const line of ndjson.split("\n")) {
      if (!line.trim()) continue;
      const msg = parseMessage(line);
      if (msg.type === "state_frame") this.frames.push(msg);
    }
    return this.frames.length;
  }

  /** True while there was a frame to show. */
  step(): boolean {
    if (this.index >= this.frames.length) return false;
    this.onFrame(this.frames[this.index++]);
    return true;
  }
}

// --------------------------------------------------------------------------
// DOM bootstrap (skipped under test, where there is no document)
// --------------------------------------------------------------------------

function boot(doc: Document): void {
  const lobby = doc.getElementById("lobby") as HTMLElement;
  const hud = doc.getElementById("hud") as HTMLElement;
  const bannerEl = doc.getElementById("banner") as HTMLElement;
  const statusEl = doc.getElementById("status") as HTMLElement;
  const canvas = doc.getElementById("view") as HTMLCanvasElement;
  const renderer = new GridRenderer(canvas);

  const ui: Ui = {
    render(frame, grid) {
      renderer.draw(grid, frame.speed_kmh, frame.light_phase);
    },
    showLabelDialog(tick) {
      dialog.show(tick);
    },
    hideLabelDialog() {
      dialog.hide();
    },
    banner(text) {
      bannerEl.textContent = text ?? "";
      bannerEl.classList.toggle("hidden", text === null);
    },
    status(text) {
      statusEl.textContent = text;
    },
  };

  let app: ClientApp | null = null;
  const dialog = new LabelDialog(doc.body, (label: Label) => {
    app?.submitLabel(label.cause, label.comment);
  });

  const keys = new KeyTracker();
  keys.attach(window);
  const readCommand = (): Command => {
    const pads = navigator.getGamepads?.() ?? [];
    const pad = commandFromGamepad(pads.find(Boolean) ?? null);
    return mergeCommands(commandFromKeys(keys.down), pad);
  };
  const sampler = new InputSampler(readCommand, (cmd) => app?.sendInput(cmd));

  function connect(role: Role): void {
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    const ws = new WebSocket(`${proto}//${location.host}/ws`);
    app = new ClientApp(role, ui, (text) => {
      if (ws.readyState === WebSocket.OPEN) ws.send(text);
    });
    ws.onopen = () => app?.hello();
    ws.onmessage = (ev) => app?.handleText(String(ev.data));
    ws.onclose = () => {
      sampler.stop();
      ui.status("disconnected");
      lobby.classList.remove("hidden");
      hud.classList.add("hidden");
    };
    lobby.classList.add("hidden");
    hud.classList.remove("hidden");
    ui.status(`connecting as ${role} driver`);
    sampler.start();
  }

  for (const role of ["semantic", "safety"] as const) {
    doc.getElementById(`join-${role}`)?.addEventListener("click", () => connect(role));
  }

  const replay = new ReplayPlayer((frame) => {
    const payload = frame.clear_view ?? frame.semantic_view;
    if (payload) renderer.draw(decodeGrid(payload), frame.speed_kmh, frame.light_phase);
  });
  const filePick = doc.getElementById("replay-file") as HTMLInputElement | null;
  filePick?.addEventListener("change", async () => {
    const file = filePick.files?.[0];
    if (!file) return;
    const n = replay.load(await file.text());
    lobby.classList.add("hidden");
    hud.classList.remove("hidden");
    ui.status(`replaying ${n} frames from ${file.name}`);
    const timer = setInterval(() => {
      if (!replay.step()) {
        clearInterval(timer);
        ui.status("replay finished");
        lobby.classList.remove("hidden");
      }
    }, 100);
  });
}

if (typeof document !== "undefined" && document.getElementById("view")) {
  boot(document);
}
