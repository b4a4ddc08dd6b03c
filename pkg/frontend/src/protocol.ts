// aeye-wire/1 client side: message parsing, sequence bookkeeping, and the
// base64-PGM grid codec. One JSON object per websocket text frame.

export const WIRE_FORMAT = "aeye-wire/1";

export type Role = "semantic" | "safety";
export type LightPhase = "green" | "yellow" | "red";
export type Cause =
  | "overlooked_walker"
  | "overlooked_vehicle"
  | "traffic_rule_violation"
  | "boredom";

export interface Grid {
  rows: number;
  cols: number;
  data: Uint8Array;
}

interface Base {
  seq: number;
}

export interface RoleAssigned extends Base {
  type: "role_assigned";
  role: Role;
}

export interface Rejected extends Base {
  type: "rejected";
  reason: string;
}

export interface StateFrame extends Base {
  type: "state_frame";
  tick: number;
  speed_kmh: number;
  light_phase: LightPhase | null; // null: no light ahead (always null in replays)
  semantic_view?: string;
  clear_view?: string;
}

export interface LabelRequest extends Base {
  type: "label_request";
  tick: number;
}

export interface SessionEvent extends Base {
  type: "session_event";
  kind: "started" | "resumed" | "paused" | "ended" | "cc_captured";
  id?: string;
  reason?: string;
}

export type ServerMsg =
  | RoleAssigned
  | Rejected
  | StateFrame
  | LabelRequest
  | SessionEvent;

const SERVER_TYPES = new Set([
  "role_assigned",
  "rejected",
  "state_frame",
  "label_request",
  "session_event",
]);

export class ProtocolError extends Error {}

export function parseMessage(text: string): ServerMsg {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    throw new ProtocolError("message is not valid JSON");
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const m = msg as Record<string, unknown>;
  if (m.format !== WIRE_FORMAT) {
    throw new ProtocolError(`unsupported wire format ${JSON.stringify(m.format)}`);
  }
  if (typeof m.type !== "string" || !SERVER_TYPES.has(m.type)) {
    throw new ProtocolError(`unknown message type ${JSON.stringify(m.type)}`);
  }
  if (typeof m.seq !== "number" || !Number.isInteger(m.seq)) {
    throw new ProtocolError("message missing integer seq");
  }
  return m as unknown as ServerMsg;
}

/** Drops frames that arrive at or behind the newest seq already shown. */
export class FrameGate {
  private lastSeq = -1;

  accept(seq: number): boolean {
    if (seq <= this.lastSeq) return false;
    this.lastSeq = seq;
    return true;
  }
}

/** Stamps outgoing messages with one strictly increasing seq counter. */
export class Outbox {
  private seq = 0;

  make(type: string, fields: Record<string, unknown> = {}): string {
    this.seq += 1;
    return JSON.stringify({ format: WIRE_FORMAT, type, seq: this.seq, ...fields });
  }

  hello(role: Role): string {
    return this.make("hello", { role });
  }

  controlInput(role: Role, cmd: { steer: number; throttle: number; brake: number }): string {
    return this.make("control_input", { role, cmd });
  }

  interventionLabel(cause: Cause, comment: string): string {
    return this.make("intervention_label", { cause, comment });
  }
}

function base64Bytes(b64: string): Uint8Array {
  let raw: string;
  try {
    raw = atob(b64);
  } catch {
    throw new ProtocolError("grid payload is not valid base64");
  }
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

/** Decode a base64 8-bit PGM ("P5\n<w> <h>\n255\n<bytes>") into a Grid. */
export function decodeGrid(payload: string): Grid {
  const blob = base64Bytes(payload);
  let cuts = 0;
  let headerEnd = -1;
  for (let i = 0; i < blob.length; i++) {
    if (blob[i] === 0x0a && ++cuts === 3) {
      headerEnd = i + 1;
      break;
    }
  }
  if (headerEnd < 0) throw new ProtocolError("grid payload is not a PGM");
  const header = String.fromCharCode(...blob.subarray(0, headerEnd));
  const match = /^P5\n(\d+) (\d+)\n255\n$/.exec(header);
  if (!match) throw new ProtocolError("malformed PGM header in grid payload");
  const cols = parseInt(match[1], 10);
  const rows = parseInt(match[2], 10);
  const body = blob.subarray(headerEnd);
  if (body.length !== rows * cols) {
    throw new ProtocolError("PGM payload size mismatch");
  }
  return { rows, cols, data: body };
}
