// Message types for the vinesim session wire protocol (format_version 1).
// One JSON object per message, newline-terminated; transported either as raw
// NDJSON over TCP or as WebSocket text frames. See docs/wire-protocol.md.

export interface JointDescriptor {
  id: number;
  start_m: number;
  end_m: number;
}

export interface HelloMessage {
  type: "hello";
  format_version: number;
  t: number;
  robot: {
    name: string;
    construction: string;
    total_length_m: number;
    base_height_m: number;
    trunk_diameter_m: number;
    joints: JointDescriptor[];
  };
  limits: {
    operating_pa: number;
    burst_standalone_pa: number;
    burst_confined_pa: number;
    p_init_pa: number;
    p_grow_pa: number;
    p_crossing_pa: number;
  };
  dt_s: number;
}

export interface ShapePayload {
  s: number[];
  x: number[];
  y: number[];
  heading: number[];
  kappa: number[];
  element: number[];
}

export interface TipPayload {
  x: number;
  y: number;
  deflection_m: number;
}

export interface SessionEvent {
  t: number;
  kind: string;
  detail: string;
  length_m: number;
  p_t_pa: number;
}

export interface SnapshotMessage {
  type: "snapshot";
  t: number;
  phase: string;
  deployed_length_m: number;
  active_joint: number | null;
  pressures: { trunk_pa: number; joints_pa: Record<string, number> };
  tensions_n: Record<string, number>;
  payload_kg: number;
  pull_tension_n: number | null;
  flags: {
    insufficient_tension: boolean;
    stalled: boolean;
    buckling: boolean;
    fault: string | null;
  };
  shape: ShapePayload | null;
  tip: TipPayload;
  localization_index: number;
  events: SessionEvent[];
}

export interface AckMessage {
  type: "ack";
  verb: string;
  t: number;
  warning?: string;
}

export interface ErrorMessage {
  type: "error";
  verb?: string;
  message: string;
  t?: number;
}

export interface PreviewMessage {
  type: "preview";
  t: number;
  shape: ShapePayload | null;
  tip: TipPayload;
  localization_index: number;
  buckling: boolean;
}

export interface PreviewErrorMessage {
  type: "preview_error";
  message: string;
  t: number;
}

export interface PongMessage {
  type: "pong";
  t: number;
}

export type ServerMessage =
  | HelloMessage
  | SnapshotMessage
  | AckMessage
  | ErrorMessage
  | PreviewMessage
  | PreviewErrorMessage
  | PongMessage;

export type CommandVerb =
  | "set_trunk_pressure"
  | "set_joint_pressure"
  | "set_tendon_tension"
  | "pull_tail"
  | "attach_payload"
  | "preview"
  | "step"
  | "set_time_scale"
  | "ping";

export interface PreviewPattern {
  trunk_pa?: number;
  joints_pa?: Record<string, number>;
  tensions_n?: Record<string, number>;
  payload_kg?: number;
}

export interface CommandMessage {
  verb: CommandVerb;
  target?: number;
  value?: number | PreviewPattern;
  t?: number;
}

export function encodeCommand(command: CommandMessage): string {
  return JSON.stringify(command) + "\n";
}

export function parseServerMessage(line: string): ServerMessage | null {
  const text = line.trim();
  if (!text) return null;
  const parsed = JSON.parse(text) as { type?: string };
  if (typeof parsed.type !== "string") {
    throw new Error("server message missing type");
  }
  return parsed as ServerMessage;
}
