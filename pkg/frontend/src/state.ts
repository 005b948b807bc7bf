// Console state: latest snapshot, pending commands, validation against the
// service-published limits, and the event log. No rendering here.
//
// A command is "pending" from the moment it is sent until a snapshot reflects
// it; the UI draws pending values differently from acknowledged state. All
// pressure limits come from the hello message; nothing is hard-coded.

import {
  CommandMessage,
  CommandVerb,
  HelloMessage,
  PreviewMessage,
  PreviewPattern,
  ServerMessage,
  SessionEvent,
  SnapshotMessage,
} from "./protocol";
import { SessionClient } from "./transport";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PendingCommand {
  command: CommandMessage;
  sentAt: number;
  reflected: (snapshot: SnapshotMessage) => boolean;
}

export interface SendResult {
  sent: boolean;
  queued?: boolean;
  blocked?: string;
  warning?: string;
}

const STALE_AFTER_MS = 2000;

function reflectionPredicate(command: CommandMessage): (s: SnapshotMessage) => boolean {
  const value = command.value;
  switch (command.verb) {
    case "set_trunk_pressure":
      return (s) => s.pressures.trunk_pa === value;
    case "set_joint_pressure":
      return (s) => s.pressures.joints_pa[String(command.target)] === value;
    case "set_tendon_tension":
      return (s) => s.tensions_n[String(command.target)] === value;
    case "attach_payload":
      return (s) => s.payload_kg === value;
    case "pull_tail":
      return (s) => s.pull_tension_n === value;
    default:
      // step / set_time_scale / ping resolve on their ack instead
      return () => true;
  }
}

export class ConsoleStore {
  status: ConnectionStatus = "connecting";
  hello: HelloMessage | null = null;
  snapshot: SnapshotMessage | null = null;
  lastSnapshotAt = 0;
  pending: PendingCommand[] = [];
  queuedWhileDisconnected: CommandMessage[] = [];
  eventLog: SessionEvent[] = [];
  banner: string | null = null;
  preview: PreviewMessage | null = null;
  previewError: string | null = null;
  lastError: string | null = null;
  lastWarning: string | null = null;

  private client: SessionClient | null = null;
  private listeners: Array<() => void> = [];
  private clock: () => number;

  constructor(clock: () => number = () => Date.now()) {
    this.clock = clock;
  }

  attach(client: SessionClient): void {
    this.client = client;
    client.onOpen(() => {
      this.status = "connected";
      this.banner = null;
      const queued = this.queuedWhileDisconnected;
      this.queuedWhileDisconnected = [];
      queued.forEach((command) => this.dispatch(command));
      this.notify();
    });
    client.onClose(() => {
      this.status = "disconnected";
      this.banner = "connection lost; commands will be queued";
      this.notify();
    });
    client.onMessage((message) => this.apply(message));
  }

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    this.listeners.forEach((cb) => cb());
  }

  apply(message: ServerMessage): void {
    switch (message.type) {
      case "hello":
        this.hello = message;
        this.status = "connected";
        break;
      case "snapshot":
        this.snapshot = message;
        this.lastSnapshotAt = this.clock();
        this.eventLog.push(...message.events);
        if (this.eventLog.length > 500) {
          this.eventLog = this.eventLog.slice(-500);
        }
        this.pending = this.pending.filter((p) => !p.reflected(message));
        break;
      case "ack":
        if (message.warning) this.lastWarning = message.warning;
        this.pending = this.pending.filter(
          (p) =>
            !(
              ["step", "set_time_scale", "ping"].includes(p.command.verb) &&
              p.command.verb === message.verb
            ),
        );
        break;
      case "error":
        this.lastError = message.message;
        break;
      case "preview":
        this.preview = message;
        this.previewError = null;
        break;
      case "preview_error":
        this.preview = null;
        this.previewError = message.message;
        break;
      case "pong":
        break;
    }
    this.notify();
  }

  /** Inline validation for joint pressure edits, using the hello limits. */
  validateJointPressure(valuePa: number): { blocked?: string; warning?: string } {
    if (!this.hello) return {};
    const { burst_standalone_pa, operating_pa } = this.hello.limits;
    if (valuePa >= burst_standalone_pa) {
      return {
        blocked: `blocked: ${valuePa} Pa is at or above the ${burst_standalone_pa} Pa burst limit`,
      };
    }
    if (valuePa > operating_pa) {
      return { warning: `${valuePa} Pa exceeds the ${operating_pa} Pa operating limit` };
    }
    return {};
  }

  sendCommand(verb: CommandVerb, target: number | undefined, value: number): SendResult {
    if (verb === "set_joint_pressure") {
      const check = this.validateJointPressure(value);
      if (check.blocked) {
        this.banner = check.blocked;
        this.notify();
        return { sent: false, blocked: check.blocked };
      }
      if (check.warning) this.lastWarning = check.warning;
    }
    const command: CommandMessage = { verb, value };
    if (target !== undefined) command.target = target;
    if (this.status !== "connected") {
      this.queuedWhileDisconnected.push(command);
      this.banner = "disconnected: command queued";
      this.notify();
      return { sent: false, queued: true };
    }
    this.dispatch(command);
    return { sent: true, warning: this.lastWarning ?? undefined };
  }

  requestPreview(pattern: PreviewPattern): boolean {
    if (this.status !== "connected" || !this.client) return false;
    this.client.send({ verb: "preview", value: pattern });
    return true;
  }

  /** Commit a previously previewed pattern by issuing the real commands. */
  commitPattern(pattern: PreviewPattern): void {
    if (pattern.trunk_pa !== undefined) {
      this.sendCommand("set_trunk_pressure", undefined, pattern.trunk_pa);
    }
    for (const [joint, value] of Object.entries(pattern.joints_pa ?? {})) {
      this.sendCommand("set_joint_pressure", Number(joint), value);
    }
    for (const [tendon, value] of Object.entries(pattern.tensions_n ?? {})) {
      this.sendCommand("set_tendon_tension", Number(tendon), value);
    }
    if (pattern.payload_kg !== undefined) {
      this.sendCommand("attach_payload", undefined, pattern.payload_kg);
    }
    this.preview = null;
    this.notify();
  }

  private dispatch(command: CommandMessage): void {
    if (!this.client) return;
    command.t = this.snapshot?.t ?? 0;
    this.client.send(command);
    this.pending.push({
      command,
      sentAt: this.clock(),
      reflected: reflectionPredicate(command),
    });
    this.notify();
  }

  isStale(now: number = this.clock()): boolean {
    if (this.snapshot === null) return false;
    return now - this.lastSnapshotAt > STALE_AFTER_MS;
  }

  pendingValueFor(verb: CommandVerb, target?: number): number | undefined {
    for (let i = this.pending.length - 1; i >= 0; i -= 1) {
      const p = this.pending[i];
      if (p.command.verb === verb && p.command.target === target) {
        return p.command.value as number;
      }
    }
    return undefined;
  }
}
