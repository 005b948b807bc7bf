// End-to-end console acceptance: a scripted session drives the real Python
// session service over WebSocket through the console's transport/state/render
// pipeline, replaying the sequential shape-locking command sequence.

import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import { dirname, resolve } from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServerMessage, SnapshotMessage } from "../src/protocol";
import { buildRenderModel, ViewTransform, worldToScreen } from "../src/render";
import { ConsoleStore } from "../src/state";
import { SessionClient, wrapWebSocket } from "../src/transport";

const REPO = resolve(dirname(fileURLToPath(import.meta.url)), "../..");

let service: ChildProcess;
let servicePort = 0;

async function startService(): Promise<void> {
  service = spawn(
    "python3",
    ["-m", "vinesim.cli", "serve", "--port", "0", "--no-realtime", "--robot", "shape_demo"],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  servicePort = await new Promise<number>((resolvePort, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not start")), 20_000);
    let buffer = "";
    service.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on [\d.]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolvePort(Number(match[1]));
      }
    });
    service.on("exit", () => reject(new Error("service exited during startup")));
  });
}

function until(predicate: () => boolean, timeoutMs = 20_000, what = "condition"): Promise<void> {
  const started = Date.now();
  return new Promise((resolveWait, reject) => {
    const poll = () => {
      if (predicate()) return resolveWait();
      if (Date.now() - started > timeoutMs) return reject(new Error(`timeout waiting for ${what}`));
      setTimeout(poll, 5);
    };
    poll();
  });
}

class Harness {
  store = new ConsoleStore();
  client!: SessionClient;
  sentFrames = 0;
  private ws!: WebSocket;

  async connect(port: number): Promise<void> {
    this.ws = new WebSocket(`ws://127.0.0.1:${port}/session`);
    const raw = wrapWebSocket(this.ws as never);
    const originalSend = raw.send.bind(raw);
    raw.send = (text: string) => {
      this.sentFrames += 1;
      originalSend(text);
    };
    this.client = new SessionClient(raw);
    this.store.attach(this.client);
    await until(() => this.store.hello !== null && this.store.snapshot !== null, 20_000, "hello");
  }

  /** Send a value command and wait until a snapshot reflects it (pending drained). */
  async command(verb: never | any, target: number | undefined, value: number): Promise<void> {
    const result = this.store.sendCommand(verb, target, value);
    expect(result.sent).toBe(true);
    await until(
      () => this.store.pending.length === 0,
      20_000,
      `${verb} reflected in a snapshot`,
    );
  }

  async step(n: number): Promise<void> {
    const before = this.store.snapshot!.t;
    this.store.sendCommand("step", undefined, n);
    await until(
      () => this.store.snapshot!.t > before && this.store.pending.length === 0,
      30_000,
      "step snapshot",
    );
  }

  close(): void {
    this.client.close();
  }
}

beforeAll(async () => {
  await startService();
}, 30_000);

afterAll(() => {
  service?.kill();
});

describe("operator console against the live service", () => {
  it("replays the shape-locking sequence and renders the final snapshot exactly", async () => {
    const harness = new Harness();
    await harness.connect(servicePort);
    const { store } = harness;
    const total = store.hello!.robot.total_length_m;

    // pending commands are never shown as applied before a snapshot confirms
    const sawPending = store.sendCommand("set_trunk_pressure", undefined, 12_000);
    expect(sawPending.sent).toBe(true);
    expect(store.pending.length).toBe(1);
    await until(() => store.pending.length === 0, 20_000, "trunk pressure reflected");
    expect(store.snapshot!.pressures.trunk_pa).toBe(12_000);

    // grow to full length (28 simulated seconds)
    await harness.step(560);
    expect(store.snapshot!.deployed_length_m).toBeCloseTo(total, 9);

    // stage B: stiffen both joints, pull the steering tendon
    await harness.command("set_joint_pressure", 1, 15_000);
    await harness.command("set_joint_pressure", 2, 15_000);
    await harness.command("set_tendon_tension", 1, 8);

    // stage C: release the proximal joint; bending localizes there
    await harness.command("set_joint_pressure", 1, 0);
    expect(store.snapshot!.localization_index).toBeGreaterThanOrEqual(0.8);

    // stage D: re-stiffen; stage E: release the distal joint instead
    await harness.command("set_joint_pressure", 1, 15_000);
    await harness.command("set_joint_pressure", 2, 0);
    const finalSnapshot = store.snapshot!;
    expect(finalSnapshot.localization_index).toBeGreaterThanOrEqual(0.8);
    expect(finalSnapshot.flags.fault).toBeNull();

    // rendered configuration == service's final snapshot, within rendering scale
    const view: ViewTransform = { scale: 420, originX: 60, originY: 520 };
    const model = buildRenderModel(store.hello!, finalSnapshot, view);
    const shape = finalSnapshot.shape!;
    expect(model.polyline.length).toBe(shape.x.length);
    shape.x.forEach((x, i) => {
      const [sx, sy] = worldToScreen(view, x, shape.y[i]);
      expect(model.polyline[i][0]).toBeCloseTo(sx, 9);
      expect(model.polyline[i][1]).toBeCloseTo(sy, 9);
    });
    const stiffened = model.jointMarkers.filter((m) => m.stiffened).map((m) => m.id);
    expect(stiffened).toEqual([1]);
    harness.close();
  }, 120_000);

  it("blocks a 22 kPa joint-pressure command at the service-published burst limit", async () => {
    const harness = new Harness();
    await harness.connect(servicePort);
    const framesBefore = harness.sentFrames;
    const result = harness.store.sendCommand("set_joint_pressure", 1, 22_000);
    expect(result.sent).toBe(false);
    expect(result.blocked).toMatch(/21400/);
    expect(harness.sentFrames).toBe(framesBefore); // nothing went on the wire
    // above operating limit but below burst: sent, with a warning
    const warned = harness.store.sendCommand("set_joint_pressure", 1, 16_000);
    expect(warned.sent).toBe(true);
    await until(() => harness.store.pending.length === 0, 20_000, "16 kPa reflected");
    harness.close();
  }, 60_000);

  it("what-if preview of venting the distal joint matches the committed solve exactly", async () => {
    const harness = new Harness();
    await harness.connect(servicePort);
    const { store } = harness;

    await harness.command("set_trunk_pressure", undefined, 12_000);
    await harness.step(560); // fully deployed, clock paused
    await harness.command("set_joint_pressure", 1, 15_000);
    await harness.command("set_joint_pressure", 2, 15_000);
    await harness.command("set_tendon_tension", 1, 8);

    const pattern = { joints_pa: { "2": 0 } };
    expect(store.requestPreview(pattern)).toBe(true);
    await until(() => store.preview !== null, 20_000, "preview reply");
    const preview = store.preview!;

    store.commitPattern(pattern);
    await until(() => store.pending.length === 0, 20_000, "commit reflected");
    const committed: SnapshotMessage = store.snapshot!;

    expect(committed.pressures.joints_pa["2"]).toBe(0);
    expect(JSON.stringify(preview.shape)).toEqual(JSON.stringify(committed.shape));
    expect(JSON.stringify(preview.tip)).toEqual(JSON.stringify(committed.tip));
    expect(preview.localization_index).toBe(committed.localization_index);
    harness.close();
  }, 120_000);

  it("keeps two sessions isolated", async () => {
    const a = new Harness();
    const b = new Harness();
    await a.connect(servicePort);
    await b.connect(servicePort);
    await a.command("set_trunk_pressure", undefined, 12_000);
    await a.step(100);
    expect(a.store.snapshot!.deployed_length_m).toBeGreaterThan(0.2);
    expect(b.store.snapshot!.deployed_length_m).toBe(0);
    a.close();
    b.close();
  }, 60_000);
});

describe("console messages", () => {
  it("parses every server message type it may receive", async () => {
    const harness = new Harness();
    const seen: string[] = [];
    await harness.connect(servicePort);
    harness.client.onMessage((m: ServerMessage) => seen.push(m.type));
    harness.store.sendCommand("ping", undefined, 0);
    await until(() => seen.includes("pong"), 10_000, "pong");
    harness.close();
  }, 30_000);
});
