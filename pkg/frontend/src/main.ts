// Browser entry point: connects to the session service over WebSocket, wires
// the controls, and redraws the side view on every store change.

import { PreviewPattern } from "./protocol";
import { buildRenderModel, drawModel, ViewTransform } from "./render";
import { ConsoleStore } from "./state";
import { SessionClient, wrapWebSocket } from "./transport";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "7781";

const store = new ConsoleStore();
const ws = new WebSocket(`ws://${host}:${port}/session`);
const client = new SessionClient(wrapWebSocket(ws));
store.attach(client);

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const view: ViewTransform = { scale: 420, originX: 60, originY: canvas.height - 40 };

const controls = document.getElementById("controls")!;
const statusLine = document.getElementById("status")!;
const logPane = document.getElementById("log")!;

function numberInput(label: string, initial: number, onCommit: (v: number) => void): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "control";
  wrap.textContent = label;
  const input = document.createElement("input");
  input.type = "number";
  input.value = String(initial);
  const button = document.createElement("button");
  button.textContent = "set";
  button.onclick = () => onCommit(Number(input.value));
  wrap.append(input, button);
  return wrap;
}

let controlsBuilt = false;
function buildControls(): void {
  if (controlsBuilt || !store.hello) return;
  controlsBuilt = true;
  const hello = store.hello;

  controls.append(
    numberInput("trunk [Pa]", 0, (v) => store.sendCommand("set_trunk_pressure", undefined, v)),
  );
  for (const joint of hello.robot.joints) {
    const slider = document.createElement("label");
    slider.className = "control";
    slider.textContent = `joint ${joint.id} [Pa]`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    // slider range ends at the burst limit so the hard stop is visible;
    // values at/above it are blocked with a banner before any send
    input.max = String(hello.limits.burst_standalone_pa + 1000);
    input.step = "100";
    input.value = "0";
    const readout = document.createElement("span");
    readout.textContent = "0";
    input.oninput = () => {
      readout.textContent = input.value;
      const check = store.validateJointPressure(Number(input.value));
      readout.className = check.blocked ? "blocked" : check.warning ? "warning" : "";
    };
    input.onchange = () => {
      store.sendCommand("set_joint_pressure", joint.id, Number(input.value));
    };
    slider.append(input, readout);
    controls.append(slider);
  }
  for (const tendon of [1, 3]) {
    controls.append(
      numberInput(`tendon ${tendon} [N]`, 0, (v) =>
        store.sendCommand("set_tendon_tension", tendon, v),
      ),
    );
  }
  controls.append(
    numberInput("payload [kg]", 0, (v) => store.sendCommand("attach_payload", undefined, v)),
    numberInput("pull tail [N]", 0, (v) => store.sendCommand("pull_tail", undefined, v)),
    numberInput("time scale", 1, (v) => store.sendCommand("set_time_scale", undefined, v)),
  );

  const previewButton = document.createElement("button");
  previewButton.textContent = "what-if: vent distal joint";
  previewButton.onclick = () => {
    const joints = hello.robot.joints;
    if (joints.length === 0) return;
    const distal = joints[joints.length - 1];
    lastPattern = { joints_pa: { [String(distal.id)]: 0 } };
    store.requestPreview(lastPattern);
  };
  const commitButton = document.createElement("button");
  commitButton.textContent = "commit preview";
  commitButton.onclick = () => {
    if (lastPattern && store.preview) store.commitPattern(lastPattern);
  };
  controls.append(previewButton, commitButton);
}

let lastPattern: PreviewPattern | null = null;

function redraw(): void {
  buildControls();
  if (!store.hello || !store.snapshot) return;
  const model = buildRenderModel(store.hello, store.snapshot, view, {
    stale: store.isStale(),
    preview: store.preview,
  });
  drawModel(ctx, model);
  const pendingNote = store.pending.length > 0 ? ` | pending: ${store.pending.length}` : "";
  statusLine.textContent =
    `${store.status} | t=${store.snapshot.t.toFixed(2)} s` +
    pendingNote +
    (store.banner ? ` | ${store.banner}` : "") +
    (store.previewError ? ` | preview failed: ${store.previewError}` : "") +
    (store.lastWarning ? ` | ${store.lastWarning}` : "");
  logPane.textContent = store.eventLog
    .slice(-12)
    .map((e) => `t=${e.t.toFixed(2)}  ${e.kind}: ${e.detail}`)
    .join("\n");
}

store.subscribe(redraw);
window.setInterval(redraw, 500); // refresh staleness badge even without traffic
