// Side-view rendering. `buildRenderModel` is a pure function of
// (hello, snapshot, view, staleness): identical inputs produce an identical
// model, and the canvas pass below just replays it. Tests compare model
// vertices against snapshot shapes directly.

import { HelloMessage, PreviewMessage, SnapshotMessage } from "./protocol";

export interface ViewTransform {
  scale: number; // px per meter
  originX: number; // px of world x = 0
  originY: number; // px of world y = 0 (ground line)
}

export interface JointMarker {
  id: number;
  x: number;
  y: number;
  stiffened: boolean;
  pressurePa: number;
  deployed: boolean;
}

export interface RenderModel {
  polyline: Array<[number, number]>;
  overlay: Array<[number, number]> | null;
  groundY: number;
  base: [number, number];
  jointMarkers: JointMarker[];
  badges: string[];
  tip: [number, number] | null;
  phase: string;
  deployedLength: number;
  localizationIndex: number;
}

export function worldToScreen(view: ViewTransform, x: number, y: number): [number, number] {
  return [view.originX + x * view.scale, view.originY - y * view.scale];
}

function shapeToScreen(
  view: ViewTransform,
  shape: { x: number[]; y: number[] } | null,
): Array<[number, number]> {
  if (!shape) return [];
  return shape.x.map((x, i) => worldToScreen(view, x, shape.y[i]));
}

/** Screen position of the backbone point at arc length s (linear in s). */
function pointAtArc(
  shape: { s: number[]; x: number[]; y: number[] },
  target: number,
): [number, number] {
  const s = shape.s;
  if (target <= s[0]) return [shape.x[0], shape.y[0]];
  for (let i = 1; i < s.length; i += 1) {
    if (target <= s[i]) {
      const f = (target - s[i - 1]) / (s[i] - s[i - 1]);
      return [
        shape.x[i - 1] + f * (shape.x[i] - shape.x[i - 1]),
        shape.y[i - 1] + f * (shape.y[i] - shape.y[i - 1]),
      ];
    }
  }
  const last = s.length - 1;
  return [shape.x[last], shape.y[last]];
}

export function buildRenderModel(
  hello: HelloMessage,
  snapshot: SnapshotMessage,
  view: ViewTransform,
  options: { stale?: boolean; preview?: PreviewMessage | null } = {},
): RenderModel {
  const polyline = shapeToScreen(view, snapshot.shape);
  const base = worldToScreen(view, 0, hello.robot.base_height_m);
  if (polyline.length === 0) polyline.push(base);

  const markers: JointMarker[] = hello.robot.joints.map((joint) => {
    const pressure = snapshot.pressures.joints_pa[String(joint.id)] ?? 0;
    const deployed =
      snapshot.shape !== null && snapshot.deployed_length_m >= joint.start_m;
    const mid = 0.5 * (joint.start_m + joint.end_m);
    let world: [number, number] = [mid, hello.robot.base_height_m];
    if (snapshot.shape) {
      world = pointAtArc(snapshot.shape, Math.min(mid, snapshot.deployed_length_m));
    }
    const [x, y] = worldToScreen(view, world[0], world[1]);
    return {
      id: joint.id,
      x,
      y,
      stiffened: pressure > snapshot.pressures.trunk_pa,
      pressurePa: pressure,
      deployed,
    };
  });

  const badges: string[] = [];
  if (snapshot.flags.stalled) badges.push("STALLED");
  if (snapshot.flags.insufficient_tension) badges.push("INSUFFICIENT TENSION");
  if (snapshot.flags.buckling) badges.push("BUCKLING");
  if (snapshot.flags.fault) badges.push(`FAULT: ${snapshot.flags.fault}`);
  if (options.stale) badges.push("STALE");

  return {
    polyline,
    overlay: options.preview ? shapeToScreen(view, options.preview.shape) : null,
    groundY: view.originY,
    base,
    jointMarkers: markers,
    badges,
    tip: snapshot.shape ? worldToScreen(view, snapshot.tip.x, snapshot.tip.y) : null,
    phase: snapshot.phase,
    deployedLength: snapshot.deployed_length_m,
    localizationIndex: snapshot.localization_index,
  };
}

export function drawModel(ctx: CanvasRenderingContext2D, model: RenderModel): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);

  ctx.strokeStyle = "#666";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, model.groundY);
  ctx.lineTo(width, model.groundY);
  ctx.stroke();

  // base station
  ctx.fillStyle = "#444";
  ctx.fillRect(model.base[0] - 6, model.base[1], 6, model.groundY - model.base[1]);

  if (model.overlay && model.overlay.length > 1) {
    ctx.strokeStyle = "#999";
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 2;
    ctx.beginPath();
    model.overlay.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (model.polyline.length > 1) {
    ctx.strokeStyle = "#2a7ae2";
    ctx.lineWidth = 4;
    ctx.lineCap = "round";
    ctx.beginPath();
    model.polyline.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }

  for (const marker of model.jointMarkers) {
    if (!marker.deployed) continue;
    ctx.beginPath();
    ctx.arc(marker.x, marker.y, 7, 0, 2 * Math.PI);
    ctx.fillStyle = marker.stiffened ? "#e2572a" : "#bbb";
    ctx.fill();
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  if (model.tip) {
    ctx.beginPath();
    ctx.arc(model.tip[0], model.tip[1], 4, 0, 2 * Math.PI);
    ctx.fillStyle = "#111";
    ctx.fill();
  }

  ctx.font = "14px sans-serif";
  ctx.fillStyle = "#b00";
  model.badges.forEach((badge, i) => ctx.fillText(badge, 12, 22 + 18 * i));

  ctx.fillStyle = "#333";
  ctx.fillText(
    `phase ${model.phase}  length ${model.deployedLength.toFixed(3)} m  ` +
      `localization ${model.localizationIndex.toFixed(2)}`,
    12,
    height - 10,
  );
}
