import { describe, expect, it } from "vitest";

import { HelloMessage, SnapshotMessage } from "../src/protocol";
import { buildRenderModel, ViewTransform, worldToScreen } from "../src/render";

const hello: HelloMessage = {
  type: "hello",
  format_version: 1,
  t: 0,
  robot: {
    name: "shape_demo",
    construction: "reinforced",
    total_length_m: 1.34,
    base_height_m: 0.115,
    trunk_diameter_m: 0.085,
    joints: [
      { id: 1, start_m: 0.3, end_m: 0.37 },
      { id: 2, start_m: 0.87, end_m: 0.94 },
    ],
  },
  limits: {
    operating_pa: 15000,
    burst_standalone_pa: 21400,
    burst_confined_pa: 23000,
    p_init_pa: 2600,
    p_grow_pa: 6800,
    p_crossing_pa: 12000,
  },
  dt_s: 0.05,
};

function straightSnapshot(length: number): SnapshotMessage {
  const n = 11;
  const xs = Array.from({ length: n }, (_, i) => (length * i) / (n - 1));
  return {
    type: "snapshot",
    t: 1.0,
    phase: "SteadyGrowth",
    deployed_length_m: length,
    active_joint: null,
    pressures: { trunk_pa: 12000, joints_pa: { "1": 15000, "2": 0 } },
    tensions_n: { "1": 0, "2": 0, "3": 0, "4": 0 },
    payload_kg: 0,
    pull_tension_n: null,
    flags: { insufficient_tension: false, stalled: false, buckling: false, fault: null },
    shape: {
      s: xs,
      x: xs,
      y: xs.map(() => 0.115),
      heading: xs.map(() => 0),
      kappa: xs.slice(1).map(() => 0),
      element: xs.slice(1).map(() => 0),
    },
    tip: { x: length, y: 0.115, deflection_m: 0 },
    localization_index: 0,
    events: [],
  };
}

const view: ViewTransform = { scale: 400, originX: 50, originY: 500 };

describe("buildRenderModel", () => {
  it("renders a straight unloaded robot as a horizontal line of scaled length", () => {
    const model = buildRenderModel(hello, straightSnapshot(1.34), view);
    const ys = new Set(model.polyline.map(([, y]) => y));
    expect(ys.size).toBe(1);
    const first = model.polyline[0];
    const last = model.polyline[model.polyline.length - 1];
    expect(last[0] - first[0]).toBeCloseTo(1.34 * view.scale, 9);
    expect([...ys][0]).toBeCloseTo(view.originY - 0.115 * view.scale, 9);
  });

  it("is a pure function of its inputs", () => {
    const snapshot = straightSnapshot(1.0);
    const a = buildRenderModel(hello, snapshot, view, { stale: false });
    const b = buildRenderModel(hello, snapshot, view, { stale: false });
    expect(JSON.stringify(a)).toEqual(JSON.stringify(b));
  });

  it("highlights pressurized joints and leaves vented ones plain", () => {
    const model = buildRenderModel(hello, straightSnapshot(1.34), view);
    const byId = Object.fromEntries(model.jointMarkers.map((m) => [m.id, m]));
    expect(byId[1].stiffened).toBe(true); // 15 kPa > 12 kPa trunk
    expect(byId[2].stiffened).toBe(false);
    expect(byId[1].deployed).toBe(true);
  });

  it("marks stalled and stale states with badges", () => {
    const snapshot = straightSnapshot(0.465);
    snapshot.phase = "Stalled";
    snapshot.flags.stalled = true;
    const model = buildRenderModel(hello, snapshot, view, { stale: true });
    expect(model.badges).toContain("STALLED");
    expect(model.badges).toContain("STALE");
  });

  it("projects the preview overlay with the same transform as the live shape", () => {
    const snapshot = straightSnapshot(1.0);
    const preview = {
      type: "preview" as const,
      t: 1.0,
      shape: snapshot.shape,
      tip: snapshot.tip,
      localization_index: 0,
      buckling: false,
    };
    const model = buildRenderModel(hello, snapshot, view, { preview });
    expect(model.overlay).toEqual(model.polyline);
  });
});

describe("worldToScreen", () => {
  it("maps the base height above the ground line", () => {
    const [, y] = worldToScreen(view, 0, 0.115);
    expect(view.originY - y).toBeCloseTo(0.115 * view.scale, 9);
  });
});
