"""Scenario files: timed action scripts replayed against the simulator.

A scenario is a JSON object (versioned with ``format_version``) naming a
robot from the registry, an initial state, a time-ordered action list, and
optional outcome assertions. Replay is deterministic: identical files produce
byte-identical CSV output. See docs/scenario-format.md for the schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import constants
from .config import RobotConfiguration, get_robot, robot_names
from .errors import (
    ScenarioParseError,
    ScenarioValidationError,
    VinesimError,
)
from .growth import (
    GrowthEvent,
    GrowthPhase,
    GrowthState,
    phase_transition_events,
    step_growth,
    step_retraction,
)
from .mechanics import PressureState, TendonState
from .solver import assemble_chain, solve_equilibrium

FORMAT_VERSION = 1
_VERBS = (
    "set_trunk_pressure",
    "set_joint_pressure",
    "set_tendon_tension",
    "pull_tail",
    "attach_payload",
)
_ASSERT_OPS = ("eq", "ne", "lt", "le", "gt", "ge", "between", "approx", "event_order")
_TENDON_IDS = (1, 2, 3, 4)


@dataclass(frozen=True)
class Action:
    t: float
    verb: str
    value: float
    target: int | None = None

    @property
    def label(self) -> str:
        target = "-" if self.target is None else str(self.target)
        return f"action:{self.verb} {target} {self.value:g}"


@dataclass(frozen=True)
class OutcomeAssertion:
    op: str
    field_name: str | None = None
    t: float | str = "final"
    value: Any = None
    events: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.op == "event_order":
            return f"event order {list(self.events)}"
        return f"{self.field_name} {self.op} {self.value} at t={self.t}"


@dataclass(frozen=True)
class Scenario:
    name: str
    robot: str
    dt: float
    duration: float
    actions: tuple[Action, ...]
    assertions: tuple[OutcomeAssertion, ...]
    initial_deployed: float | str = 0.0
    initial_trunk_pressure: float = 0.0
    initial_joint_pressures: Mapping[int, float] = field(default_factory=dict)
    initial_payload: float = 0.0
    supported: bool = False  # environment carries the body: gravity off in solves


@dataclass(frozen=True)
class AssertionOutcome:
    description: str
    passed: bool
    detail: str


@dataclass
class RunRecord:
    scenario: Scenario
    columns: list[str]
    rows: list[dict]
    events: list[GrowthEvent]
    assertion_outcomes: list[AssertionOutcome]
    fault: str | None = None

    @property
    def passed(self) -> bool:
        return self.fault is None and all(a.passed for a in self.assertion_outcomes)

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_format_cell(row[c], c) for c in self.columns))
        return "\n".join(lines) + "\n"

    def events_jsonl(self) -> str:
        lines = []
        for e in self.events:
            lines.append(
                json.dumps(
                    {
                        "t": round(e.t, 9),
                        "kind": e.kind,
                        "detail": e.detail,
                        "length_m": round(e.length, 9),
                        "p_t_pa": round(e.trunk_pressure, 6),
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")


_COLUMN_FORMATS = {
    "t_s": "{:.3f}",
    "deployed_length_m": "{:.6f}",
    "p_t_Pa": "{:.1f}",
    "tip_x_m": "{:.6f}",
    "tip_y_m": "{:.6f}",
    "tip_deflection_m": "{:.6f}",
    "localization_index": "{:.6f}",
}


def _format_cell(value, column: str) -> str:
    if isinstance(value, str):
        return value
    if column.startswith("p_j_"):
        return f"{value:.1f}"
    if column.startswith("T_"):
        return f"{value:.3f}"
    return _COLUMN_FORMATS.get(column, "{:g}").format(value)


# --------------------------------------------------------------------------
# Parsing and validation
# --------------------------------------------------------------------------


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return parse_scenario(raw, default_name=Path(path).stem)


def parse_scenario(raw: Mapping, default_name: str = "scenario") -> Scenario:
    if not isinstance(raw, Mapping):
        raise ScenarioValidationError("scenario root must be an object")
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise ScenarioValidationError(
            f"unsupported format_version {version!r}; this build reads {FORMAT_VERSION}"
        )
    robot = raw.get("robot")
    if robot not in robot_names():
        raise ScenarioValidationError(
            f"unknown robot {robot!r}; known: {', '.join(robot_names())}"
        )
    config = get_robot(robot)
    joint_ids = set(config.joint_ids)

    dt = float(raw.get("dt", 0.05))
    if dt <= 0:
        raise ScenarioValidationError("dt must be positive")
    duration = float(raw.get("duration", 0.0))
    if duration < 0:
        raise ScenarioValidationError("duration cannot be negative")

    actions = []
    previous_t = -math.inf
    for index, entry in enumerate(raw.get("actions", [])):
        t = float(entry.get("t", 0.0))
        if t < previous_t:
            raise ScenarioValidationError(f"actions must be time-ordered (action {index})")
        previous_t = t
        verb = entry.get("verb")
        if verb not in _VERBS:
            raise ScenarioValidationError(f"unknown verb {verb!r} (action {index})")
        target = entry.get("target")
        if verb == "set_joint_pressure":
            if target is None or int(target) not in joint_ids:
                raise ScenarioValidationError(
                    f"action {index}: joint {target!r} not in configuration {sorted(joint_ids)}"
                )
            target = int(target)
        elif verb == "set_tendon_tension":
            if target is None or int(target) not in _TENDON_IDS:
                raise ScenarioValidationError(
                    f"action {index}: tendon {target!r} not in {_TENDON_IDS}"
                )
            target = int(target)
        else:
            target = None
        value = float(entry.get("value", 0.0))
        if value < 0:
            raise ScenarioValidationError(f"action {index}: value must be non-negative")
        actions.append(Action(t=t, verb=verb, value=value, target=target))

    assertions = []
    for index, entry in enumerate(raw.get("assertions", [])):
        op = entry.get("op", "eq")
        if op not in _ASSERT_OPS:
            raise ScenarioValidationError(f"assertion {index}: unknown op {op!r}")
        if op == "event_order":
            events = tuple(str(e) for e in entry.get("events", ()))
            if not events:
                raise ScenarioValidationError(f"assertion {index}: event_order needs events")
            assertions.append(OutcomeAssertion(op=op, events=events))
            continue
        field_name = entry.get("field")
        if not field_name:
            raise ScenarioValidationError(f"assertion {index}: missing field")
        t = entry.get("t", "final")
        if t != "final":
            t = float(t)
        assertions.append(
            OutcomeAssertion(op=op, field_name=str(field_name), t=t, value=entry.get("value"))
        )

    initial = raw.get("initial", {})
    deployed = initial.get("deployed_length", 0.0)
    if deployed != "full":
        deployed = float(deployed)
        if deployed < 0 or deployed > config.total_length + 1e-9:
            raise ScenarioValidationError("initial deployed length outside [0, total length]")
    joint_pressures = {}
    for key, value in initial.get("joint_pressures", {}).items():
        jid = int(key)
        if jid not in joint_ids:
            raise ScenarioValidationError(f"initial joint pressure for unknown joint {jid}")
        joint_pressures[jid] = float(value)

    return Scenario(
        name=str(raw.get("name", default_name)),
        robot=robot,
        dt=dt,
        duration=duration,
        actions=tuple(actions),
        assertions=tuple(assertions),
        initial_deployed=deployed,
        initial_trunk_pressure=float(initial.get("trunk_pressure", 0.0)),
        initial_joint_pressures=joint_pressures,
        initial_payload=float(initial.get("payload_mass", 0.0)),
        supported=bool(raw.get("supported", False)),
    )


# --------------------------------------------------------------------------
# Replay
# --------------------------------------------------------------------------


class _Simulation:
    """Mutable replay state for one scenario run."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.config: RobotConfiguration = get_robot(scenario.robot)
        joints = {jid: 0.0 for jid in self.config.joint_ids}
        joints.update(scenario.initial_joint_pressures)
        self.pressures = PressureState(scenario.initial_trunk_pressure, joints)
        self.tensions = {tid: 0.0 for tid in _TENDON_IDS}
        self.payload = scenario.initial_payload
        self.pull_tension: float | None = None
        deployed = (
            self.config.total_length
            if scenario.initial_deployed == "full"
            else float(scenario.initial_deployed)
        )
        phase = GrowthPhase.STEADY_GROWTH if deployed > 0 else GrowthPhase.IDLE
        self.state = GrowthState(deployed_length=deployed, phase=phase)
        self.gravity = 0.0 if scenario.supported else constants.GRAVITY
        self._warm: dict = {}

    def apply(self, action: Action, events: list[GrowthEvent]):
        if action.verb == "set_trunk_pressure":
            self.pressures = self.pressures.with_trunk(action.value)
        elif action.verb == "set_joint_pressure":
            self.pressures = self.pressures.with_joint(action.target, action.value)
        elif action.verb == "set_tendon_tension":
            self.tensions[action.target] = action.value
        elif action.verb == "pull_tail":
            self.pull_tension = action.value
        elif action.verb == "attach_payload":
            self.payload = action.value
        events.append(
            GrowthEvent(
                t=self.state.elapsed,
                kind="action",
                detail=action.label.split(":", 1)[1],
                length=self.state.deployed_length,
                trunk_pressure=self.pressures.trunk_pressure,
            )
        )

    def step(self, dt: float, events: list[GrowthEvent]):
        previous = self.state
        if self.pull_tension is not None:
            self.state = step_retraction(
                previous,
                self.config,
                self.pull_tension,
                self.pressures.trunk_pressure,
                dt,
                self.pressures.joint_pressures,
            )
        else:
            self.state = step_growth(
                previous, self.config, self.pressures.trunk_pressure, dt
            )
        events.extend(
            phase_transition_events(previous, self.state, self.pressures.trunk_pressure)
        )

    def observe(self, t: float) -> dict:
        row: dict = {
            "t_s": t,
            "deployed_length_m": self.state.deployed_length,
            "phase": self.state.phase.value,
            "p_t_Pa": self.pressures.trunk_pressure,
        }
        for jid in self.config.joint_ids:
            row[f"p_j_{jid}_Pa"] = self.pressures.joint(jid)
        for tid in _TENDON_IDS:
            row[f"T_{tid}_N"] = self.tensions[tid]

        chain = assemble_chain(self.config, self.pressures, self.state.deployed_length)
        if chain.n == 0:
            row.update(
                tip_x_m=0.0,
                tip_y_m=self.config.base_height,
                tip_deflection_m=0.0,
                localization_index=0.0,
            )
            return row

        tendons = TendonState(dict(self.tensions), self.config.tendon_radial_offset)
        loaded = solve_equilibrium(
            chain,
            tendons=tendons,
            gravity=self.gravity,
            payload_mass=self.payload,
            warm_start=self._warm_for("loaded", chain.n),
        )
        self._warm[("loaded", chain.n)] = loaded.kappa
        deflection = 0.0
        if self.payload > 0 or any(v > 0 for v in self.tensions.values()):
            reference = solve_equilibrium(
                chain,
                gravity=self.gravity,
                warm_start=self._warm_for("reference", chain.n),
            )
            self._warm[("reference", chain.n)] = reference.kappa
            deflection = reference.tip_position[1] - loaded.tip_position[1]
        row.update(
            tip_x_m=loaded.tip_position[0],
            tip_y_m=loaded.tip_position[1],
            tip_deflection_m=deflection,
            localization_index=loaded.localization_index,
        )
        return row

    def _warm_for(self, tag: str, n: int):
        return self._warm.get((tag, n))


def run_scenario(path_or_scenario: str | Path | Scenario) -> RunRecord:
    """Replay a scenario deterministically and evaluate its assertions."""
    scenario = (
        path_or_scenario
        if isinstance(path_or_scenario, Scenario)
        else load_scenario(path_or_scenario)
    )
    sim = _Simulation(scenario)
    columns = (
        ["t_s", "deployed_length_m", "phase", "p_t_Pa"]
        + [f"p_j_{jid}_Pa" for jid in sim.config.joint_ids]
        + [f"T_{tid}_N" for tid in _TENDON_IDS]
        + ["tip_x_m", "tip_y_m", "tip_deflection_m", "localization_index"]
    )
    events: list[GrowthEvent] = []
    rows: list[dict] = []
    fault: str | None = None

    pending = list(scenario.actions)
    steps = round(scenario.duration / scenario.dt)

    def apply_due(now: float):
        while pending and pending[0].t <= now + 1e-9:
            sim.apply(pending.pop(0), events)

    try:
        apply_due(0.0)
        rows.append(sim.observe(0.0))
        for k in range(1, steps + 1):
            t_k = k * scenario.dt
            sim.step(scenario.dt, events)
            apply_due(t_k)
            rows.append(sim.observe(t_k))
    except VinesimError as exc:
        fault = f"{type(exc).__name__}: {exc}"
        events.append(
            GrowthEvent(
                t=sim.state.elapsed,
                kind="fault",
                detail=fault,
                length=sim.state.deployed_length,
                trunk_pressure=sim.pressures.trunk_pressure,
            )
        )

    outcomes = [_evaluate(a, rows, events, scenario.dt) for a in scenario.assertions]
    return RunRecord(
        scenario=scenario,
        columns=columns,
        rows=rows,
        events=events,
        assertion_outcomes=outcomes,
        fault=fault,
    )


def _evaluate(
    assertion: OutcomeAssertion,
    rows: Sequence[dict],
    events: Sequence[GrowthEvent],
    dt: float,
) -> AssertionOutcome:
    description = assertion.describe()
    if assertion.op == "event_order":
        labels = [e.label for e in events]
        cursor = 0
        for wanted in assertion.events:
            found = None
            for i in range(cursor, len(labels)):
                if labels[i] == wanted:
                    found = i
                    break
            if found is None:
                return AssertionOutcome(
                    description, False, f"event {wanted!r} not found in order"
                )
            cursor = found + 1
        return AssertionOutcome(description, True, "order intact")

    if not rows:
        return AssertionOutcome(description, False, "no rows recorded")
    if assertion.t == "final":
        row = rows[-1]
    else:
        index = round(float(assertion.t) / dt)
        if not 0 <= index < len(rows):
            return AssertionOutcome(
                description, False, f"time {assertion.t} outside recorded range"
            )
        row = rows[index]
    if assertion.field_name not in row:
        return AssertionOutcome(description, False, f"unknown field {assertion.field_name!r}")
    actual = row[assertion.field_name]
    expected = assertion.value
    op = assertion.op
    ok: bool
    if op == "eq":
        ok = actual == expected
    elif op == "ne":
        ok = actual != expected
    elif op == "lt":
        ok = actual < expected
    elif op == "le":
        ok = actual <= expected
    elif op == "gt":
        ok = actual > expected
    elif op == "ge":
        ok = actual >= expected
    elif op == "between":
        lo, hi = expected
        ok = lo <= actual <= hi
    elif op == "approx":
        target, tol = expected
        ok = abs(actual - target) <= tol
    else:  # pragma: no cover
        return AssertionOutcome(description, False, f"unhandled op {op}")
    return AssertionOutcome(description, ok, f"actual={actual!r}")


def write_outputs(record: RunRecord, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the step CSV and the event log; paths are derived from the name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{record.scenario.name}.csv"
    csv_path.write_text(record.csv_text())
    events_path = out / f"{record.scenario.name}.events.jsonl"
    events_path.write_text(record.events_jsonl())
    return csv_path, events_path


def plot_run(record: RunRecord, out_dir: str | Path) -> Path:
    """Render a static overview figure for a finished run (requires matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = [r["t_s"] for r in record.rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(ts, [r["deployed_length_m"] for r in record.rows], label="deployed length [m]")
    ax1.plot(ts, [r["tip_y_m"] for r in record.rows], label="tip height [m]")
    ax1.legend()
    ax1.set_ylabel("m")
    ax2.plot(ts, [r["p_t_Pa"] for r in record.rows], label="trunk [Pa]")
    for column in record.columns:
        if column.startswith("p_j_"):
            ax2.plot(ts, [r[column] for r in record.rows], label=column)
    ax2.legend()
    ax2.set_xlabel("t [s]")
    ax2.set_ylabel("Pa")
    fig.suptitle(record.scenario.name)
    path = out / f"{record.scenario.name}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
