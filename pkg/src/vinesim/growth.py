"""Discrete-time eversion growth and cascading retraction state machines.

Growth: the tip everts once trunk pressure clears the initiation threshold and
advances at the feed rate while pressure stays at or above the steady-growth
threshold. When the eversion front lies inside a joint's axial span, the joint
structure must invert along with the trunk wall, which demands a higher
crossing pressure; below it the front stalls with the length frozen.

Retraction: the tail is pulled back through the body, inverting the wall at
the eversion front. The pull must beat the pressure force on the front's
cross-section plus a lumped structural resistance. Pressurized joints act as
stiff boundaries and must never reach the front; plans release them
distal-to-proximal once the material beyond them has been recovered.

States are immutable; step functions are pure, so identical input sequences
produce identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Optional

from . import constants
from .errors import (
    BoundaryViolationError,
    DomainError,
    EmptyPlanError,
    OverpressureFault,
)

if TYPE_CHECKING:  # pragma: no cover
    from .config import RobotConfiguration

# A pressurized joint must keep at least this clearance from the inversion front.
BOUNDARY_EPSILON = 0.001  # m
_PRESSURE_EPS = 1.0  # Pa, below this a joint counts as vented
_LENGTH_EPS = 1e-9  # m


class GrowthPhase(str, Enum):
    IDLE = "Idle"
    INITIATING = "Initiating"
    STEADY_GROWTH = "SteadyGrowth"
    JOINT_CROSSING = "JointCrossing"
    STALLED = "Stalled"
    RETRACT_PULLING = "RetractPulling"
    RETRACT_BOUNDARY_HOLD = "RetractBoundaryHold"
    FULLY_RETRACTED = "FullyRetracted"


_RETRACTION_PHASES = frozenset(
    {GrowthPhase.RETRACT_PULLING, GrowthPhase.RETRACT_BOUNDARY_HOLD, GrowthPhase.FULLY_RETRACTED}
)


@dataclass(frozen=True)
class CalibrationTable:
    """Growth pressure thresholds and feed speeds for one construction (Pa, m/s)."""

    p_init: float
    p_grow: float
    p_crossing: float
    burst: float
    growth_speed: float
    retraction_speed: float

    def __post_init__(self):
        if not self.p_init < self.p_grow <= self.p_crossing < self.burst:
            raise DomainError("pressure thresholds must satisfy init < grow <= crossing < burst")
        if self.growth_speed <= 0 or self.retraction_speed <= 0:
            raise DomainError("feed speeds must be positive")


@dataclass(frozen=True)
class GrowthState:
    deployed_length: float = 0.0
    phase: GrowthPhase = GrowthPhase.IDLE
    active_joint_index: Optional[int] = None
    elapsed: float = 0.0
    insufficient_tension: bool = False

    def __post_init__(self):
        if self.deployed_length < 0:
            raise DomainError("deployed length cannot be negative")

    @classmethod
    def idle(cls) -> "GrowthState":
        return cls()

    @classmethod
    def fully_deployed(cls, config: "RobotConfiguration") -> "GrowthState":
        return cls(deployed_length=config.total_length, phase=GrowthPhase.STEADY_GROWTH)


@dataclass(frozen=True)
class GrowthEvent:
    """One phase transition, stamped with time, length and trunk pressure."""

    t: float
    kind: str
    detail: str
    length: float
    trunk_pressure: float

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.detail}"


def phase_transition_events(
    previous: GrowthState, current: GrowthState, p_t: float
) -> tuple[GrowthEvent, ...]:
    """Events produced by one step; empty when the phase did not change."""
    if previous.phase == current.phase:
        return ()
    detail = f"{previous.phase.value}->{current.phase.value}"
    if current.active_joint_index is not None and current.phase in (
        GrowthPhase.JOINT_CROSSING,
        GrowthPhase.STALLED,
        GrowthPhase.RETRACT_BOUNDARY_HOLD,
    ):
        detail += f"@{current.active_joint_index}"
    return (
        GrowthEvent(
            t=current.elapsed,
            kind="phase",
            detail=detail,
            length=current.deployed_length,
            trunk_pressure=p_t,
        ),
    )


def _span_containing(config: "RobotConfiguration", position: float):
    for info in config.joints():
        if info.start <= position < info.end:
            return info
    return None


def _next_span_ahead(config: "RobotConfiguration", position: float, limit: float):
    best = None
    for info in config.joints():
        if position < info.start <= limit and (best is None or info.start < best.start):
            best = info
    return best


def step_growth(
    state: GrowthState, config: "RobotConfiguration", p_t: float, dt: float
) -> GrowthState:
    """Advance the eversion machine by one time step at trunk pressure p_t."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    if p_t < 0:
        raise DomainError("trunk pressure must be non-negative")
    if state.phase in _RETRACTION_PHASES:
        raise DomainError("cannot step growth while the machine is retracting")
    table = config.calibration_table
    if p_t >= table.burst:
        raise OverpressureFault(
            f"trunk pressure {p_t:.0f} Pa at or above burst threshold {table.burst:.0f} Pa"
        )

    elapsed = state.elapsed + dt
    length = state.deployed_length
    total = config.total_length

    if p_t < table.p_init:
        return replace(state, phase=GrowthPhase.IDLE, active_joint_index=None, elapsed=elapsed)
    if p_t < table.p_grow:
        return replace(
            state, phase=GrowthPhase.INITIATING, active_joint_index=None, elapsed=elapsed
        )

    if length >= total - _LENGTH_EPS:
        return replace(
            state,
            deployed_length=total,
            phase=GrowthPhase.STEADY_GROWTH,
            active_joint_index=None,
            elapsed=elapsed,
        )

    span = _span_containing(config, length)
    if span is not None and p_t < table.p_crossing:
        return replace(
            state,
            phase=GrowthPhase.STALLED,
            active_joint_index=span.joint_id,
            elapsed=elapsed,
        )

    advanced = length + table.growth_speed * dt
    if span is None:
        ahead = _next_span_ahead(config, length, advanced)
        if ahead is not None and p_t < table.p_crossing:
            # Stop exactly at the joint entrance; crossing pressure is required
            # before the front may enter the span.
            return replace(
                state,
                deployed_length=ahead.start,
                phase=GrowthPhase.STALLED,
                active_joint_index=ahead.joint_id,
                elapsed=elapsed,
            )

    new_length = min(advanced, total)
    inside = _span_containing(config, new_length)
    if inside is not None:
        phase, active = GrowthPhase.JOINT_CROSSING, inside.joint_id
    else:
        phase, active = GrowthPhase.STEADY_GROWTH, None
    return replace(
        state,
        deployed_length=new_length,
        phase=phase,
        active_joint_index=active,
        elapsed=elapsed,
    )


# --------------------------------------------------------------------------
# Retraction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RetractionStage:
    """Hold the listed joints pressurized, pull to `pull_to`, then release one."""

    hold_joints: tuple[int, ...]
    pull_to: float
    release_joint: Optional[int]


@dataclass(frozen=True)
class RetractionPlan:
    stages: tuple[RetractionStage, ...]
    trunk_pressure: float = constants.RETRACTION_TRUNK_PRESSURE
    joint_pressure: float = constants.OPERATING_JOINT_PRESSURE
    pull_speed: float = 0.02

    def __post_init__(self):
        targets = [s.pull_to for s in self.stages]
        for a, b in zip(targets, targets[1:]):
            if b > a:
                raise DomainError("stage targets must be non-increasing toward the base")
        if self.stages and self.stages[-1].pull_to != 0.0:
            raise DomainError("final stage must pull all the way to the base")


def plan_cascading_retraction(
    config: "RobotConfiguration", deployed_length: float | None = None
) -> RetractionPlan:
    """Stage-wise retraction: stiffen upstream joints, pull, release distal-first."""
    front = config.total_length if deployed_length is None else deployed_length
    if front <= _LENGTH_EPS:
        raise EmptyPlanError("nothing is deployed; no retraction plan exists")
    boundaries = [info for info in config.joints() if info.end <= front - BOUNDARY_EPSILON]
    boundaries.sort(key=lambda info: info.end, reverse=True)
    stages = []
    remaining = [info.joint_id for info in boundaries]
    for info in boundaries:
        stages.append(
            RetractionStage(
                hold_joints=tuple(remaining),
                pull_to=info.end + BOUNDARY_EPSILON,
                release_joint=info.joint_id,
            )
        )
        remaining = remaining[1:]
    stages.append(RetractionStage(hold_joints=(), pull_to=0.0, release_joint=None))
    table = config.calibration_table
    return RetractionPlan(stages=tuple(stages), pull_speed=table.retraction_speed)


def eversion_front_area(trunk_diameter: float) -> float:
    """Effective cross-section at the eversion front: the full circular area."""
    return math.pi * (trunk_diameter / 2.0) ** 2


def required_retraction_tension(config: "RobotConfiguration", p_t: float) -> float:
    """Minimum tail tension: pressure force on the front plus lumped resistance."""
    return p_t * eversion_front_area(config.trunk_diameter) + config.resisting_force


def step_retraction(
    state: GrowthState,
    config: "RobotConfiguration",
    tail_tension: float,
    p_t: float,
    dt: float,
    joint_pressures: Mapping[int, float] | None = None,
) -> GrowthState:
    """Pull the tail for one time step; honours tension and boundary conditions.

    `joint_pressures` tells the machine which joints are currently stiff
    boundaries; a pressurized joint halts the front one clearance before its
    distal edge, and a pressurized joint found beyond the front is a fault.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if tail_tension < 0:
        raise DomainError("tail tension must be non-negative")
    pressures = dict(joint_pressures or {})
    elapsed = state.elapsed + dt
    front = state.deployed_length

    if front <= _LENGTH_EPS:
        return replace(
            state,
            deployed_length=0.0,
            phase=GrowthPhase.FULLY_RETRACTED,
            active_joint_index=None,
            elapsed=elapsed,
            insufficient_tension=False,
        )

    pressurized = [
        info
        for info in config.joints()
        if pressures.get(info.joint_id, 0.0) > _PRESSURE_EPS
    ]
    for info in pressurized:
        if front < info.end + BOUNDARY_EPSILON - 1e-12:
            raise BoundaryViolationError(
                f"pressurized joint {info.joint_id} is within {BOUNDARY_EPSILON * 1e3:.0f} mm "
                f"of the inversion front"
            )

    required = required_retraction_tension(config, p_t)
    if tail_tension < required:
        return replace(
            state,
            phase=GrowthPhase.RETRACT_PULLING,
            active_joint_index=None,
            elapsed=elapsed,
            insufficient_tension=True,
        )

    table = config.calibration_table
    target = front - table.retraction_speed * dt
    hold_at = None
    hold_joint = None
    for info in pressurized:
        limit = info.end + BOUNDARY_EPSILON
        if target < limit <= front and (hold_at is None or limit > hold_at):
            hold_at = limit
            hold_joint = info.joint_id
    if hold_at is not None:
        return replace(
            state,
            deployed_length=hold_at,
            phase=GrowthPhase.RETRACT_BOUNDARY_HOLD,
            active_joint_index=hold_joint,
            elapsed=elapsed,
            insufficient_tension=False,
        )

    new_front = max(target, 0.0)
    if new_front <= _LENGTH_EPS:
        return replace(
            state,
            deployed_length=0.0,
            phase=GrowthPhase.FULLY_RETRACTED,
            active_joint_index=None,
            elapsed=elapsed,
            insufficient_tension=False,
        )
    return replace(
        state,
        deployed_length=new_front,
        phase=GrowthPhase.RETRACT_PULLING,
        active_joint_index=None,
        elapsed=elapsed,
        insufficient_tension=False,
    )


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    margin: float
    threshold: float


def free_space_retraction_stability(
    config: "RobotConfiguration",
    unsupported_length: float | None = None,
    threshold: float = 0.6,
) -> StabilityResult:
    """Gate for retraction without environmental support.

    A single mid-span joint keeps free-space retraction controllable only up
    to the threshold length; the margin is the overhang past it (negative
    while stable, zero exactly at the limit).
    """
    if not config.joints():
        raise DomainError("free-space stability gate needs at least one joint")
    length = config.total_length if unsupported_length is None else unsupported_length
    if length < 0:
        raise DomainError("unsupported length cannot be negative")
    margin = length - threshold
    return StabilityResult(stable=margin <= 0.0, margin=margin, threshold=threshold)
