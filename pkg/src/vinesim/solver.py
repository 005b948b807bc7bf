"""Planar quasi-static shape solver for the element chain.

Each element is a constant-curvature arc. The solver iterates a moment
balance: with the current poses, every element midpoint sees the tendon
moment plus the gravitational moment of all mass distal of it (wall film,
point loads, tip payload); the beam-like response kappa = M / EI updates the
curvatures (damped for stability) and the poses are re-integrated from the
clamped base. Arc kinematics keeps 45-90 degree bends representable; a
buckling flag marks any element rotated past pi/2 where the model leaves its
validity range.

Trunk segments are subdivided internally so the gravity moment profile is
resolved; joints stay single arcs. Solves hold no shared mutable state and
are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import constants
from .config import RobotConfiguration
from .errors import (
    DomainError,
    MissingJointPressureError,
    NonConvergenceError,
    UnreachableAngleError,
)
from .mechanics import PressureState, RPJModule, TendonState, effective_bending_stiffness

MAX_SUB_LENGTH = 0.025  # m, trunk discretization
TIP_TOLERANCE = 1e-5  # m, fixed-point stop on tip movement
KAPPA_TOLERANCE = 1e-10  # relative curvature residual, tightens the stop
MAX_ITERATIONS = 500
DAMPING = 0.5
BUCKLING_LIMIT = math.pi / 2  # rad of rotation per configuration element


@dataclass(frozen=True)
class PointLoad:
    """A point mass riding on the backbone at arc position s (m, kg)."""

    s: float
    mass: float


@dataclass
class ElementChain:
    """Discretized chain with per-sub-element stiffness and mass."""

    sub_lengths: np.ndarray
    sub_ei: np.ndarray
    sub_mass: np.ndarray
    sub_element: np.ndarray  # index into config.elements (or -1 for raw chains)
    element_count: int
    base_height: float = constants.BASE_HEIGHT
    base_heading: float = 0.0
    tendon_radial_offset: float = constants.TRUNK_RADIUS
    config: RobotConfiguration | None = None
    pressures: PressureState | None = None
    deployed_length: float = 0.0

    def __post_init__(self):
        if np.any(self.sub_lengths < 0):
            raise DomainError("sub-element lengths cannot be negative")
        if np.any(self.sub_ei <= 0):
            raise DomainError("sub-element stiffness must be positive")
        self.deployed_length = float(np.sum(self.sub_lengths))

    @property
    def n(self) -> int:
        return len(self.sub_lengths)

    @property
    def s_bounds(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.sub_lengths)))


def assemble_chain(
    config: RobotConfiguration,
    pressures: PressureState,
    deployed_length: float | None = None,
    max_sub_length: float = MAX_SUB_LENGTH,
    base_heading: float = 0.0,
) -> ElementChain:
    """Per-element stiffness assignment for the deployed part of the robot.

    Joint elements get the pressure-dependent joint stiffness; trunk elements
    get the calibrated trunk stiffness at the current trunk pressure. Every
    joint in the configuration must have a pressure entry.
    """
    for info in config.joints():
        if info.joint_id not in pressures.joint_pressures:
            raise MissingJointPressureError(f"no pressure entry for joint {info.joint_id}")

    total = config.total_length
    deployed = total if deployed_length is None else min(deployed_length, total)
    if deployed < 0:
        raise DomainError("deployed length cannot be negative")

    p_t = pressures.trunk_pressure
    density = config.film_linear_density()
    lengths: list[float] = []
    eis: list[float] = []
    masses: list[float] = []
    owner: list[int] = []

    position = 0.0
    for index, element in enumerate(config.elements):
        if position >= deployed:
            break
        span = min(element.length, deployed - position)
        if isinstance(element, RPJModule):
            ei = effective_bending_stiffness(
                element, pressures.joint(element.joint_id), p_t
            )
            lengths.append(span)
            eis.append(ei)
            masses.append(density * span)
            owner.append(index)
        else:
            pieces = max(1, math.ceil(span / max_sub_length))
            piece = span / pieces
            ei = config.trunk_ei(p_t)
            for _ in range(pieces):
                lengths.append(piece)
                eis.append(ei)
                masses.append(density * piece)
                owner.append(index)
        position += element.length

    return ElementChain(
        sub_lengths=np.asarray(lengths, dtype=float),
        sub_ei=np.asarray(eis, dtype=float),
        sub_mass=np.asarray(masses, dtype=float),
        sub_element=np.asarray(owner, dtype=int),
        element_count=len(config.elements),
        base_height=config.base_height,
        base_heading=base_heading,
        tendon_radial_offset=config.tendon_radial_offset,
        config=config,
        pressures=pressures,
    )


def uniform_cantilever(
    length: float,
    bending_stiffness: float,
    linear_density: float | None = None,
    max_sub_length: float = MAX_SUB_LENGTH,
    base_height: float = constants.BASE_HEIGHT,
) -> ElementChain:
    """Bare uniform chain, used by calibration and as a test fixture."""
    if length <= 0 or bending_stiffness <= 0:
        raise DomainError("length and stiffness must be positive")
    if linear_density is None:
        linear_density = (
            math.pi
            * constants.TRUNK_DIAMETER
            * constants.FILM_THICKNESS
            * constants.FILM_DENSITY
            * constants.WALL_LAYERS
        )
    pieces = max(1, math.ceil(length / max_sub_length))
    piece = length / pieces
    return ElementChain(
        sub_lengths=np.full(pieces, piece),
        sub_ei=np.full(pieces, bending_stiffness),
        sub_mass=np.full(pieces, linear_density * piece),
        sub_element=np.zeros(pieces, dtype=int),
        element_count=1,
        base_height=base_height,
    )


@dataclass(frozen=True)
class EquilibriumShape:
    """Solved planar shape. Poses are sub-element boundary points, base first."""

    s: tuple[float, ...]
    kappa: tuple[float, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]
    heading: tuple[float, ...]
    sub_element: tuple[int, ...]
    element_bend: tuple[float, ...]  # signed heading change per configuration element
    element_end_pose: tuple[tuple[float, float, float], ...]
    tip_position: tuple[float, float]
    tip_heading: float
    localization_index: float  # largest element share of the total bend
    buckling: bool
    buckled_elements: tuple[int, ...]
    iterations: int
    residual: float
    tip_deflection: float = 0.0  # vertical tip drop vs the unloaded shape, when computed

    @property
    def total_bend(self) -> float:
        return sum(abs(b) for b in self.element_bend)


def _integrate(
    kappa: np.ndarray,
    lengths: np.ndarray,
    base_heading: float,
    base_height: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Arc-chain poses: boundary headings/positions and sub midpoints."""
    n = len(lengths)
    headings = base_heading + np.concatenate(([0.0], np.cumsum(kappa * lengths)))
    h0 = headings[:-1]
    h1 = headings[1:]
    straight = np.abs(kappa) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        dx = np.where(straight, lengths * np.cos(h0), (np.sin(h1) - np.sin(h0)) / kappa)
        dy = np.where(straight, lengths * np.sin(h0), (np.cos(h0) - np.cos(h1)) / kappa)
    x = np.concatenate(([0.0], np.cumsum(dx)))
    y = base_height + np.concatenate(([0.0], np.cumsum(dy)))
    hm = h0 + 0.5 * kappa * lengths
    half = 0.5 * lengths
    with np.errstate(divide="ignore", invalid="ignore"):
        mx = np.where(straight, half * np.cos(h0), (np.sin(hm) - np.sin(h0)) / kappa)
        my = np.where(straight, half * np.sin(h0), (np.cos(h0) - np.cos(hm)) / kappa)
    mid_x = x[:-1] + mx
    mid_y = y[:-1] + my
    return x, y, headings, mid_x, mid_y


def _point_on_arc(
    s_target: float,
    bounds: np.ndarray,
    kappa: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    headings: np.ndarray,
) -> tuple[float, float]:
    """Position of the backbone point at arc length s_target."""
    s_target = min(max(s_target, 0.0), float(bounds[-1]))
    index = int(np.searchsorted(bounds, s_target, side="right")) - 1
    index = min(max(index, 0), len(kappa) - 1)
    local = s_target - bounds[index]
    k = kappa[index]
    h0 = headings[index]
    if abs(k) < 1e-12:
        return x[index] + local * math.cos(h0), y[index] + local * math.sin(h0)
    h1 = h0 + k * local
    return (
        x[index] + (math.sin(h1) - math.sin(h0)) / k,
        y[index] + (math.cos(h0) - math.cos(h1)) / k,
    )


def solve_equilibrium(
    chain: ElementChain,
    tendons: TendonState | None = None,
    gravity: float = constants.GRAVITY,
    payload_mass: float = 0.0,
    point_loads: Sequence[PointLoad] = (),
    gravity_vec: tuple[float, float] | None = None,
    warm_start: Sequence[float] | None = None,
    max_iterations: int = MAX_ITERATIONS,
    tip_tolerance: float = TIP_TOLERANCE,
    damping: float = DAMPING,
) -> EquilibriumShape:
    """Fixed-point moment balance over the chain.

    `payload_mass` rides at the tip; additional `point_loads` sit at their own
    arc positions. `gravity` is the downward magnitude; `gravity_vec`
    overrides it with an explicit acceleration vector.
    """
    if gravity < 0:
        raise DomainError("gravity must be non-negative")
    if payload_mass < 0 or any(p.mass < 0 for p in point_loads):
        raise DomainError("masses must be non-negative")
    n = chain.n
    if n == 0:
        return _trivial_shape(chain)

    g_vec = gravity_vec if gravity_vec is not None else (0.0, -gravity)
    lengths = chain.sub_lengths
    ei = chain.sub_ei
    masses = chain.sub_mass
    bounds = chain.s_bounds
    tendon_m = tendons.planar_moment() if tendons is not None else 0.0

    points = list(point_loads)
    if payload_mass > 0:
        points.append(PointLoad(s=float(bounds[-1]), mass=payload_mass))

    kappa = np.zeros(n) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    if len(kappa) != n:
        raise DomainError("warm start length mismatch")

    tip_prev = None
    iterations = 0
    residual = math.inf
    for iterations in range(1, max_iterations + 1):
        x, y, headings, mid_x, mid_y = _integrate(
            kappa, lengths, chain.base_heading, chain.base_height
        )
        # Suffix sums over sub masses lumped at their arc midpoints; the pivot
        # of sub i is its own midpoint, so only strictly distal subs count.
        wx = masses * mid_x
        wy = masses * mid_y
        suffix_m = np.concatenate((np.cumsum(masses[::-1])[::-1], [0.0]))[1:]
        suffix_wx = np.concatenate((np.cumsum(wx[::-1])[::-1], [0.0]))[1:]
        suffix_wy = np.concatenate((np.cumsum(wy[::-1])[::-1], [0.0]))[1:]
        moment = (
            tendon_m
            + (suffix_wx - mid_x * suffix_m) * g_vec[1]
            - (suffix_wy - mid_y * suffix_m) * g_vec[0]
        )
        s_mid = bounds[:-1] + 0.5 * lengths
        for load in points:
            if load.mass <= 0:
                continue
            px, py = _point_on_arc(load.s, bounds, kappa, x, y, headings)
            distal = load.s > s_mid
            moment = moment + distal * load.mass * (
                (px - mid_x) * g_vec[1] - (py - mid_y) * g_vec[0]
            )

        kappa_target = moment / ei
        residual_kappa = float(np.max(np.abs(kappa_target - kappa)))
        kappa = kappa + damping * (kappa_target - kappa)

        tip = (float(x[-1]), float(y[-1]))
        if tip_prev is not None:
            residual = math.hypot(tip[0] - tip_prev[0], tip[1] - tip_prev[1])
            scale = max(1.0, float(np.max(np.abs(kappa))))
            if residual < tip_tolerance and residual_kappa < KAPPA_TOLERANCE * scale:
                break
        tip_prev = tip
    else:
        raise NonConvergenceError(
            f"equilibrium did not settle in {max_iterations} iterations", residual
        )

    x, y, headings, _, _ = _integrate(kappa, lengths, chain.base_heading, chain.base_height)
    return _package_shape(chain, kappa, x, y, headings, iterations, residual)


def _trivial_shape(chain: ElementChain) -> EquilibriumShape:
    return EquilibriumShape(
        s=(0.0,),
        kappa=(),
        x=(0.0,),
        y=(chain.base_height,),
        heading=(chain.base_heading,),
        sub_element=(),
        element_bend=(0.0,) * chain.element_count,
        element_end_pose=(),
        tip_position=(0.0, chain.base_height),
        tip_heading=chain.base_heading,
        localization_index=0.0,
        buckling=False,
        buckled_elements=(),
        iterations=0,
        residual=0.0,
    )


def _package_shape(
    chain: ElementChain,
    kappa: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    headings: np.ndarray,
    iterations: int,
    residual: float,
) -> EquilibriumShape:
    lengths = chain.sub_lengths
    bends = np.zeros(chain.element_count)
    end_pose: dict[int, tuple[float, float, float]] = {}
    for i in range(chain.n):
        e = int(chain.sub_element[i])
        bends[e] += kappa[i] * lengths[i]
        end_pose[e] = (float(x[i + 1]), float(y[i + 1]), float(headings[i + 1]))
    total_bend = float(np.sum(np.abs(bends)))
    share = float(np.max(np.abs(bends)) / total_bend) if total_bend >= 1e-9 else 0.0
    buckled = tuple(int(e) for e in np.nonzero(np.abs(bends) > BUCKLING_LIMIT)[0])
    return EquilibriumShape(
        s=tuple(float(v) for v in chain.s_bounds),
        kappa=tuple(float(v) for v in kappa),
        x=tuple(float(v) for v in x),
        y=tuple(float(v) for v in y),
        heading=tuple(float(v) for v in headings),
        sub_element=tuple(int(v) for v in chain.sub_element),
        element_bend=tuple(float(v) for v in bends),
        element_end_pose=tuple(
            end_pose.get(e, (0.0, chain.base_height, chain.base_heading))
            for e in range(chain.element_count)
        ),
        tip_position=(float(x[-1]), float(y[-1])),
        tip_heading=float(headings[-1]),
        localization_index=share,
        buckling=bool(buckled),
        buckled_elements=buckled,
        iterations=iterations,
        residual=residual,
    )


def localization_index(shape: EquilibriumShape, element_index: int) -> float:
    """Share of the total bend carried by one configuration element, in [0, 1]."""
    if not 0 <= element_index < len(shape.element_bend):
        raise DomainError(f"element index {element_index} out of range")
    total = shape.total_bend
    if total < 1e-9:
        return 0.0
    return abs(shape.element_bend[element_index]) / total


def shape_point(shape: EquilibriumShape, s_target: float) -> tuple[float, float]:
    """Backbone point at arc position s_target of a solved shape."""
    return _point_on_arc(
        s_target,
        np.asarray(shape.s),
        np.asarray(shape.kappa),
        np.asarray(shape.x),
        np.asarray(shape.y),
        np.asarray(shape.heading),
    )


def solve_with_deflection(
    chain: ElementChain,
    tendons: TendonState | None = None,
    gravity: float = constants.GRAVITY,
    payload_mass: float = 0.0,
    point_loads: Sequence[PointLoad] = (),
    warm_start: Sequence[float] | None = None,
    reference_warm_start: Sequence[float] | None = None,
) -> tuple[EquilibriumShape, EquilibriumShape]:
    """Loaded and unloaded solves; the loaded shape carries the tip deflection.

    The deflection is the vertical tip drop relative to the self-weight-only
    equilibrium of the same chain, matching how the load-deflection
    characterization zeroes its reference.
    """
    reference = solve_equilibrium(
        chain, gravity=gravity, warm_start=reference_warm_start
    )
    loaded = solve_equilibrium(
        chain,
        tendons=tendons,
        gravity=gravity,
        payload_mass=payload_mass,
        point_loads=point_loads,
        warm_start=warm_start,
    )
    deflection = reference.tip_position[1] - loaded.tip_position[1]
    loaded = _with_deflection(loaded, deflection)
    return loaded, reference


def _with_deflection(shape: EquilibriumShape, deflection: float) -> EquilibriumShape:
    return replace(shape, tip_deflection=deflection)


def hook_deflection(
    chain: ElementChain,
    load_kg: float,
    hook_offset: float = constants.HOOK_OFFSET_FROM_TIP,
    gravity: float = constants.GRAVITY,
) -> float:
    """Vertical drop of the hook point under a hung mass, vs the unloaded shape.

    The hook rides `hook_offset` before the tip; the drop is measured at that
    same arc position, matching the grid-marker protocol of the deflection
    characterization.
    """
    s_hook = chain.deployed_length - hook_offset
    if s_hook <= 0:
        raise DomainError("hook offset exceeds the deployed length")
    reference = solve_equilibrium(chain, gravity=gravity)
    loaded = solve_equilibrium(
        chain, gravity=gravity, point_loads=(PointLoad(s=s_hook, mass=load_kg),)
    )
    y_ref = shape_point(reference, s_hook)[1]
    y_loaded = shape_point(loaded, s_hook)[1]
    return y_ref - y_loaded


def tip_deflection_curve(
    config: RobotConfiguration,
    loads_kg: Sequence[float],
    pressures: PressureState | None = None,
    hook_offset: float = constants.HOOK_OFFSET_FROM_TIP,
    gravity: float = constants.GRAVITY,
) -> list[tuple[float, float]]:
    """Hook-point deflection for an ascending series of hung masses.

    Pressures default to the characterization operating point: trunk at the
    reference pressure, every joint at the joint operating pressure.
    """
    loads = list(loads_kg)
    if any(m < 0 for m in loads):
        raise DomainError("loads must be non-negative")
    if any(b < a for a, b in zip(loads, loads[1:])):
        raise DomainError("loads must be ascending")
    if pressures is None:
        pressures = PressureState(
            config.reference_trunk_pressure,
            {jid: constants.OPERATING_JOINT_PRESSURE for jid in config.joint_ids},
        )
    chain = assemble_chain(config, pressures)
    s_hook = chain.deployed_length - hook_offset
    reference = solve_equilibrium(chain, gravity=gravity)
    y_ref = shape_point(reference, s_hook)[1]
    curve = []
    warm = None
    for mass in loads:
        loaded = solve_equilibrium(
            chain,
            gravity=gravity,
            point_loads=(PointLoad(s=s_hook, mass=mass),),
            warm_start=warm,
        )
        warm = loaded.kappa
        curve.append((mass, y_ref - shape_point(loaded, s_hook)[1]))
    return curve


_TENDON_SIGN = {1: 1.0, 3: -1.0}


def bend_to_angle(
    config: RobotConfiguration,
    pressures: PressureState,
    target_angle_deg: float,
    tendon_id: int,
    tolerance_deg: float = 0.5,
    gravity: float = constants.GRAVITY,
) -> float:
    """Tension that bends the distal heading to the target angle (degrees).

    Bisection over tension; the heading is measured at the tip, signed toward
    the actuated side. Raises if the buckling guard trips before the target
    angle is reachable.
    """
    if target_angle_deg == 0:
        return 0.0
    if not 0 < target_angle_deg <= 120:
        raise DomainError("target angle must lie in (0, 120] degrees")
    if tendon_id not in _TENDON_SIGN:
        raise DomainError(f"tendon {tendon_id} acts out of the solver plane")
    sign = _TENDON_SIGN[tendon_id]
    chain = assemble_chain(config, pressures)
    warm: Sequence[float] | None = None

    def heading_deg(tension: float) -> tuple[float, EquilibriumShape]:
        nonlocal warm
        shape = solve_equilibrium(
            chain,
            tendons=TendonState.single(tendon_id, tension, config.tendon_radial_offset),
            gravity=gravity,
            payload_mass=config.payload_mass,
            warm_start=warm,
        )
        warm = shape.kappa
        return sign * math.degrees(shape.tip_heading - chain.base_heading), shape

    hi = 1.0
    angle_hi, shape_hi = heading_deg(hi)
    for _ in range(40):
        if angle_hi >= target_angle_deg:
            break
        if shape_hi.buckling:
            raise UnreachableAngleError(
                f"buckling at {angle_hi:.1f} deg before reaching {target_angle_deg:.1f} deg"
            )
        hi *= 2.0
        angle_hi, shape_hi = heading_deg(hi)
    else:
        raise UnreachableAngleError("tension search exhausted without reaching the target")
    if shape_hi.buckling and angle_hi < target_angle_deg:
        raise UnreachableAngleError("buckling before the target angle")

    lo = 0.0
    best = hi
    best_shape = shape_hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        angle, shape = heading_deg(mid)
        if abs(angle - target_angle_deg) <= tolerance_deg:
            best, best_shape = mid, shape
            break
        if angle < target_angle_deg:
            lo = mid
        else:
            hi = mid
            best, best_shape = mid, shape
    if best_shape.buckling:
        raise UnreachableAngleError(
            f"target {target_angle_deg:.1f} deg lies beyond the buckling guard"
        )
    return best
