"""Closed-form mechanics of pneumatic joint chambers, tendons, and bending stiffness.

An unpressurized joint chamber is a flat, seam-bounded membrane pouch. Under
pressure it bulges into a cylindrical surface segment: the flat length wraps
onto an arc of radius ``r_c`` spanning a central angle ``theta``, while the
chord between the seams shortens. Because the membrane is inextensible the
flat length equals the arc length, which ties the chord/flat ratio to
``sin(theta)/theta``. Around the trunk this contraction is blocked, so the
pressure differential is redirected into a normal contact force on the trunk
surface; that constraint force, acting at a radial offset, is what raises the
local bending stiffness of the joint.

All functions here are pure; values are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

from . import constants
from .errors import (
    DegenerateStiffnessError,
    DomainError,
    UnfittedCalibrationError,
)

# Default per-chamber contact area: total contact force of 35 N at a 15 kPa
# differential, shared by 4 chambers.
DEFAULT_CONTACT_AREA = 35.0 / (15_000.0 * constants.CHAMBER_COUNT)


@dataclass(frozen=True)
class ChamberGeometry:
    """Seam-defined dimensions of one joint chamber (meters, square meters)."""

    flat_length: float = constants.JOINT_AXIAL_LENGTH
    width: float = constants.CHAMBER_WIDTH
    height: float = constants.CHAMBER_HEIGHT
    contact_area: float = DEFAULT_CONTACT_AREA
    radial_offset: float = constants.TRUNK_RADIUS
    chamber_count: int = constants.CHAMBER_COUNT

    def __post_init__(self):
        if self.flat_length <= 0 or self.width <= 0 or self.height <= 0:
            raise DomainError("chamber dimensions must be strictly positive")
        if self.radial_offset <= 0:
            raise DomainError("radial offset must be strictly positive")
        if self.chamber_count < 2:
            raise DomainError("a joint needs at least two chambers")
        if not 0 < self.contact_area <= self.width * self.flat_length:
            raise DomainError(
                "contact area must be positive and cannot exceed the flat footprint"
            )


@dataclass(frozen=True)
class PouchState:
    """Inflated chamber as a cylindrical segment.

    The two arc identities (flat length = 2 * r_c * theta and
    r_c * sin(theta) = chord / 2) must hold simultaneously.
    """

    central_angle: float
    radius_of_curvature: float
    chord_length: float

    def __post_init__(self):
        if not 0 < self.central_angle <= math.pi:
            raise DomainError("central angle must lie in (0, pi]")
        if self.radius_of_curvature <= 0:
            raise DomainError("radius of curvature must be positive")
        flat = self.flat_length
        chord = 2.0 * self.radius_of_curvature * math.sin(self.central_angle)
        if not math.isclose(chord, self.chord_length, rel_tol=1e-9, abs_tol=1e-12):
            raise DomainError("chord length inconsistent with arc geometry")
        if not 0 <= self.chord_length / flat <= 1 + 1e-12:
            raise DomainError("chord/flat ratio must lie in [0, 1]")

    @property
    def flat_length(self) -> float:
        return 2.0 * self.radius_of_curvature * self.central_angle


@dataclass(frozen=True)
class MaterialSpec:
    """Film material constants plus the calibrated whole-chain stiffness."""

    film_thickness: float = constants.FILM_THICKNESS
    film_density: float = constants.FILM_DENSITY
    elastic_modulus: float = constants.LDPE_ELASTIC_MODULUS
    baseline_ei: float = 2.0  # N*m^2, replaced by calibration per construction

    def __post_init__(self):
        for name in ("film_thickness", "film_density", "elastic_modulus", "baseline_ei"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class PressureLimits:
    """Safety thresholds for joint chamber pressure (Pa)."""

    operating: float = constants.OPERATING_JOINT_PRESSURE
    burst_standalone: float = 21_400.0
    burst_confined: float = 23_000.0


@dataclass(frozen=True)
class PressureReport:
    warnings: tuple[str, ...]
    faults: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.faults


@dataclass(frozen=True)
class PressureState:
    """Actuation pressures: trunk plus one entry per joint id (Pa)."""

    trunk_pressure: float
    joint_pressures: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.trunk_pressure < 0:
            raise DomainError("trunk pressure must be non-negative")
        cleaned = dict(sorted((int(k), float(v)) for k, v in self.joint_pressures.items()))
        for jid, p in cleaned.items():
            if p < 0:
                raise DomainError(f"joint {jid} pressure must be non-negative")
        object.__setattr__(self, "joint_pressures", MappingProxyType(cleaned))

    def joint(self, joint_id: int) -> float:
        return self.joint_pressures.get(joint_id, 0.0)

    def with_trunk(self, p_t: float) -> "PressureState":
        return PressureState(p_t, dict(self.joint_pressures))

    def with_joint(self, joint_id: int, p_j: float) -> "PressureState":
        updated = dict(self.joint_pressures)
        updated[joint_id] = p_j
        return PressureState(self.trunk_pressure, updated)

    def validate(self, limits: PressureLimits = PressureLimits()) -> PressureReport:
        """Flag joints above the operating limit (warning) or burst limit (fault).

        The burst threshold depends on confinement: a chamber backed by a
        pressurized trunk tolerates more before rupture.
        """
        burst = limits.burst_confined if self.trunk_pressure > 0 else limits.burst_standalone
        warnings, faults = [], []
        for jid, p in self.joint_pressures.items():
            if p >= burst:
                faults.append(f"joint {jid} at {p:.0f} Pa exceeds burst limit {burst:.0f} Pa")
            elif p > limits.operating:
                warnings.append(
                    f"joint {jid} at {p:.0f} Pa exceeds operating limit {limits.operating:.0f} Pa"
                )
        return PressureReport(tuple(warnings), tuple(faults))


@dataclass(frozen=True)
class TendonState:
    """Tensions per tendon id (N) and the shared radial offset (m).

    Tendons are numbered 1..4 around the circumference; 1 runs along the top
    of the robot, 3 along the bottom. 2 and 4 act out of the solver plane.
    """

    tensions: Mapping[int, float] = field(default_factory=dict)
    radial_offset: float = constants.TRUNK_RADIUS

    def __post_init__(self):
        if self.radial_offset <= 0:
            raise DomainError("tendon radial offset must be positive")
        cleaned = dict(sorted((int(k), float(v)) for k, v in self.tensions.items()))
        for tid, t in cleaned.items():
            if not 1 <= tid <= 4:
                raise DomainError(f"tendon id {tid} out of range 1..4")
            if t < 0:
                raise DomainError(f"tendon {tid} tension must be non-negative")
        object.__setattr__(self, "tensions", MappingProxyType(cleaned))

    @classmethod
    def single(cls, tendon_id: int, tension: float,
               radial_offset: float = constants.TRUNK_RADIUS) -> "TendonState":
        return cls({tendon_id: tension}, radial_offset)

    def planar_moment(self) -> float:
        """Net in-plane bending moment of all tendons (N*m, +up for tendon 1)."""
        sign = {1: 1.0, 2: 0.0, 3: -1.0, 4: 0.0}
        return sum(sign[tid] * t * self.radial_offset for tid, t in self.tensions.items())


@dataclass(frozen=True)
class RPJModule:
    """One reconfigurable pneumatic joint in the element chain.

    ``passive_bending_stiffness`` (vented joint) and ``stiffening_coefficient``
    come from calibration; a module without them cannot report a stiffness.
    """

    joint_id: int
    geometry: ChamberGeometry = ChamberGeometry()
    passive_bending_stiffness: float | None = None
    stiffening_coefficient: float | None = None

    @property
    def length(self) -> float:
        return self.geometry.flat_length


def pouch_ratio(theta: float) -> float:
    """Chord-to-flat-length ratio of an inflated pouch at central angle theta.

    Strictly decreasing on (0, pi]: 1 in the flat limit, 0 at full curl.
    """
    if not 0 < theta <= math.pi:
        raise DomainError("central angle must lie in (0, pi]")
    return math.sin(theta) / theta


_RATIO_NEAR_FLAT = 1e-6  # below this angle, invert with the series expansion


def solve_pouch_angle(ratio: float) -> float:
    """Invert the chord/flat ratio to the central angle (radians).

    Bracketed bisection on (0, pi]; the result reproduces the input ratio to
    within 1e-10. Ratio 1 maps to exactly 0 (undeformed pouch).
    """
    if not 0 <= ratio <= 1:
        raise DomainError("ratio must lie in [0, 1]")
    if ratio == 1.0:
        return 0.0
    if ratio >= pouch_ratio(_RATIO_NEAR_FLAT):
        # sin(t)/t ~ 1 - t^2/6 for tiny t; quartic remainder is negligible here.
        return math.sqrt(6.0 * (1.0 - ratio))
    if ratio <= pouch_ratio(math.pi):
        return math.pi
    lo, hi = _RATIO_NEAR_FLAT, math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if pouch_ratio(mid) > ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pouch_geometry(flat_length: float, theta: float) -> PouchState:
    """Cylindrical-segment state of a pouch with the given flat length and angle."""
    if flat_length <= 0:
        raise DomainError("flat length must be positive")
    if not 0 < theta <= math.pi:
        raise DomainError("central angle must lie in (0, pi]")
    radius = flat_length / (2.0 * theta)
    chord = 2.0 * radius * math.sin(theta)
    return PouchState(central_angle=theta, radius_of_curvature=radius, chord_length=chord)


@dataclass(frozen=True)
class ChamberContact:
    """Normal contact force of one chamber on the trunk.

    ``raw`` is the signed pressure-differential force for diagnostics; a
    membrane cannot pull, so ``effective`` clamps negative values to zero and
    ``slack`` marks that condition.
    """

    raw: float
    effective: float
    slack: bool


def chamber_contact_force(p_j: float, p_t: float, contact_area: float) -> ChamberContact:
    """Contact force from the chamber/trunk pressure differential (N)."""
    if contact_area <= 0:
        raise DomainError("contact area must be positive")
    raw = (p_j - p_t) * contact_area
    return ChamberContact(raw=raw, effective=max(0.0, raw), slack=raw < 0.0)


def chamber_force_vectors(
    p_j: float,
    p_t: float,
    geometry: ChamberGeometry,
    area_factors: Sequence[float] | None = None,
) -> tuple[tuple[float, float], ...]:
    """Planar force vectors of all chambers, each directed radially inward.

    ``area_factors`` scales each chamber's contact area to model fabrication
    asymmetry; defaults to a perfectly symmetric joint.
    """
    n = geometry.chamber_count
    factors = tuple(area_factors) if area_factors is not None else (1.0,) * n
    if len(factors) != n:
        raise DomainError(f"expected {n} area factors, got {len(factors)}")
    vectors = []
    for k, factor in enumerate(factors):
        angle = 2.0 * math.pi * k / n
        force = chamber_contact_force(p_j, p_t, geometry.contact_area * factor).effective
        vectors.append((-force * math.cos(angle), -force * math.sin(angle)))
    return tuple(vectors)


def net_chamber_load(
    vectors: Sequence[tuple[float, float]],
    geometry: ChamberGeometry,
) -> tuple[float, float, float]:
    """Resultant (Fx, Fy, Mz) of chamber forces applied at their contact points."""
    n = geometry.chamber_count
    fx = fy = mz = 0.0
    for k, (vx, vy) in enumerate(vectors):
        angle = 2.0 * math.pi * k / n
        px = geometry.radial_offset * math.cos(angle)
        py = geometry.radial_offset * math.sin(angle)
        fx += vx
        fy += vy
        mz += px * vy - py * vx
    return fx, fy, mz


def effective_bending_stiffness(joint: RPJModule, p_j: float, p_t: float) -> float:
    """Pressure-dependent bending stiffness of a joint element (N*m^2).

    Affine in the positive pressure differential: the passive (vented) value
    plus a calibrated gain times differential * contact area * radial offset.
    Monotone non-decreasing in p_j; exactly passive for p_j <= p_t.
    """
    if joint.passive_bending_stiffness is None or joint.stiffening_coefficient is None:
        raise UnfittedCalibrationError(
            f"joint {joint.joint_id} has no fitted stiffness parameters"
        )
    differential = max(0.0, p_j - p_t)
    geometry = joint.geometry
    return (
        joint.passive_bending_stiffness
        + joint.stiffening_coefficient
        * differential
        * geometry.contact_area
        * geometry.radial_offset
    )


def tendon_moment(tension: float, radial_offset: float) -> float:
    """Bending moment of one tendon about the backbone (N*m)."""
    if tension < 0:
        raise DomainError("tension must be non-negative")
    if radial_offset <= 0:
        raise DomainError("radial offset must be positive")
    return tension * radial_offset


def curvature_from_moment(moment: float, bending_stiffness: float) -> float:
    """Beam-like curvature response kappa = M / EI (1/m)."""
    if bending_stiffness <= 0:
        raise DegenerateStiffnessError("bending stiffness must be positive")
    return moment / bending_stiffness
