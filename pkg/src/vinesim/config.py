"""Robot build descriptions: element chains, materials, and a named registry.

A robot is an ordered chain of trunk segments and pneumatic joint modules,
clamped at the base station outlet. Chain bending stiffness comes from the
calibration result: trunk elements carry the construction's calibrated
whole-chain stiffness (scaled with trunk pressure around the characterization
reference), joints carry the affine pressure-dependent joint model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

from . import constants
from .calibration import CalibrationResult, Construction, calibrate
from .errors import DomainError
from .growth import CalibrationTable
from .mechanics import ChamberGeometry, MaterialSpec, RPJModule


@dataclass(frozen=True)
class TrunkSegment:
    """Plain pressurized trunk between joints (meters)."""

    length: float

    def __post_init__(self):
        if self.length <= 0:
            raise DomainError("trunk segment length must be positive")


Element = Union[TrunkSegment, RPJModule]


@dataclass(frozen=True)
class JointInfo:
    joint_id: int
    module: RPJModule
    start: float
    end: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)


@dataclass(frozen=True)
class RobotConfiguration:
    name: str
    construction: Construction
    elements: tuple[Element, ...]
    trunk_ei_ref: float  # N*m^2 at the reference trunk pressure
    calibration_table: CalibrationTable
    resisting_force: float  # N, lumped inversion resistance during retraction
    trunk_diameter: float = constants.TRUNK_DIAMETER
    material: MaterialSpec = MaterialSpec()
    tendon_radial_offset: float = constants.TRUNK_RADIUS
    base_height: float = constants.BASE_HEIGHT
    payload_mass: float = 0.0  # kg, carried at the tip
    wall_layers: int = constants.WALL_LAYERS
    reference_trunk_pressure: float = constants.REFERENCE_TRUNK_PRESSURE

    def __post_init__(self):
        if not self.elements:
            raise DomainError("a robot needs at least one element")
        if not isinstance(self.elements[0], TrunkSegment):
            raise DomainError("the chain must begin with a trunk segment at the clamped base")
        for element in self.elements:
            if element.length <= 0:
                raise DomainError("element lengths must be positive")
        if not 0 < self.tendon_radial_offset <= self.trunk_diameter / 2 + 1e-12:
            raise DomainError("tendon offset must be positive and within the trunk radius")
        if self.trunk_ei_ref <= 0:
            raise DomainError("trunk bending stiffness must be positive")
        if self.payload_mass < 0:
            raise DomainError("payload mass cannot be negative")

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.elements)

    def joints(self) -> tuple[JointInfo, ...]:
        infos = []
        position = 0.0
        for element in self.elements:
            if isinstance(element, RPJModule):
                infos.append(
                    JointInfo(element.joint_id, element, position, position + element.length)
                )
            position += element.length
        return tuple(infos)

    @property
    def joint_ids(self) -> tuple[int, ...]:
        return tuple(info.joint_id for info in self.joints())

    def trunk_ei(self, p_t: float) -> float:
        """Trunk stiffness scaled with inflation pressure around the reference.

        No measurement exists below the reference point, so the scaling is
        linear in p_t with a 1% floor to keep the solver defined when vented.
        """
        scale = max(p_t / self.reference_trunk_pressure, 0.01)
        return self.trunk_ei_ref * scale

    def film_linear_density(self) -> float:
        """Wall mass per deployed meter (kg/m), all layers included."""
        return (
            math.pi
            * self.trunk_diameter
            * self.material.film_thickness
            * self.material.film_density
            * self.wall_layers
        )

    def with_payload(self, payload_mass: float) -> "RobotConfiguration":
        return replace(self, payload_mass=payload_mass)


def build_robot(
    name: str,
    construction: Construction,
    link_lengths: Sequence[float],
    calibration: CalibrationResult | None = None,
    joint_length: float = constants.JOINT_AXIAL_LENGTH,
    payload_mass: float = 0.0,
) -> RobotConfiguration:
    """Assemble a robot with joints between consecutive links.

    ``link_lengths`` are the trunk segments; a joint module is placed between
    each pair, so n links produce n-1 joints. Joint stiffness parameters come
    from the calibration for the given construction.
    """
    calib = calibration or calibrate()
    geometry = ChamberGeometry(
        flat_length=joint_length, contact_area=calib.contact_area_per_chamber
    )
    c_stiff = calib.stiffening_coefficient.get(construction.value)
    elements: list[Element] = []
    for index, link in enumerate(link_lengths):
        elements.append(TrunkSegment(link))
        if index < len(link_lengths) - 1:
            if c_stiff is None:
                raise DomainError(
                    f"construction {construction.value} has no joint stiffness calibration"
                )
            elements.append(
                RPJModule(
                    joint_id=index + 1,
                    geometry=geometry,
                    passive_bending_stiffness=calib.joint_passive_ei,
                    stiffening_coefficient=c_stiff,
                )
            )
    return RobotConfiguration(
        name=name,
        construction=construction,
        elements=tuple(elements),
        trunk_ei_ref=calib.chain_ei[construction.value],
        calibration_table=calib.growth_table(construction),
        resisting_force=calib.resisting_force,
        material=MaterialSpec(baseline_ei=calib.chain_ei[construction.value]),
        payload_mass=payload_mass,
    )


# Registry of the standard test articles. A 1 m robot with a single mid-span
# joint leaves two 0.465 m links around the 70 mm module; the free-space
# shape-locking robot uses the 0.30/0.50/0.40 m link split.
_MIDSPAN_LINKS = (0.465, 0.465)
_SHAPE_DEMO_LINKS = (0.30, 0.50, 0.40)


def _registry() -> dict:
    return {
        "baseline_1m": lambda: build_robot("baseline_1m", Construction.BASELINE, (1.0,)),
        "unreinforced_1m": lambda: build_robot(
            "unreinforced_1m", Construction.UNREINFORCED, _MIDSPAN_LINKS
        ),
        "reinforced_1m": lambda: build_robot(
            "reinforced_1m", Construction.REINFORCED, _MIDSPAN_LINKS
        ),
        "shape_demo": lambda: build_robot(
            "shape_demo", Construction.REINFORCED, _SHAPE_DEMO_LINKS
        ),
        "layer_jamming_1m": lambda: build_robot(
            "layer_jamming_1m", Construction.LAYER_JAMMING, (1.0,)
        ),
    }


def robot_names() -> tuple[str, ...]:
    return tuple(sorted(_registry()))


def get_robot(name: str) -> RobotConfiguration:
    registry = _registry()
    if name not in registry:
        raise DomainError(f"unknown robot {name!r}; known: {', '.join(sorted(registry))}")
    return registry[name]()
