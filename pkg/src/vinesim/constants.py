"""Shared physical constants and nominal robot dimensions (SI units)."""

GRAVITY = 9.81  # m/s^2

# Nominal desk-scale robot geometry.
TRUNK_DIAMETER = 0.085  # m, inflated
TRUNK_RADIUS = TRUNK_DIAMETER / 2.0
JOINT_AXIAL_LENGTH = 0.070  # m, axial span of one pneumatic joint module
CHAMBER_WIDTH = 0.0675  # m, seam-defined flat chamber width (270 mm sheet / 4)
CHAMBER_HEIGHT = 0.020  # m, nominal unpressurized chamber height (metadata only)
CHAMBER_COUNT = 4
BASE_HEIGHT = 0.115  # m, base station outlet height above ground

# LDPE film.
FILM_THICKNESS = 75e-6  # m
FILM_DENSITY = 915.0  # kg/m^3
LDPE_ELASTIC_MODULUS = 2.0e8  # Pa, typical LDPE; not used by the calibrated stiffness path
WALL_LAYERS = 2  # everted body carries the outer wall plus the inner tail

# Actuation reference points.
OPERATING_JOINT_PRESSURE = 15_000.0  # Pa, selected joint operating pressure
REFERENCE_TRUNK_PRESSURE = 12_000.0  # Pa, trunk pressure used in stiffness characterization
RETRACTION_TRUNK_PRESSURE = 6_000.0  # Pa, trunk pressure held while pulling the tail

# Load-deflection test protocol.
HOOK_OFFSET_FROM_TIP = 0.050  # m, loading hook position ahead of the tip
