import math
from dataclasses import replace

import numpy as np
import pytest

from vinesim import constants
from vinesim.calibration import Construction, calibrate, linear_fit_r_squared
from vinesim.config import get_robot
from vinesim.errors import (
    DomainError,
    MissingJointPressureError,
    UnreachableAngleError,
)
from vinesim.mechanics import PressureState, TendonState
from vinesim.solver import (
    PointLoad,
    assemble_chain,
    bend_to_angle,
    hook_deflection,
    localization_index,
    shape_point,
    solve_equilibrium,
    solve_with_deflection,
    tip_deflection_curve,
    uniform_cantilever,
)


@pytest.fixture(scope="module")
def reinforced():
    return get_robot("reinforced_1m")


@pytest.fixture(scope="module")
def shape_demo():
    return get_robot("shape_demo")


def operating_pressures(config, p_t=12_000.0, p_j=15_000.0):
    return PressureState(p_t, {jid: p_j for jid in config.joint_ids})


class TestAssembleChain:
    def test_missing_joint_pressure(self, reinforced):
        with pytest.raises(MissingJointPressureError):
            assemble_chain(reinforced, PressureState(12_000.0, {}))

    def test_vented_joints_are_passive(self, shape_demo):
        chain = assemble_chain(shape_demo, PressureState(12_000.0, {1: 12_000.0, 2: 12_000.0}))
        calib = calibrate()
        joint_ei = chain.sub_ei[chain.sub_element == 1]
        assert joint_ei == pytest.approx(calib.joint_passive_ei)

    def test_reinforced_joint_triples_baseline(self, reinforced):
        chain = assemble_chain(reinforced, operating_pressures(reinforced))
        calib = calibrate()
        joint_ei = float(chain.sub_ei[chain.sub_element == 1][0])
        ratio = joint_ei / calib.chain_ei[Construction.BASELINE.value]
        assert 3.0 <= ratio <= 4.0

    def test_stiffness_profile_matches_shape_locking_pattern(self, shape_demo):
        # both joints stiffened, distal trunk link still compliant relative to them
        chain = assemble_chain(shape_demo, operating_pressures(shape_demo))
        j1 = float(chain.sub_ei[chain.sub_element == 1][0])
        j2 = float(chain.sub_ei[chain.sub_element == 3][0])
        assert j1 == pytest.approx(j2)
        vented = assemble_chain(shape_demo, PressureState(12_000.0, {1: 15_000.0, 2: 0.0}))
        assert float(vented.sub_ei[vented.sub_element == 3][0]) < 0.1 * j2

    def test_partial_deployment(self, shape_demo):
        chain = assemble_chain(shape_demo, operating_pressures(shape_demo), deployed_length=0.2)
        assert chain.deployed_length == pytest.approx(0.2)
        assert chain.n > 0

    def test_empty_deployment(self, shape_demo):
        chain = assemble_chain(shape_demo, operating_pressures(shape_demo), deployed_length=0.0)
        assert chain.n == 0
        shape = solve_equilibrium(chain)
        assert shape.tip_position == (0.0, shape_demo.base_height)


class TestSolveEquilibrium:
    def test_straight_without_loads(self):
        chain = uniform_cantilever(1.0, 2.0)
        shape = solve_equilibrium(chain, gravity=0.0)
        assert all(abs(k) < 1e-15 for k in shape.kappa)
        assert shape.tip_position[0] == pytest.approx(1.0, rel=1e-12)
        assert not shape.buckling

    def test_pure_moment_closed_form(self):
        # constant tendon moment: kappa = T r / EI on every element, no iteration error
        chain = uniform_cantilever(1.0, 2.0, linear_density=1e-9)
        tension = 10.0
        shape = solve_equilibrium(
            chain, tendons=TendonState.single(1, tension), gravity=0.0
        )
        expected = tension * constants.TRUNK_RADIUS / 2.0
        assert np.allclose(shape.kappa, expected, rtol=1e-8)

    def test_gradient_matches_inverse_stiffness(self):
        # single-element chain, finite difference of kappa vs moment
        ei = 2.0
        chain = uniform_cantilever(0.5, ei, linear_density=1e-9, max_sub_length=0.5)
        kappas = []
        for tension in (5.0, 10.0):
            shape = solve_equilibrium(
                chain, tendons=TendonState.single(1, tension), gravity=0.0
            )
            kappas.append(shape.kappa[0])
        d_moment = 5.0 * constants.TRUNK_RADIUS
        gradient = (kappas[1] - kappas[0]) / d_moment
        assert gradient == pytest.approx(1.0 / ei, rel=1e-6)

    def test_superposition_at_small_loads(self):
        chain = uniform_cantilever(1.0, 2.0)
        d1 = hook_deflection(chain, 0.025)
        d2 = hook_deflection(chain, 0.050)
        assert d2 == pytest.approx(2.0 * d1, rel=0.05)

    def test_frame_invariance(self, reinforced):
        pressures = operating_pressures(reinforced)
        alpha = 0.7
        plain = assemble_chain(reinforced, pressures)
        rotated = assemble_chain(reinforced, pressures, base_heading=alpha)
        g = constants.GRAVITY
        shape_a = solve_equilibrium(plain, payload_mass=0.1)
        # rotating (0, -g) by alpha gives (g sin a, -g cos a)
        shape_b = solve_equilibrium(
            rotated, payload_mass=0.1, gravity_vec=(g * math.sin(alpha), -g * math.cos(alpha))
        )
        assert np.allclose(shape_a.kappa, shape_b.kappa, atol=1e-9)

    def test_stiffening_monotonicity(self, reinforced):
        # fixed load, rising joint pressure: deflection never increases
        previous = math.inf
        for p_j in (12_000.0, 13_000.0, 14_000.0, 15_000.0, 18_000.0):
            chain = assemble_chain(reinforced, operating_pressures(reinforced, p_j=p_j))
            deflection = hook_deflection(chain, 0.2)
            assert deflection <= previous + 1e-12
            previous = deflection

    def test_minimum_stiffness_chain_bounds_deflection(self, reinforced):
        chain = assemble_chain(reinforced, operating_pressures(reinforced, p_j=18_000.0))
        bounding = replace(chain, sub_ei=np.full(chain.n, float(np.min(chain.sub_ei))))
        actual = hook_deflection(chain, 0.1)
        bound = hook_deflection(bounding, 0.1)
        assert actual <= bound + 1e-12

    def test_heading_change_equals_kappa_times_length(self, shape_demo):
        chain = assemble_chain(shape_demo, operating_pressures(shape_demo))
        shape = solve_equilibrium(chain, payload_mass=0.1)
        for i, kappa in enumerate(shape.kappa):
            dh = shape.heading[i + 1] - shape.heading[i]
            dl = shape.s[i + 1] - shape.s[i]
            assert dh == pytest.approx(kappa * dl, rel=1e-9, abs=1e-12)

    def test_buckling_flag(self):
        chain = uniform_cantilever(1.0, 0.05, max_sub_length=1.0)
        shape = solve_equilibrium(chain, tendons=TendonState.single(1, 5.0), gravity=0.0)
        assert shape.buckling
        assert shape.buckled_elements == (0,)


class TestDeflectionCurve:
    def test_zero_load_zero_deflection(self, reinforced):
        curve = tip_deflection_curve(reinforced, [0.0, 0.1])
        assert curve[0][1] == pytest.approx(0.0, abs=1e-9)

    def test_monotone_and_near_linear(self):
        baseline = get_robot("baseline_1m")
        loads = [0.02 * i for i in range(11)]
        curve = tip_deflection_curve(baseline, loads)
        deflections = [d for _, d in curve]
        assert all(b >= a - 1e-12 for a, b in zip(deflections, deflections[1:]))
        assert linear_fit_r_squared(loads, deflections) >= 0.98

    def test_load_ordering_enforced(self, reinforced):
        with pytest.raises(DomainError):
            tip_deflection_curve(reinforced, [0.2, 0.1])


class TestLocalization:
    def test_zero_gravity_share_matches_arithmetic(self, shape_demo):
        # independent oracle: with a constant tendon moment the bend share of an
        # element is (l/EI) / sum(l/EI)
        pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
        chain = assemble_chain(shape_demo, pressures)
        shape = solve_equilibrium(
            chain, tendons=TendonState.single(1, 5.0), gravity=0.0
        )
        weights = chain.sub_lengths / chain.sub_ei
        expected = {}
        for element in range(5):
            expected[element] = float(
                np.sum(weights[chain.sub_element == element]) / np.sum(weights)
            )
        for element in range(5):
            assert localization_index(shape, element) == pytest.approx(
                expected[element], rel=1e-6, abs=1e-9
            )

    def test_no_bend_returns_zero(self):
        chain = uniform_cantilever(1.0, 2.0)
        shape = solve_equilibrium(chain, gravity=0.0)
        assert localization_index(shape, 0) == 0.0

    def test_out_of_range(self, shape_demo):
        chain = assemble_chain(shape_demo, operating_pressures(shape_demo))
        shape = solve_equilibrium(chain)
        with pytest.raises(DomainError):
            localization_index(shape, 99)


class TestBendToAngle:
    def test_zero_target(self, shape_demo):
        assert bend_to_angle(shape_demo, operating_pressures(shape_demo), 0.0, 1) == 0.0

    def test_45_degrees_at_compliant_joint(self, shape_demo):
        pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
        tension = bend_to_angle(shape_demo, pressures, 45.0, tendon_id=1)
        chain = assemble_chain(shape_demo, pressures)
        shape = solve_equilibrium(chain, tendons=TendonState.single(1, tension))
        achieved = math.degrees(shape.tip_heading)
        assert achieved == pytest.approx(45.0, abs=0.5)
        assert tension > 0

    def test_90_degrees_without_collapse(self, shape_demo):
        pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
        tension = bend_to_angle(shape_demo, pressures, 90.0, tendon_id=1)
        chain = assemble_chain(shape_demo, pressures)
        shape = solve_equilibrium(chain, tendons=TendonState.single(1, tension))
        assert not shape.buckling

    def test_unreachable_angle_buckles_first(self, shape_demo):
        pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
        with pytest.raises(UnreachableAngleError):
            bend_to_angle(shape_demo, pressures, 120.0, tendon_id=1)

    def test_downward_tendon(self, shape_demo):
        pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
        tension = bend_to_angle(shape_demo, pressures, 30.0, tendon_id=3)
        chain = assemble_chain(shape_demo, pressures)
        shape = solve_equilibrium(chain, tendons=TendonState.single(3, tension))
        assert math.degrees(shape.tip_heading) == pytest.approx(-30.0, abs=0.5)

    def test_domain(self, shape_demo):
        pressures = operating_pressures(shape_demo)
        with pytest.raises(DomainError):
            bend_to_angle(shape_demo, pressures, 130.0, 1)
        with pytest.raises(DomainError):
            bend_to_angle(shape_demo, pressures, 45.0, 2)


class TestPayloadScenario:
    def test_202g_free_space_without_collapse(self, reinforced):
        chain = assemble_chain(reinforced, operating_pressures(reinforced))
        heavy, _ = solve_with_deflection(chain, payload_mass=0.202)
        light, _ = solve_with_deflection(chain, payload_mass=0.102)
        assert not heavy.buckling
        assert light.tip_deflection < heavy.tip_deflection
