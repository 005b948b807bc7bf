"""Acceptance suite: one test per simulator-level criterion, one report line each.

Run with `pytest tests/test_acceptance.py -v -s` to see every criterion's
PASS/FAIL line with the measured values.
"""

import math
import random
import time
from pathlib import Path

import pytest

from vinesim import constants
from vinesim.calibration import (
    Construction,
    calibrate,
    embedded_datasets,
    fit_cantilever_ei,
    fit_contact_area,
    linear_fit_r_squared,
    retraction_pressure_term,
)
from vinesim.config import get_robot
from vinesim.growth import (
    GrowthPhase,
    GrowthState,
    free_space_retraction_stability,
    required_retraction_tension,
    step_growth,
    step_retraction,
)
from vinesim.mechanics import (
    ChamberGeometry,
    PressureState,
    TendonState,
    chamber_force_vectors,
    pouch_ratio,
    solve_pouch_angle,
)
from vinesim.scenario import run_scenario
from vinesim.solver import (
    assemble_chain,
    bend_to_angle,
    localization_index,
    solve_equilibrium,
    solve_with_deflection,
    tip_deflection_curve,
)

REPO = Path(__file__).resolve().parents[1]
GOLDEN = sorted((REPO / "scenarios").glob("*.json"))


def report(name: str, passed: bool, detail: str):
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module", autouse=True)
def warm_calibration():
    calibrate()


def test_pouch_relation_roundtrip():
    rng = random.Random(20260808)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        theta = rng.uniform(1e-4, math.pi)
        worst = max(worst, abs(solve_pouch_angle(pouch_ratio(theta)) - theta))
    elapsed = time.perf_counter() - start
    report(
        "pouch deformation round-trip",
        worst <= 1e-9 and elapsed < 1.0,
        f"worst |dtheta| = {worst:.3e} rad over 1000 samples in {elapsed * 1e3:.0f} ms",
    )


def test_contact_force_calibration():
    catalog = embedded_datasets()
    fig9 = catalog.data["fig9"]
    fit = fit_contact_area(list(zip(fig9["pressures_pa"], fig9["total_forces_n"])))
    a_c = fit.params["contact_area_per_chamber"]
    total = 4 * a_c * 15_000.0
    force_ok = abs(total - 35.0) <= 0.05 * 35.0
    # inject per-chamber fabrication asymmetry at the reported worst-case level
    spread_target = catalog.lookup("fig9.spread_max")
    factors = (1.0 + spread_target / 2, 1.0 - spread_target / 2, 1.0, 1.0)
    vectors = chamber_force_vectors(
        15_000.0, 0.0, ChamberGeometry(contact_area=a_c), factors
    )
    magnitudes = [math.hypot(fx, fy) for fx, fy in vectors]
    spread = (max(magnitudes) - min(magnitudes)) / (sum(magnitudes) / len(magnitudes))
    spread_ok = spread <= 0.08 + 1e-12
    report(
        "contact-force calibration",
        force_ok and spread_ok,
        f"total at 15 kPa = {total:.2f} N (target 35 +/- 5%), "
        f"injected spread = {spread * 100:.1f}% (limit 8%)",
    )


def test_load_deflection_reproduction():
    start = time.perf_counter()
    loads = [round(0.01 * i, 3) for i in range(21)]
    curves = {
        name: tip_deflection_curve(get_robot(name), loads)
        for name in ("baseline_1m", "unreinforced_1m", "reinforced_1m")
    }
    elapsed = time.perf_counter() - start
    base = dict(curves["baseline_1m"])
    unreinforced = dict(curves["unreinforced_1m"])
    reinforced = dict(curves["reinforced_1m"])

    baseline_ok = 0.25 <= base[0.2] <= 0.30
    reductions = [1.0 - unreinforced[m] / base[m] for m in loads if m >= 0.05]
    reduction_ok = all(0.40 <= r <= 0.60 for r in reductions)
    reinforced_ok = reinforced[0.2] < 0.10

    arm = 1.0 - constants.HOOK_OFFSET_FROM_TIP
    fit_base = fit_cantilever_ei(curves["baseline_1m"][1:], arm)
    fit_rein = fit_cantilever_ei(curves["reinforced_1m"][1:], arm)
    ratio = fit_rein.params["bending_stiffness"] / fit_base.params["bending_stiffness"]
    ratio_ok = 3.0 <= ratio <= 4.0

    r2 = {
        name: linear_fit_r_squared([m for m, _ in c], [d for _, d in c])
        for name, c in curves.items()
    }
    r2_ok = all(v >= 0.98 for v in r2.values())
    runtime_ok = elapsed < 10.0
    report(
        "load-deflection reproduction",
        baseline_ok and reduction_ok and reinforced_ok and ratio_ok and r2_ok and runtime_ok,
        f"baseline@200g = {base[0.2]:.3f} m, reduction range = "
        f"[{min(reductions) * 100:.0f}, {max(reductions) * 100:.0f}]%, "
        f"reinforced@200g = {reinforced[0.2]:.3f} m, stiffness ratio = {ratio:.2f}, "
        f"min R^2 = {min(r2.values()):.4f}, runtime = {elapsed:.1f} s",
    )


def test_pressure_thresholds():
    catalog = embedded_datasets()
    checks = []
    for name, construction in (
        ("baseline_1m", "baseline"),
        ("unreinforced_1m", "unreinforced"),
        ("reinforced_1m", "reinforced"),
    ):
        config = get_robot(name)
        p_init = catalog.lookup(f"fig7.{construction}.P_init")
        p_grow = catalog.lookup(f"fig7.{construction}.P_grow")
        below = step_growth(GrowthState.idle(), config, math.nextafter(p_init, 0.0), 0.05)
        sustained = step_growth(GrowthState.idle(), config, p_grow, 0.05)
        checks.append(below.phase == GrowthPhase.IDLE and below.deployed_length == 0.0)
        checks.append(
            sustained.phase == GrowthPhase.STEADY_GROWTH
            and sustained.deployed_length > 0.0
        )
        checks.append(config.calibration_table.p_init == p_init)
        checks.append(config.calibration_table.p_grow == p_grow)
    config = get_robot("reinforced_1m")
    p_crossing = catalog.lookup("fig7.P_crossing")
    at_joint = GrowthState(deployed_length=0.465, phase=GrowthPhase.STEADY_GROWTH)
    stalled = step_growth(at_joint, config, math.nextafter(p_crossing, 0.0), 0.05)
    crossing = step_growth(at_joint, config, p_crossing, 0.05)
    checks.append(stalled.phase == GrowthPhase.STALLED and stalled.deployed_length == 0.465)
    checks.append(
        crossing.phase == GrowthPhase.JOINT_CROSSING and crossing.deployed_length > 0.465
    )
    report(
        "growth pressure thresholds",
        all(checks),
        "refusal below P_init, growth at P_grow, stall until P_crossing, "
        "all at exact catalog values",
    )


def test_growth_timing():
    def growth_time(name, p_t):
        config = get_robot(name)
        state = GrowthState.idle()
        while state.deployed_length < config.total_length - 1e-9:
            state = step_growth(state, config, p_t, 0.05)
            assert state.elapsed < 120.0
        return state.elapsed

    rpj = growth_time("reinforced_1m", 12_000.0)
    lj = growth_time("layer_jamming_1m", 17_500.0)
    ratio = lj / rpj
    in_band = 18.0 <= rpj <= 21.0
    lj_ok = abs(lj - 34.0) <= 0.2
    ratio_ok = 34.0 / 21.0 <= ratio <= 34.0 / 18.0
    report(
        "benchmark growth timing",
        in_band and lj_ok and ratio_ok,
        f"RPJ 1 m in {rpj:.2f} s (band [18, 21]), surrogate {lj:.2f} s, "
        f"ratio {ratio:.2f}x (reported ~1.9x)",
    )


def test_cascading_retraction():
    record = run_scenario(REPO / "scenarios" / "fig12_cascading_retraction.json")
    golden_ok = record.fault is None and record.passed
    order_outcomes = [
        a for a in record.assertion_outcomes if a.description.startswith("event order")
    ]
    ordering_ok = bool(order_outcomes) and all(a.passed for a in order_outcomes)

    term = retraction_pressure_term(6_000.0)
    term_ok = 34.0 <= term <= 34.2
    config = get_robot("shape_demo")
    required = required_retraction_tension(config, 6_000.0)
    full = GrowthState.fully_deployed(config)
    stalled = step_retraction(full, config, required - 1e-3, 6_000.0, 0.05)
    moving = step_retraction(full, config, required, 6_000.0, 0.05)
    gate_ok = stalled.insufficient_tension and not moving.insufficient_tension

    one_joint = get_robot("reinforced_1m")
    stability_ok = (
        free_space_retraction_stability(one_joint, unsupported_length=0.6).stable
        and not free_space_retraction_stability(one_joint, unsupported_length=0.601).stable
    )
    report(
        "cascading retraction",
        golden_ok and ordering_ok and term_ok and gate_ok and stability_ok,
        f"golden run fully retracted with distal-to-proximal releases, "
        f"pressure term {term:.2f} N (34.1 +/- 0.1), tension gate at "
        f"{required:.2f} N, free-space gate trips above 0.6 m",
    )


def test_bend_localization():
    config = get_robot("shape_demo")
    calib = calibrate()
    contrast = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
    chain = assemble_chain(config, contrast)
    stiff_ei = float(chain.sub_ei[chain.sub_element == 1][0])
    stiff_ratio = stiff_ei / calib.chain_ei[Construction.BASELINE.value]
    ratio_ok = 3.0 <= stiff_ratio <= 4.0

    tension = bend_to_angle(config, contrast, 45.0, tendon_id=1)
    shape = solve_equilibrium(chain, tendons=TendonState.single(1, tension))
    # elements: [link1, joint1, link2, joint2, link3]; the vented joint is index 3
    localized = localization_index(shape, 3)
    localized_ok = localized >= 0.8

    uniform = PressureState(12_000.0, {1: 15_000.0, 2: 15_000.0})
    uniform_chain = assemble_chain(config, uniform)
    uniform_shape = solve_equilibrium(uniform_chain, tendons=TendonState.single(1, tension))
    distributed = localization_index(uniform_shape, 3)
    distributed_ok = distributed < 0.5 and uniform_shape.localization_index < 0.5
    report(
        "bend localization",
        ratio_ok and localized_ok and distributed_ok,
        f"stiffened joints at {stiff_ratio:.2f}x baseline, compliant-interface "
        f"share {localized:.3f} (>= 0.8), uniform-stiffness share "
        f"{uniform_shape.localization_index:.3f} (< 0.5) at T = {tension:.1f} N",
    )


def test_free_space_payload():
    config = get_robot("reinforced_1m")
    pressures = PressureState(12_000.0, {1: 15_000.0})
    chain = assemble_chain(config, pressures)
    heavy, _ = solve_with_deflection(chain, payload_mass=0.202)
    light, _ = solve_with_deflection(chain, payload_mass=0.102)
    no_collapse = not heavy.buckling
    sag_reduced = light.tip_deflection < heavy.tip_deflection
    report(
        "free-space payload",
        no_collapse and sag_reduced,
        f"202 g sag {heavy.tip_deflection:.3f} m without collapse flag; "
        f"102 g sag {light.tip_deflection:.3f} m (strictly smaller)",
    )


def test_golden_replay_determinism():
    details = []
    all_ok = True
    for path in GOLDEN:
        texts = {run_scenario(path).csv_text() for _ in range(3)}
        events = {run_scenario(path).events_jsonl() for _ in range(1)}
        identical = len(texts) == 1 and len(events) == 1
        all_ok = all_ok and identical
        details.append(f"{path.stem}: {'identical' if identical else 'DIVERGED'}")
    report(
        "golden replay determinism",
        all_ok,
        "3 consecutive runs byte-identical for " + "; ".join(details),
    )
