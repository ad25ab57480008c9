import math

import pytest
from hypothesis import given, settings, strategies as st

from sfrj.atmosphere import freestream_totals
from sfrj.combustor import (
    BurnoutError, DomainError, F_STOICH, FuelGrain, NoExpansionError, Plant, PlantConfig,
    PlantState, PortState, RegressionParams, aft_temperature, equivalence_ratio,
    exhaust_velocity, friction_total_pressure_loss, fuel_mass_flow, ideal_exhaust_velocity,
    plant_step, regression_rate, static_outputs, thrust,
)
from sfrj.equilibrium import hp_combustion

FREE = freestream_totals(3.25, 30000.0)
PARAMS = RegressionParams()


def test_regression_zero_alpha():
    assert regression_rate(100.0, 4e4, 770.0, RegressionParams(alpha=0.0)) == 0.0


def test_regression_homogeneity():
    a = regression_rate(50.0, 4e4, 770.0, PARAMS)
    b = regression_rate(100.0, 4e4, 770.0, PARAMS)
    assert b / a == pytest.approx(2**PARAMS.a, rel=1e-14)


@pytest.mark.parametrize("args", [(0.0, 4e4, 770.0), (50.0, -1.0, 770.0), (50.0, 4e4, 0.0)])
def test_regression_domain(args):
    with pytest.raises(DomainError):
        regression_rate(*args, PARAMS)


def test_friction_loss_arithmetic():
    port = PortState(rho3=1.0, u3=math.sqrt(2e4), G=1.0)  # dynamic pressure 10 kPa
    assert friction_total_pressure_loss(port, 0.5, 0.12, 0.02) == pytest.approx(208.333, rel=1e-5)
    assert friction_total_pressure_loss(port, 0.5, 0.12, 0.0) == 0.0
    fast = PortState(1.0, 2 * port.u3, 1.0)
    assert friction_total_pressure_loss(fast, 0.5, 0.12, 0.02) == pytest.approx(
        4 * friction_total_pressure_loss(port, 0.5, 0.12, 0.02), rel=1e-14)


def test_fuel_mass_flow():
    g = FuelGrain(r3=60e-3)
    assert fuel_mass_flow(g, 0.0) == 0.0
    assert fuel_mass_flow(g, 1e-3) == pytest.approx(0.16965, rel=1e-4)
    g2 = FuelGrain(r3=30e-3)
    assert fuel_mass_flow(g, 1e-3) == pytest.approx(2 * fuel_mass_flow(g2, 1e-3), rel=1e-14)
    with pytest.raises(DomainError):
        fuel_mass_flow(g, -1e-3)


def test_equivalence_ratio():
    assert equivalence_ratio(F_STOICH * 2.0, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert equivalence_ratio(0.0, 2.0) == 0.0
    assert equivalence_ratio(0.10, 2.0, 0.0713) == pytest.approx(0.7013, abs=1e-4)
    with pytest.raises(DomainError):
        equivalence_ratio(0.1, 0.0)


def test_aft_temperature():
    assert aft_temperature(2600.0, 600.0, 1.0) == 2600.0
    assert aft_temperature(2600.0, 600.0, 0.0) == 600.0
    assert aft_temperature(2600.0, 600.0, 0.75) == pytest.approx(2100.0)


def test_exhaust_velocity():
    u = ideal_exhaust_velocity(2100.0, 40.0, 1.0, 1.3, 290.0)
    by_hand = math.sqrt(2 * 1.3 * 290.0 * 2100.0 / 0.3 * (1 - 40.0 ** (-0.3 / 1.3)))
    assert u == pytest.approx(by_hand, rel=1e-14)
    assert u == pytest.approx(1739.25, abs=0.01)
    assert exhaust_velocity(2100.0, 40.0, 1.0, 1.3, 290.0, 0.95) / u == pytest.approx(0.95, rel=1e-15)
    assert exhaust_velocity(2100.0, 40.0, 1.0, 1.3, 290.0, 0.95, on="energy") / u == \
        pytest.approx(math.sqrt(0.95), rel=1e-15)
    # approaches zero as the pressure ratio tends to one
    assert ideal_exhaust_velocity(2100.0, 1.0 + 1e-12, 1.0, 1.3, 290.0) < 1e-2
    with pytest.raises(NoExpansionError):
        ideal_exhaust_velocity(2100.0, 1.0, 1.0, 1.3, 290.0)


def test_thrust():
    assert thrust(2.0, 0.0, 960.0, 960.0) == 0.0
    assert thrust(2.0, 0.05, 1800.0, 960.0) == pytest.approx(1860.0)
    assert thrust(2.0, 0.0, 900.0, 960.0) < 0


def test_cruise_chain_by_hand():
    """Full chain at one point, recomputed from the primitive formulas."""
    r0, r3 = 53.58e-3, 64e-3
    out = static_outputs(30000.0, r0, r3)
    mdot = FREE.rho0 * FREE.u0 * math.pi * r0**2
    Pt2 = 0.70 * FREE.Pt0
    Tt2 = FREE.Tt0
    T2 = Tt2 / (1 + 0.2 * 0.09)
    # port Mach from the mass-flow function, by fixed-point on the area ratio
    A3 = math.pi * r3**2
    target = mdot * math.sqrt(Tt2) / (A3 * Pt2)
    M = 0.1
    for _ in range(200):
        M = target / (math.sqrt(1.4 / 287.053) * (1 + 0.2 * M * M) ** -3.0)
    T3 = Tt2 / (1 + 0.2 * M * M)
    P3 = Pt2 / (1 + 0.2 * M * M) ** 3.5
    rho3, u3 = P3 / (287.053 * T3), M * math.sqrt(1.4 * 287.053 * T3)
    G = mdot / A3
    rdot = PARAMS.alpha * G**0.6 * Pt2**0.4 * Tt2**0.5
    mdot_f = 2 * math.pi * r3 * 0.5 * 900.0 * rdot
    phi = mdot_f / mdot / F_STOICH
    Pt4 = Pt2 - 0.02 / 4 * (0.5 / (2 * r3)) * 0.5 * rho3 * u3**2
    eq = hp_combustion(phi, T2, Pt4)
    T4 = 0.75 * (eq.temperature - T2) + T2
    g = eq.gamma
    Tt4 = T4 * (1 + (g - 1) / 2 * 0.09)
    ue = 0.95 * math.sqrt(2 * g * eq.R * Tt4 / (g - 1) * (1 - (FREE.P0 / Pt4) ** ((g - 1) / g)))
    F = mdot * (1 + mdot_f / mdot) * ue - mdot * FREE.u0
    assert out.rdot == pytest.approx(rdot, rel=1e-12)
    assert out.phi_G == pytest.approx(phi, rel=1e-12)
    assert out.Pt4 == pytest.approx(Pt4, rel=1e-12)
    assert out.thrust == pytest.approx(F, rel=1e-10)
    # golden value from the first verified run
    assert out.thrust == pytest.approx(107.81644221187327, rel=1e-9)
    assert 100.0 <= out.thrust <= 1000.0


def test_plant_step_advances_radius():
    plant = Plant()
    s0 = plant.initial_state()
    out1, s1 = plant.step(s0, 53.58e-3, FREE)
    out2, s2 = plant.step(s1, 53.58e-3, FREE)
    assert s0.r3 < s1.r3 < s2.r3
    assert s1.r3 - s0.r3 == pytest.approx(out1.rdot * 0.01, rel=1e-14)
    assert s1.P4_lag == out1.P4


def test_small_dt_limit():
    s0 = Plant().initial_state()
    a, s_small = plant_step(s0, 53.58e-3, FREE, 1e-9)
    b, _ = plant_step(s_small, 53.58e-3, FREE, 1e-9)
    assert s_small.r3 - s0.r3 < 1e-12
    assert b.thrust == pytest.approx(a.thrust, rel=1e-3)


def test_static_matches_first_step():
    cfg = PlantConfig()
    out, _ = Plant(cfg).step(PlantState(r3=61e-3), 55e-3, FREE)
    assert static_outputs(30000.0, 55e-3, 61e-3, cfg) == out


def test_burnout_terminates():
    plant = Plant(PlantConfig(dt=2.0))
    s = plant.initial_state()
    steps = 0
    while not s.burned_out:
        out, s = plant.step(s, 53.58e-3, FREE)
        steps += 1
        assert steps < 1000
    assert s.r3 <= 68.6e-3 + out.rdot * 2.0
    with pytest.raises(BurnoutError):
        plant.step(s, 53.58e-3, FREE)


def test_dt_must_be_positive():
    with pytest.raises(DomainError):
        Plant().step(Plant().initial_state(), 53.58e-3, FREE, 0.0)


def test_config_switches():
    base = static_outputs(30000.0, 53.58e-3, 62e-3)
    station = static_outputs(30000.0, 53.58e-3, 62e-3, PlantConfig(mass_flux_area="station2"))
    assert station.rdot > base.rdot  # smaller area, larger flux
    energy = static_outputs(30000.0, 53.58e-3, 62e-3, PlantConfig(nozzle_efficiency_on="energy"))
    assert energy.u_e > base.u_e
    iso = static_outputs(30000.0, 53.58e-3, 62e-3, PlantConfig(aft_pressure="isentropic"))
    assert iso.P4 < iso.Pt4
    with pytest.raises(ValueError):
        PlantConfig(aft_pressure="guess")


@settings(max_examples=25, deadline=None)
@given(st.floats(10000.0, 40000.0), st.floats(47.88e-3, 59.28e-3), st.floats(59.2e-3, 68.5e-3))
def test_output_invariants(H, r0, r3):
    out = static_outputs(H, r0, r3)
    assert out.Pt4 > 0 and out.phi_G >= 0 and 0 <= out.X_CO < 1 and out.mdot_f >= 0
    assert out.T4 <= out.T4_eq
    free = freestream_totals(3.25, H)
    assert out.Pt4 <= 0.70 * free.Pt0 + 1e-9  # never above the peak inlet recovery
