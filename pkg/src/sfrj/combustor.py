"""Quasi-one-dimensional SFRJ combustor, nozzle and thrust chain.

Feed-forward per time step: inlet -> port mass flux -> fuel regression ->
global equivalence ratio -> HP equilibrium at the aft mixing end ->
combustion-efficiency temperature -> isentropic nozzle -> thrust. The
aft-end pressure used by the regression law lags one step behind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .atmosphere import FreestreamConditions, total_pressure_ratio, total_temperature_ratio
from .equilibrium import EquilibriumResult, hp_combustion, stoichiometric_fuel_air_ratio
from .inlet import R2, InletModel, StationConditions, isolator_exit, port_flow

F_STOICH = stoichiometric_fuel_air_ratio()


class DomainError(ValueError):
    pass


class NoExpansionError(ValueError):
    """Aft-end total pressure does not exceed ambient; nozzle cannot expand."""


class BurnoutError(RuntimeError):
    """Fuel port radius has reached its maximum."""


@dataclass(frozen=True)
class RegressionParams:
    # rdot [m/s] = alpha * G^a * P4^b * Tt2^c in SI units
    alpha: float = 5.0e-9
    a: float = 0.6
    b: float = 0.4
    c: float = 0.5

    def __post_init__(self):
        if self.alpha < 0 or self.a < 0 or self.c < 0:
            raise ValueError("regression needs alpha, a, c >= 0")


@dataclass(frozen=True)
class FuelGrain:
    rho_f: float = 900.0
    L_f: float = 0.5
    r3: float = 59.2e-3
    r3_max: float = 68.6e-3
    regression: RegressionParams = field(default_factory=RegressionParams)

    def __post_init__(self):
        if self.rho_f <= 0 or self.L_f <= 0:
            raise ValueError("grain density and length must be positive")
        if not 0 < self.r3 <= self.r3_max:
            raise ValueError("need 0 < r3 <= r3_max")


@dataclass(frozen=True)
class PortState:
    rho3: float
    u3: float
    G: float


@dataclass(frozen=True)
class CombustorOutputs:
    thrust: float  # N
    Pt4: float  # Pa
    T4: float  # K
    X_CO: float
    phi_G: float
    mdot_f: float  # kg/s
    rdot: float  # m/s
    u_e: float  # m/s
    mdot_air: float = 0.0
    T4_eq: float = 0.0
    Tt4: float = 0.0
    P4: float = 0.0
    gamma4: float = 0.0
    R4: float = 0.0
    r3: float = 0.0


@dataclass(frozen=True)
class PlantState:
    r3: float
    P4_lag: float | None = None  # Pa; None -> initialize from Pt2
    r3_max: float = 68.6e-3

    @property
    def burned_out(self) -> bool:
        return self.r3 >= self.r3_max


@dataclass(frozen=True)
class PlantConfig:
    mach: float = 3.25
    altitude: float = 30000.0
    inlet: InletModel = field(default_factory=InletModel)
    grain: FuelGrain = field(default_factory=FuelGrain)
    r2: float = R2
    r_t: float = 50.4e-3  # nozzle throat, geometry metadata only
    f_D: float = 0.02
    eta_c: float = 0.75
    eta_n: float = 0.95
    nozzle_efficiency_on: str = "velocity"  # or "energy"
    aft_pressure: str = "total"  # P4 = Pt4, or "isentropic" from M4 = M2
    mass_flux_area: str = "port"  # G over pi*r3^2, or "station2"
    dt: float = 0.01

    def __post_init__(self):
        if self.nozzle_efficiency_on not in ("velocity", "energy"):
            raise ValueError("nozzle_efficiency_on must be 'velocity' or 'energy'")
        if self.aft_pressure not in ("total", "isentropic"):
            raise ValueError("aft_pressure must be 'total' or 'isentropic'")
        if self.mass_flux_area not in ("port", "station2"):
            raise ValueError("mass_flux_area must be 'port' or 'station2'")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def A2(self) -> float:
        return math.pi * self.r2**2


def regression_rate(G: float, P4: float, Tt2: float, params: RegressionParams) -> float:
    if G <= 0 or P4 <= 0 or Tt2 <= 0:
        raise DomainError(f"regression inputs must be positive (G={G}, P4={P4}, Tt2={Tt2})")
    return params.alpha * G**params.a * P4**params.b * Tt2**params.c


def friction_total_pressure_loss(port: PortState, L_f: float, d: float, f_D: float) -> float:
    if L_f <= 0 or d <= 0 or f_D < 0:
        raise DomainError("friction loss needs L_f, d > 0 and f_D >= 0")
    return f_D / 4.0 * (L_f / d) * (0.5 * port.rho3 * port.u3**2)


def fuel_mass_flow(grain: FuelGrain, rdot: float) -> float:
    if rdot < 0:
        raise DomainError("regression rate must be nonnegative")
    return 2.0 * math.pi * grain.r3 * grain.L_f * grain.rho_f * rdot


def equivalence_ratio(mdot_f: float, mdot_air: float, f_stoich: float = F_STOICH) -> float:
    if mdot_air <= 0:
        raise DomainError("air mass flow must be positive")
    return mdot_f / mdot_air / f_stoich


def aft_temperature(T4_eq: float, T2: float, eta_c: float) -> float:
    return eta_c * (T4_eq - T2) + T2


def ideal_exhaust_velocity(Tt4: float, Pt4: float, P0: float, gamma4: float, R4: float) -> float:
    if gamma4 <= 1.0:
        raise DomainError("gamma4 must exceed 1")
    if Pt4 <= P0:
        raise NoExpansionError(f"Pt4={Pt4:.1f} Pa does not exceed ambient {P0:.1f} Pa")
    k = (gamma4 - 1.0) / gamma4
    return math.sqrt(2.0 * gamma4 * R4 * Tt4 / (gamma4 - 1.0) * (1.0 - (P0 / Pt4) ** k))


def exhaust_velocity(Tt4: float, Pt4: float, P0: float, gamma4: float, R4: float,
                     eta_n: float, on: str = "velocity") -> float:
    """Actual exhaust velocity; ``on='energy'`` applies eta_n to kinetic energy."""
    u_th = ideal_exhaust_velocity(Tt4, Pt4, P0, gamma4, R4)
    return (eta_n if on == "velocity" else math.sqrt(eta_n)) * u_th


def thrust(mdot_air: float, f: float, u_e: float, u0: float) -> float:
    if mdot_air <= 0:
        raise DomainError("air mass flow must be positive")
    return mdot_air * (1.0 + f) * u_e - mdot_air * u0


def port_state(st2: StationConditions, r3: float, mass_flux_area: str = "port") -> PortState:
    A3 = math.pi * r3 * r3
    rho3, u3, _ = port_flow(st2.mdot, st2.Pt, st2.Tt, A3)
    G = st2.mdot / (A3 if mass_flux_area == "port" else st2.area)
    return PortState(rho3=rho3, u3=u3, G=G)


class Plant:
    """SFRJ plant for one configuration; ``step`` is a pure state transition."""

    def __init__(self, config: PlantConfig | None = None):
        self.config = config or PlantConfig()

    def initial_state(self, r3: float | None = None) -> PlantState:
        g = self.config.grain
        return PlantState(r3=g.r3 if r3 is None else r3, r3_max=g.r3_max)

    def evaluate(self, state: PlantState, r0: float, free: FreestreamConditions):
        """Outputs at ``state`` plus the aft pressure fed to the next step."""
        cfg = self.config
        if state.r3 >= state.r3_max:
            raise BurnoutError(f"port radius {state.r3 * 1e3:.4f} mm at or beyond r3_max")
        grain = replace(cfg.grain, r3=state.r3)
        st2 = isolator_exit(cfg.inlet, free, r0, cfg.A2)
        port = port_state(st2, state.r3, cfg.mass_flux_area)
        P4_reg = st2.Pt if state.P4_lag is None else state.P4_lag
        rdot = regression_rate(port.G, P4_reg, st2.Tt, grain.regression)
        mdot_f = fuel_mass_flow(grain, rdot)
        phi = equivalence_ratio(mdot_f, st2.mdot)
        dPt = friction_total_pressure_loss(port, grain.L_f, 2.0 * state.r3, cfg.f_D)
        Pt4 = st2.Pt - dPt
        M4 = st2.mach
        if cfg.aft_pressure == "total":
            P4 = Pt4
        else:
            P4 = Pt4 / total_pressure_ratio(M4)
        eq: EquilibriumResult = hp_combustion(phi, st2.T, P4)
        T4 = aft_temperature(eq.temperature, st2.T, cfg.eta_c)
        Tt4 = T4 * total_temperature_ratio(M4, eq.gamma)
        u_e = exhaust_velocity(Tt4, Pt4, free.P0, eq.gamma, eq.R, cfg.eta_n,
                               cfg.nozzle_efficiency_on)
        f = mdot_f / st2.mdot
        out = CombustorOutputs(
            thrust=thrust(st2.mdot, f, u_e, free.u0),
            Pt4=Pt4,
            T4=T4,
            X_CO=eq.X("CO"),
            phi_G=phi,
            mdot_f=mdot_f,
            rdot=rdot,
            u_e=u_e,
            mdot_air=st2.mdot,
            T4_eq=eq.temperature,
            Tt4=Tt4,
            P4=P4,
            gamma4=eq.gamma,
            R4=eq.R,
            r3=state.r3,
        )
        return out, P4

    def step(self, state: PlantState, r0: float, free: FreestreamConditions,
             dt: float | None = None) -> tuple[CombustorOutputs, PlantState]:
        dt = self.config.dt if dt is None else dt
        if dt <= 0:
            raise DomainError("dt must be positive")
        out, P4 = self.evaluate(state, r0, free)
        # port grows as fuel burns away
        new = PlantState(r3=state.r3 + out.rdot * dt, P4_lag=P4, r3_max=state.r3_max)
        return out, new


def plant_step(state: PlantState, r0: float, free: FreestreamConditions, dt: float,
               config: PlantConfig | None = None) -> tuple[CombustorOutputs, PlantState]:
    return Plant(config).step(state, r0, free, dt)


def static_outputs(altitude: float, r0: float, r3: float,
                   config: PlantConfig | None = None) -> CombustorOutputs:
    """Dataset-mode evaluation: lagged aft pressure initialized from Pt2."""
    from .atmosphere import freestream_totals

    cfg = config or PlantConfig()
    plant = Plant(cfg)
    free = freestream_totals(cfg.mach, altitude)
    out, _ = plant.evaluate(PlantState(r3=r3, r3_max=cfg.grain.r3_max), r0, free)
    return out
