"""Parametric variable-cowl inlet/isolator model.

Isolator-exit quantities are expressed relative to the freestream so the
same fit applies at any altitude: captured mass flow scales with
rho0*u0*pi*r0^2, total pressure with Pt0, and total temperature is
conserved. Recovery and exit Mach are quadratics in the normalized
capture radius s = (r0 - r0_min) / (r0_max - r0_min).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .atmosphere import GAMMA_AIR, R_AIR, FreestreamConditions, total_pressure_ratio, total_temperature_ratio

R0_MIN = 47.88e-3
R0_MAX = 59.28e-3
R0_NOMINAL = 53.58e-3
R2 = 46.7e-3


class InletSaturationError(ValueError):
    """Capture radius outside the cowl travel range."""


@dataclass(frozen=True)
class InletModel:
    r0_min: float = R0_MIN
    r0_max: float = R0_MAX
    # 0.55 at r0_min, 0.70 at the nominal radius (s = 0.5), 0.60 at r0_max
    recovery_coeffs: tuple[float, float, float] = (0.55, 0.55, -0.5)
    mach2_coeffs: tuple[float, float, float] = (0.30, 0.0, 0.0)
    spillage_factor: float = 1.0

    def __post_init__(self):
        if not self.r0_min < self.r0_max:
            raise ValueError("need r0_min < r0_max")
        if not 0.0 < self.spillage_factor <= 1.0:
            raise ValueError("spillage_factor must lie in (0, 1]")
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            if not 0.0 < _quad(self.recovery_coeffs, s) <= 1.0:
                raise ValueError("recovery must stay in (0, 1] over the cowl range")
            if not 0.05 < _quad(self.mach2_coeffs, s) < 0.9:
                raise ValueError("isolator exit Mach must stay in (0.05, 0.9)")

    def normalized(self, r0: float) -> float:
        return (r0 - self.r0_min) / (self.r0_max - self.r0_min)

    def recovery(self, r0: float) -> float:
        return _quad(self.recovery_coeffs, self.normalized(r0))

    def mach2(self, r0: float) -> float:
        return _quad(self.mach2_coeffs, self.normalized(r0))

    def clamp(self, r0: float) -> float:
        return min(max(r0, self.r0_min), self.r0_max)


def _quad(c, s):
    return c[0] + s * (c[1] + s * c[2])


@dataclass(frozen=True)
class StationConditions:
    mdot: float  # kg/s
    Pt: float  # Pa
    Tt: float  # K
    mach: float
    T: float  # K, static
    P: float  # Pa, static
    area: float  # m^2


def isolator_exit(model: InletModel, free: FreestreamConditions, r0: float,
                  A2: float = math.pi * R2**2) -> StationConditions:
    if not (model.r0_min <= r0 <= model.r0_max):
        raise InletSaturationError(
            f"r0={r0 * 1e3:.4f} mm outside [{model.r0_min * 1e3}, {model.r0_max * 1e3}] mm"
        )
    mdot = model.spillage_factor * free.rho0 * free.u0 * math.pi * r0 * r0
    Pt2 = model.recovery(r0) * free.Pt0
    M2 = model.mach2(r0)
    Tt2 = free.Tt0
    return StationConditions(
        mdot=mdot,
        Pt=Pt2,
        Tt=Tt2,
        mach=M2,
        T=Tt2 / total_temperature_ratio(M2),
        P=Pt2 / total_pressure_ratio(M2),
        area=A2,
    )


def mass_flow_parameter(mach: float, gamma: float = GAMMA_AIR, R: float = R_AIR) -> float:
    """mdot*sqrt(Tt)/(A*Pt) for isentropic flow at ``mach``."""
    k = (gamma + 1.0) / (2.0 * (gamma - 1.0))
    return math.sqrt(gamma / R) * mach * total_temperature_ratio(mach, gamma) ** -k


def port_flow(mdot: float, Pt: float, Tt: float, area: float) -> tuple[float, float, float]:
    """(rho, u, M) of air carrying ``mdot`` through ``area`` at the given totals.

    Subsonic branch of the mass-flow function, solved by bisection.
    """
    target = mdot * math.sqrt(Tt) / (area * Pt)
    if target >= mass_flow_parameter(1.0):
        raise ValueError("mass flow exceeds the choked limit for this area")
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mass_flow_parameter(mid) < target:
            lo = mid
        else:
            hi = mid
    M = 0.5 * (lo + hi)
    T = Tt / total_temperature_ratio(M)
    P = Pt / total_pressure_ratio(M)
    return P / (R_AIR * T), M * math.sqrt(GAMMA_AIR * R_AIR * T), M
