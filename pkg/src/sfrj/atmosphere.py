"""US Standard Atmosphere 1976 (0-47 km geopotential) and freestream totals."""
from __future__ import annotations

import math
from dataclasses import dataclass

GAMMA_AIR = 1.4
R_AIR = 287.053  # J/(kg K)
G0 = 9.80665  # m/s^2
R_EARTH = 6356766.0  # m, US-76 effective radius for geopotential altitude
ALT_MAX = 47000.0

# base geopotential height [m], base temperature [K], lapse rate [K/m]
_LAYERS = (
    (0.0, 288.15, -0.0065),
    (11000.0, 216.65, 0.0),
    (20000.0, 216.65, 0.001),
    (32000.0, 228.65, 0.0028),
    (47000.0, 270.65, 0.0),
)


def _base_pressures():
    p = [101325.0]
    for (h0, T0, L), (h1, _, _) in zip(_LAYERS, _LAYERS[1:]):
        if L == 0.0:
            p.append(p[-1] * math.exp(-G0 * (h1 - h0) / (R_AIR * T0)))
        else:
            p.append(p[-1] * (T0 / (T0 + L * (h1 - h0))) ** (G0 / (R_AIR * L)))
    return tuple(p)


_P_BASE = _base_pressures()


class AltitudeRangeError(ValueError):
    pass


def standard_atmosphere(altitude: float) -> tuple[float, float, float]:
    """Static (T [K], P [Pa], rho [kg/m^3]) at geometric ``altitude`` [m]."""
    if not (0.0 <= altitude <= ALT_MAX):
        raise AltitudeRangeError(f"altitude {altitude} m outside [0, {ALT_MAX}] m")
    h = R_EARTH * altitude / (R_EARTH + altitude)
    i = 0
    while i + 1 < len(_LAYERS) - 1 and h >= _LAYERS[i + 1][0]:
        i += 1
    hb, Tb, L = _LAYERS[i]
    Pb = _P_BASE[i]
    if L == 0.0:
        T = Tb
        P = Pb * math.exp(-G0 * (h - hb) / (R_AIR * Tb))
    else:
        T = Tb + L * (h - hb)
        P = Pb * (Tb / T) ** (G0 / (R_AIR * L))
    return T, P, P / (R_AIR * T)


@dataclass(frozen=True)
class FreestreamConditions:
    mach: float
    altitude: float
    T0: float
    P0: float
    Tt0: float
    Pt0: float
    u0: float
    rho0: float


def total_temperature_ratio(mach: float, gamma: float = GAMMA_AIR) -> float:
    return 1.0 + 0.5 * (gamma - 1.0) * mach * mach


def total_pressure_ratio(mach: float, gamma: float = GAMMA_AIR) -> float:
    return total_temperature_ratio(mach, gamma) ** (gamma / (gamma - 1.0))


def freestream_totals(mach: float, altitude: float) -> FreestreamConditions:
    if not (0.0 <= mach <= 6.0):
        raise ValueError(f"mach {mach} outside [0, 6]")
    T0, P0, rho0 = standard_atmosphere(altitude)
    return FreestreamConditions(
        mach=mach,
        altitude=altitude,
        T0=T0,
        P0=P0,
        Tt0=T0 * total_temperature_ratio(mach),
        Pt0=P0 * total_pressure_ratio(mach),
        u0=mach * math.sqrt(GAMMA_AIR * R_AIR * T0),
        rho0=rho0,
    )


def scaled_freestream(free: FreestreamConditions, pressure_factor: float) -> FreestreamConditions:
    """Same Mach and temperature with static pressure (and density) scaled."""
    return FreestreamConditions(
        mach=free.mach,
        altitude=free.altitude,
        T0=free.T0,
        P0=free.P0 * pressure_factor,
        Tt0=free.Tt0,
        Pt0=free.Pt0 * pressure_factor,
        u0=free.u0,
        rho0=free.rho0 * pressure_factor,
    )
