"""Constant-pressure chemical equilibrium by Gibbs free-energy minimization.

Fixed-(T, P) problems are solved with the element-potential method: one
Lagrange multiplier per element plus the log of total moles, iterated by
damped Newton until element balances close. Fixed-(H, P) problems wrap a
bracketed one-dimensional root solve on temperature around the TP solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import _kernels
from .thermo import P_REF, R_UNIVERSAL, MixtureState, SpeciesTable, default_species, mass_enthalpy

FUEL = "C4H6"
AIR = {"O2": 0.21, "N2": 0.79}
PRODUCT_SPECIES = ("C4H6", "O2", "N2", "CO2", "CO", "H2O", "H2", "OH", "H", "O", "NO")

MAX_ITER = 200
TOLERANCE = 1e-10
TRACE_FLOOR = 1e-30
_TRACE_SEED = 1e-8


class EquilibriumError(RuntimeError):
    """Solver failed to converge; ``residual`` holds the last residual norm."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EquilibriumRangeError(ValueError):
    """No temperature in the fit range reproduces the target enthalpy."""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class EquilibriumProblem:
    reactant_moles: Mapping[str, float]
    pressure: float
    temperature: float | None = None
    h_target: float | None = None  # J per kg of reactant mixture

    def __post_init__(self):
        if self.pressure <= 0:
            raise ValueError("pressure must be positive")
        if not any(n > 0 for n in self.reactant_moles.values()):
            raise ValueError("need at least one reactant with positive moles")
        if any(n < 0 for n in self.reactant_moles.values()):
            raise ValueError("reactant moles must be nonnegative")
        if (self.temperature is None) == (self.h_target is None):
            raise ValueError("specify exactly one of temperature (TP) or h_target (HP)")

    @classmethod
    def fixed_T(cls, reactant_moles, pressure, temperature):
        return cls(dict(reactant_moles), pressure, temperature=temperature)

    @classmethod
    def fixed_H(cls, reactant_moles, pressure, h_target):
        return cls(dict(reactant_moles), pressure, h_target=h_target)

    @property
    def mode(self) -> str:
        return "fixed_T" if self.temperature is not None else "fixed_H"


@dataclass
class EquilibriumResult:
    temperature: float
    composition: MixtureState
    gamma: float
    R: float  # J/(kg K)
    iterations: int
    converged: bool
    h: float = 0.0  # J/kg
    cp: float = 0.0  # J/(kg K), frozen
    moles: dict[str, float] = field(default_factory=dict)
    element_error: float = 0.0

    def X(self, name: str) -> float:
        return self.composition.mole_fractions.get(name, 0.0)


def element_moles(moles: Mapping[str, float], species=None) -> dict[str, float]:
    db = default_species() if species is None else species
    out: dict[str, float] = {}
    for name, n in moles.items():
        for el, count in db[name].elements.items():
            out[el] = out.get(el, 0.0) + n * count
    return out


@lru_cache(maxsize=32)
def _table(names: tuple[str, ...]) -> SpeciesTable:
    return SpeciesTable(names)


def _active_table(reactants: Mapping[str, float], species: tuple[str, ...]):
    b = {el: v for el, v in element_moles(reactants).items() if v > 0}
    db = default_species()
    names = tuple(n for n in species if set(db[n].elements) <= set(b))
    missing = set(b) - {el for n in names for el in db[n].elements}
    if missing:
        raise ValueError(f"no product species carries element(s) {sorted(missing)}")
    table = _table(names)
    return table, np.array([b[el] for el in table.elements])


def complete_combustion(b: Mapping[str, float], unburnt_fuel=False) -> dict[str, float]:
    """Deterministic major-product composition used as the starting point.

    Rich mixtures go to CO/H2 by default; with ``unburnt_fuel`` the
    oxygen completes CO2/H2O and the surplus stays as fuel, which is the
    better start at low temperature.
    """
    C, H, O, N = (b.get(el, 0.0) for el in ("C", "H", "O", "N"))
    out = {}
    if N:
        out["N2"] = N / 2
    if unburnt_fuel and O < 2 * C + H / 2 and C > 0:
        # fuel + O2 -> CO2 + H2O until oxygen runs out
        burnt = O / (2 * C + H / 2)
        out.update({"CO2": burnt * C, "H2O": burnt * H / 2, "C4H6": (1 - burnt) * C / 4})
        h_left = (1 - burnt) * (H - 1.5 * C)
        if h_left > 0:
            out["H2"] = h_left / 2
        return out
    o_left = O
    co = min(C, o_left)
    o_left -= co
    h2o = min(H / 2, o_left)
    o_left -= h2o
    co2 = min(co, o_left)
    co -= co2
    o_left -= co2
    h2 = H / 2 - h2o
    c_left = C - co - co2
    if c_left > 0:
        # oxygen-starved: park leftover carbon as fuel
        fuel = c_left / 4
        out["C4H6"] = fuel
        h2 = max(h2 - 3 * fuel, 0.0)
    eps = 1e-9 * (C + H + O + N)
    for name, n in (("CO2", co2), ("CO", co), ("H2O", h2o), ("H2", h2), ("O2", o_left / 2)):
        if n > eps:
            out[name] = n
    return out


def _guess(table: SpeciesTable, b: np.ndarray, unburnt_fuel=False):
    """Starting composition (mole fractions, LS weights, moles)."""
    guess = complete_combustion(dict(zip(table.elements, b)), unburnt_fuel)
    n = np.array([guess.get(name, 0.0) for name in table.names])
    major = n > 0
    x = np.where(major, n / n.sum(), _TRACE_SEED)
    # Trace seeds pin element-potential directions the majors leave free.
    # A polyatomic fuel seed would dominate that fit, so it gets no say.
    small = np.array([sum(sp.elements.values()) <= 3 for sp in table.species])
    weight = np.where(major, 1.0, np.where(small, 1e-4, 1e-12))
    return x, weight, n


def _check_range(table: SpeciesTable, T: float):
    if not (table.T_min <= T <= table.T_max):
        raise EquilibriumRangeError(
            f"T={T} K outside thermo fit range [{table.T_min}, {table.T_max}]",
            (table.T_min, table.T_max),
        )


def _result(table, b, T, lnP, lam, lnN, iterations):
    x = _kernels.composition_at(table.A, table.low, table.high, table.T_common, T, lnP, lam)
    x = x / x.sum()
    N = math.exp(lnN)
    n = N * x
    err = float(np.max(np.abs(table.A @ n - b) / b))
    cp_r = np.empty(len(x))
    _kernels.nasa7_cp(table.low, table.high, table.T_common, T, cp_r)
    g, h_rt = _kernels.gibbs_rt(table.low, table.high, table.T_common, T)
    mw = float(x @ table.molar_mass)
    R = R_UNIVERSAL / mw
    cp = float(x @ cp_r) * R
    h = float(x @ h_rt) * R * T
    fractions = {name: float(v) for name, v in zip(table.names, x)}
    return EquilibriumResult(
        temperature=float(T),
        composition=MixtureState(float(T), 0.0, fractions),
        gamma=cp / (cp - R),
        R=R,
        iterations=int(iterations),
        converged=True,
        h=h,
        cp=cp,
        moles={name: float(v) for name, v in zip(table.names, n)},
        element_error=err,
    )


def equilibrate_tp(problem: EquilibriumProblem, species=PRODUCT_SPECIES,
                   max_iter=MAX_ITER, tol=TOLERANCE) -> EquilibriumResult:
    if problem.temperature is None:
        raise ValueError("equilibrate_tp needs a fixed-T problem")
    table, b = _active_table(problem.reactant_moles, tuple(species))
    T = float(problem.temperature)
    _check_range(table, T)
    lnP = math.log(problem.pressure / P_REF)
    g, _ = _kernels.gibbs_rt(table.low, table.high, table.T_common, T)
    it = 0
    for unburnt in (False, True):
        x_guess, weight, n_guess = _guess(table, b, unburnt)
        lam = _kernels.initial_potentials(table.A, g, lnP, x_guess, weight)
        lnN, n_it, status, res, _ = _kernels.tp_at(
            table.A, b, table.low, table.high, table.T_common, table.molar_mass,
            T, lnP, lam, math.log(n_guess.sum()), max_iter, tol,
        )
        it += n_it
        if status == 0:
            break
    if status != 0:
        raise EquilibriumError(
            f"TP equilibrium did not converge at T={T} K (status {status}, residual {res:.3e})",
            residual=res, iterations=it,
        )
    out = _result(table, b, T, lnP, lam, lnN, it)
    out.composition.pressure = problem.pressure
    return out


def equilibrate_hp(problem: EquilibriumProblem, species=PRODUCT_SPECIES,
                   max_iter=MAX_ITER, tol=TOLERANCE) -> EquilibriumResult:
    if problem.h_target is None:
        raise ValueError("equilibrate_hp needs a fixed-H problem")
    table, b = _active_table(problem.reactant_moles, tuple(species))
    lnP = math.log(problem.pressure / P_REF)
    h_target = float(problem.h_target)
    x_guess, weight, n_guess = _guess(table, b)
    h_tol = 1e-10 * max(abs(h_target), 1e4)
    T, lam, lnN, it, status, res, h, lo, hi = _kernels.solve_hp(
        table.A, b, table.low, table.high, table.T_common, table.molar_mass,
        h_target, lnP, x_guess, weight, n_guess, table.T_min, table.T_max,
        max_iter, tol, h_tol,
    )
    if status == 3:
        raise EquilibriumRangeError(
            f"target enthalpy {h_target:.6g} J/kg not bracketed in [{lo}, {hi}] K", (lo, hi)
        )
    if status != 0:
        raise EquilibriumError(
            f"HP equilibrium failed near T={T:.3f} K (status {status}, residual {res:.3e})",
            residual=res, iterations=it,
        )
    out = _result(table, b, T, lnP, lam, lnN, it)
    out.composition.pressure = problem.pressure
    return out


def equilibrate(problem: EquilibriumProblem, **kw) -> EquilibriumResult:
    if problem.mode == "fixed_T":
        return equilibrate_tp(problem, **kw)
    return equilibrate_hp(problem, **kw)


def stoichiometric_fuel_air_ratio(fuel=FUEL, air=AIR) -> float:
    """Fuel-to-air mass ratio for complete oxidation to CO2 and H2O."""
    db = default_species()
    el = db[fuel].elements
    o2_per_fuel = el.get("C", 0) + el.get("H", 0) / 4 - el.get("O", 0) / 2
    air_moles = o2_per_fuel / air["O2"]
    air_mass = air_moles * sum(x * db[n].molar_mass for n, x in air.items())
    return db[fuel].molar_mass / air_mass


def fuel_air_reactants(phi: float, fuel=FUEL, air=AIR) -> dict[str, float]:
    """Reactant moles per mole of air at equivalence ratio ``phi``."""
    if phi < 0:
        raise ValueError("equivalence ratio must be nonnegative")
    db = default_species()
    el = db[fuel].elements
    o2_per_fuel = el.get("C", 0) + el.get("H", 0) / 4 - el.get("O", 0) / 2
    moles = dict(air)
    if phi > 0:
        moles[fuel] = phi * air["O2"] / o2_per_fuel
    return moles


def hp_combustion(phi: float, T_reactants: float, pressure: float, **kw) -> EquilibriumResult:
    """Adiabatic constant-pressure combustion of fuel/air at ``phi``."""
    moles = fuel_air_reactants(phi)
    h = mass_enthalpy(moles, T_reactants)
    return equilibrate_hp(EquilibriumProblem.fixed_H(moles, pressure, h), **kw)
