"""Ideal-gas species and mixture properties from two-range NASA-7 fits.

Species data live in ``data/nasa7.dat`` (format documented in that file's
header) and are parsed once on first use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

R_UNIVERSAL = 8.31446261815324  # J/(mol K)
P_REF = 101325.0  # Pa, standard-state pressure of the fits
T_REF = 298.15  # K


class ThermoRangeError(ValueError):
    """Temperature outside a species' fitted range."""


@dataclass(frozen=True)
class SpeciesThermo:
    name: str
    molar_mass: float  # kg/mol
    elements: dict[str, int]
    low: tuple[float, ...]
    high: tuple[float, ...]
    T_common: float
    T_min: float
    T_max: float

    def __post_init__(self):
        if not (self.T_min < self.T_common < self.T_max):
            raise ValueError(f"{self.name}: need T_min < T_common < T_max")
        if len(self.low) != 7 or len(self.high) != 7:
            raise ValueError(f"{self.name}: NASA-7 fits need 7 coefficients per range")

    def coeffs(self, T: float) -> tuple[float, ...]:
        return self.low if T <= self.T_common else self.high


@dataclass
class MixtureState:
    temperature: float
    pressure: float
    mole_fractions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(x < 0.0 for x in self.mole_fractions.values()):
            raise ValueError("mole fractions must be nonnegative")
        total = sum(self.mole_fractions.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mole fractions sum to {total!r}, expected 1")


def parse_species_file(text: str) -> dict[str, SpeciesThermo]:
    species: dict[str, SpeciesThermo] = {}
    header = None
    low = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "SPECIES":
            if len(rest) != 6:
                raise ValueError(f"line {lineno}: malformed SPECIES record")
            name, mw, elem, tmin, tcom, tmax = rest
            elements = {}
            for pair in elem.split(","):
                el, count = pair.split(":")
                elements[el] = int(count)
            header = (name, float(mw), elements, float(tmin), float(tcom), float(tmax))
            low = None
        elif tag == "LOW":
            if header is None:
                raise ValueError(f"line {lineno}: LOW before SPECIES")
            low = tuple(float(v) for v in rest)
        elif tag == "HIGH":
            if header is None or low is None:
                raise ValueError(f"line {lineno}: HIGH before SPECIES/LOW")
            name, mw, elements, tmin, tcom, tmax = header
            species[name] = SpeciesThermo(
                name=name,
                molar_mass=mw,
                elements=elements,
                low=low,
                high=tuple(float(v) for v in rest),
                T_common=tcom,
                T_min=tmin,
                T_max=tmax,
            )
            header = low = None
        else:
            raise ValueError(f"line {lineno}: unknown record tag {tag!r}")
    if header is not None:
        raise ValueError("truncated species record at end of file")
    return species


def load_species(path: str | Path | None = None) -> dict[str, SpeciesThermo]:
    if path is None:
        return dict(default_species())
    return parse_species_file(Path(path).read_text())


@lru_cache(maxsize=1)
def default_species() -> dict[str, SpeciesThermo]:
    text = resources.files("sfrj").joinpath("data/nasa7.dat").read_text()
    return parse_species_file(text)


def get_species(name: str) -> SpeciesThermo:
    try:
        return default_species()[name]
    except KeyError:
        raise KeyError(f"unknown species {name!r}") from None


def species_cp_h_s(species: SpeciesThermo, T: float) -> tuple[float, float, float]:
    """Molar cp [J/(mol K)], h [J/mol] and standard-state s [J/(mol K)].

    ``h`` includes the enthalpy of formation. No extrapolation outside
    the fitted range.
    """
    if not (species.T_min <= T <= species.T_max):
        raise ThermoRangeError(
            f"{species.name}: T={T} K outside fit range [{species.T_min}, {species.T_max}]"
        )
    a1, a2, a3, a4, a5, a6, a7 = species.coeffs(T)
    cp = a1 + T * (a2 + T * (a3 + T * (a4 + T * a5)))
    h = a1 + T * (a2 / 2 + T * (a3 / 3 + T * (a4 / 4 + T * a5 / 5))) + a6 / T
    s = a1 * math.log(T) + T * (a2 + T * (a3 / 2 + T * (a4 / 3 + T * a5 / 4))) + a7
    return cp * R_UNIVERSAL, h * R_UNIVERSAL * T, s * R_UNIVERSAL


def mixture_properties(state: MixtureState, species=None) -> tuple[float, float, float, float]:
    """Mass-basis (h [J/kg], cp [J/(kg K)], gamma, R [J/(kg K)]) of an ideal-gas mixture."""
    db = default_species() if species is None else species
    T = state.temperature
    cp_mol = h_mol = mw = 0.0
    for name, x in state.mole_fractions.items():
        try:
            sp = db[name]
        except KeyError:
            raise KeyError(f"unknown species {name!r}") from None
        if x == 0.0:
            continue
        cp_i, h_i, _ = species_cp_h_s(sp, T)
        cp_mol += x * cp_i
        h_mol += x * h_i
        mw += x * sp.molar_mass
    R = R_UNIVERSAL / mw
    cp = cp_mol / mw
    return h_mol / mw, cp, cp / (cp - R), R


def mass_enthalpy(moles: dict[str, float], T: float, species=None) -> float:
    """Enthalpy per unit mass [J/kg] of a set of species amounts at T."""
    db = default_species() if species is None else species
    H = m = 0.0
    for name, n in moles.items():
        sp = db[name]
        H += n * species_cp_h_s(sp, T)[1]
        m += n * sp.molar_mass
    return H / m


class SpeciesTable:
    """Array view of a species set, used by the equilibrium kernels."""

    def __init__(self, names, species=None):
        db = default_species() if species is None else species
        self.names = tuple(names)
        self.species = [db[n] for n in self.names]
        self.elements = tuple(sorted({el for sp in self.species for el in sp.elements}))
        self.A = np.array(
            [[sp.elements.get(el, 0) for sp in self.species] for el in self.elements],
            dtype=float,
        )
        self.molar_mass = np.array([sp.molar_mass for sp in self.species])
        self.low = np.array([sp.low for sp in self.species])
        self.high = np.array([sp.high for sp in self.species])
        self.T_common = np.array([sp.T_common for sp in self.species])
        self.T_min = max(sp.T_min for sp in self.species)
        self.T_max = min(sp.T_max for sp in self.species)

    def index(self, name: str) -> int:
        return self.names.index(name)
