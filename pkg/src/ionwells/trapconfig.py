"""Trap configuration files.

TOML with sections [species], [trap], [scan], [fit]; every physical quantity
carries its SI unit in the key name (separation_m, frequency_hz, ...) so no
unit conventions have to be remembered. The quartic can be given either as
explicit coefficients or as a (separation, frequency) calibration pair.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .constants import ELEMENTARY_CHARGE
from .potential import SPECIES, AxialPotential, IonSpecies, calibrate_symmetric, find_wells


@dataclass(frozen=True)
class TrapSetup:
    """Everything a batch run needs: species, potential, scan defaults."""

    species: IonSpecies
    potential: AxialPotential
    approx_separation: float
    approx_frequency: float
    scan_u_min: float | None
    scan_u_max: float | None
    scan_steps: int
    fit_restarts: int
    fit_seed: int


def species_by_name(name: str) -> IonSpecies:
    try:
        return SPECIES[name]
    except KeyError:
        known = ", ".join(sorted(SPECIES))
        raise ValueError(f"unknown species {name!r}; known: {known}") from None


def load_trap_config(path) -> TrapSetup:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)

    sp = data.get("species", {})
    if "mass_kg" in sp:
        species = IonSpecies(charge=float(sp.get("charge_C", ELEMENTARY_CHARGE)),
                             mass=float(sp["mass_kg"]),
                             label=str(sp.get("name", "custom")))
    elif "name" in sp:
        species = species_by_name(str(sp["name"]))
    else:
        raise ValueError("[species] needs either a name or mass_kg/charge_C")

    trap = data.get("trap")
    if trap is None:
        raise ValueError("config is missing the [trap] section")
    tune1 = float(trap.get("tune1_J_per_m_per_V", 0.0))
    tune2 = float(trap.get("tune2_J_per_m2_per_V", 0.0))
    if "alpha2_J_per_m2" in trap:
        potential = AxialPotential(
            alpha1=float(trap.get("alpha1_J_per_m", 0.0)),
            alpha2=float(trap["alpha2_J_per_m2"]),
            alpha4=float(trap["alpha4_J_per_m4"]),
            tune1=tune1, tune2=tune2)
        wells = find_wells(potential, 0.0, species)
        approx_r = wells.separation_r
        approx_f = 0.5 * (wells.freq_left + wells.freq_right)
    else:
        approx_r = float(trap["separation_m"])
        approx_f = float(trap["frequency_hz"])
        potential = calibrate_symmetric(approx_r, approx_f, species, tune1, tune2)

    scan = data.get("scan", {})
    fit = data.get("fit", {})
    return TrapSetup(
        species=species,
        potential=potential,
        approx_separation=approx_r,
        approx_frequency=approx_f,
        scan_u_min=float(scan["u_min_V"]) if "u_min_V" in scan else None,
        scan_u_max=float(scan["u_max_V"]) if "u_max_V" in scan else None,
        scan_steps=int(scan.get("steps", 41)),
        fit_restarts=int(fit.get("restarts", 5)),
        fit_seed=int(fit.get("seed", 0)),
    )
