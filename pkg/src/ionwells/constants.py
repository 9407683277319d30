"""Physical constants used throughout the package.

All values are CODATA 2018 recommended values; atomic masses are AME2020.
Keeping a single frozen table makes every computed number in the package
bit-reproducible.
"""

CONSTANTS_VERSION = "CODATA-2018"

ELEMENTARY_CHARGE = 1.602176634e-19  # C (exact)
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
REDUCED_PLANCK = 1.054571817e-34  # J s
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

# 1/(4 pi eps0), derived from the permittivity above for internal consistency
COULOMB_CONSTANT = 1.0 / (4.0 * 3.141592653589793 * VACUUM_PERMITTIVITY)

# Neutral atomic masses in u (AME2020); the electron mass deficit of a singly
# charged ion is ~1.4e-5 relative and irrelevant at the accuracy targeted here.
ATOMIC_MASSES_U = {
    "Ca40": 39.962590866,
    "Ca44": 43.955481543,
    "Be9": 9.012183065,
    "Mg24": 23.985041697,
    "Sr88": 87.905612254,
}


def constants_table():
    """Name -> (value, unit) mapping of every constant in the shared table."""
    table = {
        "elementary_charge": (ELEMENTARY_CHARGE, "C"),
        "vacuum_permittivity": (VACUUM_PERMITTIVITY, "F/m"),
        "reduced_planck": (REDUCED_PLANCK, "J s"),
        "atomic_mass_unit": (ATOMIC_MASS_UNIT, "kg"),
        "coulomb_constant": (COULOMB_CONSTANT, "N m^2/C^2"),
    }
    for name, mass_u in sorted(ATOMIC_MASSES_U.items()):
        table[f"mass_{name}"] = (mass_u * ATOMIC_MASS_UNIT, "kg")
    return table
