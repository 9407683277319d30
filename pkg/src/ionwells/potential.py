"""Axial double-well potential: quartic model, calibration, control-voltage action.

The axial potential is a fourth-order polynomial (third-order term removed by
choice of origin, constant term irrelevant):

    U(z; u) = (alpha1 + u*tune1) * z + (alpha2 + u*tune2) * z**2 + alpha4 * z**4

with coefficients in SI energy units (J/m^n) and the control voltage u in
volts. A negative effective quadratic coefficient together with alpha4 > 0
produces a double well; the control voltage tilts it, shifting the two well
frequencies in opposite directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ATOMIC_MASS_UNIT, ATOMIC_MASSES_U, ELEMENTARY_CHARGE


class NotADoubleWellError(ValueError):
    """The potential has fewer than two minima at the requested voltage."""


@dataclass(frozen=True)
class IonSpecies:
    """Charge (C) and mass (kg) of a trapped-ion species."""

    charge: float
    mass: float
    label: str = ""

    def __post_init__(self):
        if self.charge == 0:
            raise ValueError("ion charge must be nonzero")
        if self.mass <= 0:
            raise ValueError("ion mass must be positive")


SPECIES = {
    name: IonSpecies(ELEMENTARY_CHARGE, mass_u * ATOMIC_MASS_UNIT, name)
    for name, mass_u in ATOMIC_MASSES_U.items()
}


@dataclass(frozen=True)
class AxialPotential:
    """Quartic axial potential with a linear control-voltage response.

    alpha1 [J/m], alpha2 [J/m^2], alpha4 [J/m^4] are the static polynomial
    coefficients; tune1 [J/m per V] and tune2 [J/m^2 per V] describe how the
    control voltage adds to alpha1 and alpha2.
    """

    alpha1: float
    alpha2: float
    alpha4: float
    tune1: float = 0.0
    tune2: float = 0.0

    def __post_init__(self):
        # alpha4 == 0 is tolerated so purely harmonic single wells can be
        # modelled in tests; negative alpha4 is never confining.
        if self.alpha4 < 0:
            raise ValueError("alpha4 must be >= 0 for global confinement")


@dataclass(frozen=True)
class WellGeometry:
    """Minima, local frequencies and barrier of a double well.

    barrier_height is measured from the lower of the two minima;
    barrier_top is the coordinate of the maximum separating the wells.
    """

    left_min: float
    right_min: float
    separation_r: float
    freq_left: float
    freq_right: float
    barrier_height: float
    barrier_top: float


def effective_coefficients(p: AxialPotential, u_ax: float):
    """Linear and quadratic coefficients at control voltage u_ax."""
    return p.alpha1 + u_ax * p.tune1, p.alpha2 + u_ax * p.tune2


def eval_potential(p: AxialPotential, u_ax: float, z):
    """Potential energy U(z; u_ax) in J. Accepts scalar or array z."""
    a1, a2 = effective_coefficients(p, u_ax)
    z = np.asarray(z, dtype=float)
    out = a1 * z + a2 * z**2 + p.alpha4 * z**4
    return float(out) if out.ndim == 0 else out


def potential_slope(p: AxialPotential, u_ax: float, z):
    """dU/dz in N (the negative of the trap force)."""
    a1, a2 = effective_coefficients(p, u_ax)
    z = np.asarray(z, dtype=float)
    out = a1 + 2.0 * a2 * z + 4.0 * p.alpha4 * z**3
    return float(out) if out.ndim == 0 else out


def potential_curvature(p: AxialPotential, u_ax: float, z):
    """d2U/dz2 in J/m^2."""
    a1, a2 = effective_coefficients(p, u_ax)
    z = np.asarray(z, dtype=float)
    out = 2.0 * a2 + 12.0 * p.alpha4 * z**2
    return float(out) if out.ndim == 0 else out


def calibrate_symmetric(separation_r: float, freq0: float, species: IonSpecies,
                        tune1: float = 0.0, tune2: float = 0.0) -> AxialPotential:
    """Symmetric double well with bare minima at +-separation_r/2.

    Both wells have local (linear) frequency freq0 for the given species.
    Closed form: alpha2 = -m*w0^2/4, alpha4 = m*w0^2/(2*r^2) with
    w0 = 2*pi*freq0. Coulomb repulsion between ions is deliberately not
    folded in: separation_r is the bare-well spacing, and the ~0.2% shift of
    a one-ion-per-well crystal is left to downstream fitting.
    """
    if separation_r <= 0:
        raise ValueError("separation_r must be positive")
    if freq0 <= 0:
        raise ValueError("freq0 must be positive")
    w0 = 2.0 * math.pi * freq0
    alpha2 = -species.mass * w0 * w0 / 4.0
    alpha4 = species.mass * w0 * w0 / (2.0 * separation_r * separation_r)
    return AxialPotential(0.0, alpha2, alpha4, tune1, tune2)


def stationary_points(p: AxialPotential, u_ax: float):
    """Real roots of dU/dz at this voltage, ascending.

    The cubic 4*a4*z^3 + 2*a2*z + a1 = 0 is solved in closed form
    (trigonometric method for three real roots, Cardano otherwise), followed
    by a single Newton polish per root to reach machine precision.
    """
    a1, a2 = effective_coefficients(p, u_ax)
    a4 = p.alpha4
    if a4 == 0.0:
        if a2 == 0.0:
            return []
        roots = [-a1 / (2.0 * a2)]
    else:
        # depressed cubic z^3 + pc*z + qc = 0
        pc = a2 / (2.0 * a4)
        qc = a1 / (4.0 * a4)
        disc = -4.0 * pc**3 - 27.0 * qc**2
        if disc > 0.0:
            # three distinct real roots (requires pc < 0)
            amp = 2.0 * math.sqrt(-pc / 3.0)
            arg = 3.0 * qc / (2.0 * pc) * math.sqrt(-3.0 / pc)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg)
            roots = [amp * math.cos(phi / 3.0 - 2.0 * math.pi * k / 3.0)
                     for k in range(3)]
        else:
            half = qc / 2.0
            rad = math.sqrt(max(0.0, half * half + pc**3 / 27.0))
            roots = [float(np.cbrt(-half + rad) + np.cbrt(-half - rad))]
    polished = []
    for z in sorted(roots):
        curv = potential_curvature(p, u_ax, z)
        if curv != 0.0:
            z = z - potential_slope(p, u_ax, z) / curv
        polished.append(z)
    return polished


def potential_minima(p: AxialPotential, u_ax: float):
    """Coordinates of all local minima at this voltage, ascending."""
    return [z for z in stationary_points(p, u_ax)
            if potential_curvature(p, u_ax, z) > 0.0]


def find_wells(p: AxialPotential, u_ax: float, species: IonSpecies) -> WellGeometry:
    """Locate both minima of a double well and their local frequencies.

    Raises NotADoubleWellError if the potential has fewer than two minima at
    this control voltage.
    """
    points = stationary_points(p, u_ax)
    minima = [z for z in points if potential_curvature(p, u_ax, z) > 0.0]
    if len(minima) < 2:
        raise NotADoubleWellError(
            f"potential is not a double well at u_ax={u_ax!r} V "
            f"({len(minima)} minimum/minima found)")
    left, right = minima[0], minima[-1]
    tops = [z for z in points if left < z < right]
    barrier_top = tops[0] if tops else 0.5 * (left + right)

    def local_freq(z):
        return math.sqrt(potential_curvature(p, u_ax, z) / species.mass) / (2.0 * math.pi)

    u_left = eval_potential(p, u_ax, left)
    u_right = eval_potential(p, u_ax, right)
    barrier_height = eval_potential(p, u_ax, barrier_top) - min(u_left, u_right)
    return WellGeometry(
        left_min=left,
        right_min=right,
        separation_r=right - left,
        freq_left=local_freq(left),
        freq_right=local_freq(right),
        barrier_height=barrier_height,
        barrier_top=barrier_top,
    )
