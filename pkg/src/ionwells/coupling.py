"""Closed-form dipole-dipole coupling between separately trapped ions.

The near-field interaction of two oscillating charges falls off as 1/r^3 and,
for longitudinally aligned traps, resonantly exchanges motional quanta at the
rate

    Omega_c = q1*q2 / (2*pi*eps0 * sqrt(m1*m2*w1*w2) * r^3)

A complete state swap takes T_swap = pi/Omega_c; a Molmer-Sorensen-style gate
driven at the sideband midpoints takes T_gate = 4*pi/Omega_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import COULOMB_CONSTANT, VACUUM_PERMITTIVITY
from .potential import IonSpecies


@dataclass(frozen=True)
class CouplingResult:
    omega_c: float  # rad/s
    t_swap: float  # s
    t_gate: float  # s


def dipole_energy(d1, d2, r_vec) -> float:
    """Interaction energy (J) of two point dipoles separated by r_vec.

    d1, d2 are dipole-moment vectors in C*m; the orientation dependence is
    (d1.d2 - 3*(d1.e_r)*(d2.e_r)) / r^3.
    """
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    r_vec = np.asarray(r_vec, dtype=float)
    r = float(np.linalg.norm(r_vec))
    if r == 0.0:
        raise ValueError("dipole separation must be nonzero")
    e_r = r_vec / r
    return COULOMB_CONSTANT * (
        float(np.dot(d1, d2)) - 3.0 * float(np.dot(d1, e_r)) * float(np.dot(d2, e_r))
    ) / r**3


def coupling_rate(s1: IonSpecies, s2: IonSpecies, f1: float, f2: float, r: float) -> float:
    """Resonant exchange rate Omega_c (rad/s) for one ion in each well."""
    if f1 <= 0 or f2 <= 0:
        raise ValueError("well frequencies must be positive")
    if r <= 0:
        raise ValueError("separation must be positive")
    w1 = 2.0 * math.pi * f1
    w2 = 2.0 * math.pi * f2
    return abs(s1.charge * s2.charge) / (
        2.0 * math.pi * VACUUM_PERMITTIVITY
        * math.sqrt(s1.mass * s2.mass * w1 * w2) * r**3
    )


def swap_time(omega_c: float) -> float:
    """Time pi/Omega_c for a complete exchange of motional states."""
    if omega_c <= 0:
        raise ValueError("omega_c must be positive")
    return math.pi / omega_c


def gate_time(omega_c: float) -> float:
    """Two-qubit gate time 4*pi/Omega_c."""
    if omega_c <= 0:
        raise ValueError("omega_c must be positive")
    return 4.0 * math.pi / omega_c


def angular_factor(theta: float) -> float:
    """Coupling of parallel dipoles vs tilt angle, normalized to 1 head-on.

    theta is the angle between the dipole axes and the separation direction:
    f(0) = 1, f(pi/2) = -1/2, and the factor vanishes at the quadrupole angle
    arccos(sqrt(1/3)).
    """
    return -(1.0 - 3.0 * math.cos(theta) ** 2) / 2.0


def point_charge_rate(species: IonSpecies, f: float, r: float, n1: int, n2: int) -> float:
    """Exchange rate with each string lumped into one point charge.

    A string of n ions is modelled as charge n*q and mass n*m, so the rate is
    sqrt(n1*n2) times the single-ion value: collective dipoles grow with the
    square root of the ion number.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("ion counts must be >= 1")
    lumped1 = IonSpecies(n1 * species.charge, n1 * species.mass, species.label)
    lumped2 = IonSpecies(n2 * species.charge, n2 * species.mass, species.label)
    return coupling_rate(lumped1, lumped2, f, f, r)


def exchange_coupling(s1: IonSpecies, s2: IonSpecies, f1: float, f2: float,
                      r: float) -> CouplingResult:
    """Rate plus the derived swap and gate times in one record."""
    omega_c = coupling_rate(s1, s2, f1, f2, r)
    return CouplingResult(omega_c=omega_c, t_swap=swap_time(omega_c),
                          t_gate=gate_time(omega_c))
