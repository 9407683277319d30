"""Equilibrium ion positions in the double well.

The total energy of N ions is the sum of the trap potential at each position
plus the pairwise Coulomb repulsion. Equilibria are found with damped Newton
iterations on the analytic gradient/Hessian, falling back to scaled gradient
descent whenever the Hessian is not positive definite. Positions are kept
strictly ordered throughout: in 1-D, ions cannot pass each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import COULOMB_CONSTANT
from .potential import (
    AxialPotential,
    IonSpecies,
    NotADoubleWellError,
    eval_potential,
    find_wells,
    potential_curvature,
    potential_minima,
    potential_slope,
)

GRAD_TOL = 1e-24  # N
POS_TOL = 1e-13  # m
DEFAULT_SEED_SPACING = 5e-6  # m


class CoincidentIonsError(ValueError):
    """Two ions share a position; the Coulomb energy is singular."""


@dataclass(frozen=True)
class IonConfiguration:
    """Ion counts per well for a single species."""

    species: IonSpecies
    n_left: int
    n_right: int

    def __post_init__(self):
        if self.n_left < 0 or self.n_right < 0:
            raise ValueError("ion counts must be non-negative")
        if self.n_left + self.n_right < 1:
            raise ValueError("at least one ion is required")

    @property
    def n_total(self) -> int:
        return self.n_left + self.n_right


@dataclass(frozen=True)
class EquilibriumResult:
    """Converged (or flagged) minimizer output.

    positions are strictly ascending; escaped is set when an ion ended up on
    the wrong side of the barrier relative to the requested configuration.
    """

    positions: np.ndarray
    total_energy: float
    grad_norm: float
    converged: bool
    escaped: bool


def _check_distinct(positions: np.ndarray):
    if positions.ndim != 1:
        raise ValueError("positions must be a 1-D sequence")
    n = len(positions)
    if n > 1:
        diff = positions[:, None] - positions[None, :]
        if np.any(diff[~np.eye(n, dtype=bool)] == 0.0):
            raise CoincidentIonsError("two ions share the same position")


def total_energy(p: AxialPotential, u_ax: float, positions, species: IonSpecies) -> float:
    """Trap plus Coulomb energy of the configuration, in J."""
    z = np.asarray(positions, dtype=float)
    _check_distinct(z)
    energy = float(np.sum(eval_potential(p, u_ax, z)))
    kq2 = COULOMB_CONSTANT * species.charge * species.charge
    n = len(z)
    for i in range(n - 1):
        energy += float(np.sum(kq2 / np.abs(z[i] - z[i + 1:])))
    return energy


def energy_gradient(p: AxialPotential, u_ax: float, positions, species: IonSpecies) -> np.ndarray:
    """Analytic gradient dE/dz_i of the total energy, in N."""
    z = np.asarray(positions, dtype=float)
    _check_distinct(z)
    g = np.atleast_1d(np.asarray(potential_slope(p, u_ax, z), dtype=float)).copy()
    kq2 = COULOMB_CONSTANT * species.charge * species.charge
    n = len(z)
    if n > 1:
        dz = z[:, None] - z[None, :]
        np.fill_diagonal(dz, np.inf)
        g -= np.sum(np.sign(dz) * kq2 / dz**2, axis=1)
    return g


def energy_hessian(p: AxialPotential, u_ax: float, positions, species: IonSpecies) -> np.ndarray:
    """Analytic second-derivative matrix of the total energy, in J/m^2.

    Off-diagonal entries are -2*k*q^2/|dz|^3; the Coulomb diagonal carries
    the opposite row sum, so the pair part is exactly translation invariant.
    """
    z = np.asarray(positions, dtype=float)
    _check_distinct(z)
    n = len(z)
    curv = np.atleast_1d(np.asarray(potential_curvature(p, u_ax, z), dtype=float))
    kq2 = COULOMB_CONSTANT * species.charge * species.charge
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, np.inf)
    coupling = 2.0 * kq2 / np.abs(dz) ** 3
    hessian = -coupling
    np.fill_diagonal(hessian, curv + np.sum(coupling, axis=1))
    return hessian


def _cluster(center: float, count: int) -> np.ndarray:
    return center + DEFAULT_SEED_SPACING * (np.arange(count) - (count - 1) / 2.0)


def default_seed_positions(p: AxialPotential, u_ax: float, config: IonConfiguration) -> np.ndarray:
    """Starting guess: ions spaced 5 um around their well's bare minimum."""
    minima = potential_minima(p, u_ax)
    if config.n_left > 0 and config.n_right > 0:
        if len(minima) < 2:
            raise NotADoubleWellError(
                "both wells are populated but the potential has fewer than two minima")
        return np.concatenate([
            _cluster(minima[0], config.n_left),
            _cluster(minima[-1], config.n_right),
        ])
    if not minima:
        raise ValueError("potential has no minimum to seed around")
    if len(minima) == 1:
        center = minima[0]
    else:
        center = minima[0] if config.n_right == 0 else minima[-1]
    return _cluster(center, config.n_total)


def solve_equilibrium(p: AxialPotential, u_ax: float, config: IonConfiguration,
                      seed_positions=None, max_iterations: int = 10_000) -> EquilibriumResult:
    """Minimize the total energy for the given ion configuration.

    Unconverged runs are returned flagged (converged=False), never silently.
    Convergence requires both a stationary step (max move < 1e-13 m) and a
    gradient norm below 1e-24 N.
    """
    species = config.species
    if seed_positions is None:
        z = default_seed_positions(p, u_ax, config)
    else:
        z = np.asarray(seed_positions, dtype=float).copy()
        if z.ndim != 1 or len(z) != config.n_total:
            raise ValueError("seed_positions must hold one position per ion")
        if len(z) > 1 and not np.all(np.diff(z) > 0):
            raise ValueError("seed_positions must be strictly increasing")

    energy = total_energy(p, u_ax, z, species)
    last_move = math.inf
    converged = False
    for _ in range(max_iterations):
        g = energy_gradient(p, u_ax, z, species)
        gnorm = float(np.linalg.norm(g))
        if gnorm < GRAD_TOL and last_move < POS_TOL:
            converged = True
            break
        hessian = energy_hessian(p, u_ax, z, species)
        try:
            np.linalg.cholesky(hessian)
            step = np.linalg.solve(hessian, -g)
        except np.linalg.LinAlgError:
            # not positive definite: scaled steepest descent
            scale = float(np.max(np.abs(np.diag(hessian)))) or 1.0
            step = -g / scale
        # backtracking: keep strict ordering and never increase the energy
        # (tiny fp slack; once the gradient is nearly zero, pure Newton is
        # trusted because energy differences drown in rounding)
        accepted = False
        t = 1.0
        for _ in range(60):
            z_new = z + t * step
            if len(z_new) == 1 or np.all(np.diff(z_new) > 0):
                e_new = total_energy(p, u_ax, z_new, species)
                if e_new <= energy + abs(energy) * 1e-14 or gnorm < 1e-20:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        last_move = float(np.max(np.abs(t * step)))
        z = z_new
        energy = e_new

    grad_norm = float(np.linalg.norm(energy_gradient(p, u_ax, z, species)))
    escaped = False
    if config.n_left > 0 and config.n_right > 0:
        try:
            wells = find_wells(p, u_ax, species)
            escaped = int(np.sum(z < wells.barrier_top)) != config.n_left
        except NotADoubleWellError:
            escaped = True
    return EquilibriumResult(
        positions=z,
        total_energy=total_energy(p, u_ax, z, species),
        grad_norm=grad_norm,
        converged=converged and not math.isnan(grad_norm),
        escaped=escaped,
    )
