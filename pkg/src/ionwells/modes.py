"""Normal modes of the trapped crystal and avoided-crossing scans.

Mode frequencies follow from the eigenvalues of the (mass-weighted) Hessian
of the total energy at equilibrium. Scanning the control voltage sweeps the
two wells through resonance; the minimal gap between the two lowest modes is
the dipole-dipole mode splitting, refined here by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coupling as _coupling
from .equilibrium import (
    EquilibriumResult,
    IonConfiguration,
    energy_hessian,
    solve_equilibrium,
)
from .potential import AxialPotential, IonSpecies, NotADoubleWellError, find_wells

GOLDEN_XTOL = 1e-5  # V, refinement target for the gap minimum
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class NotConvergedError(RuntimeError):
    """Equilibrium solve did not converge; modes are undefined."""


class UnstableEquilibriumError(RuntimeError):
    """The Hessian has a non-positive eigenvalue: not a stable crystal."""


@dataclass(frozen=True)
class ModeSpectrum:
    """Mode frequencies in Hz (ascending) and orthonormal eigenvectors.

    eigenvectors[:, i] is the mass-weighted displacement pattern of mode i.
    """

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    equilibrium: EquilibriumResult


@dataclass(frozen=True)
class ScanPoint:
    u_ax: float
    nu_low: float
    nu_high: float
    stable: bool


@dataclass(frozen=True)
class CrossingScan:
    """Two lowest mode branches vs control voltage, with the extracted gap."""

    points: list[ScanPoint]
    splitting: float
    resonance_voltage: float


@dataclass(frozen=True)
class EnhancementRow:
    n_left: int
    n_right: int
    splitting_hz: float
    point_charge_hz: float


def hessian(p: AxialPotential, u_ax: float, positions, species: IonSpecies) -> np.ndarray:
    """Second-derivative matrix of the total energy (J/m^2), exactly symmetric."""
    return energy_hessian(p, u_ax, positions, species)


def spectrum_from_hessian(hess: np.ndarray, masses):
    """Frequencies (Hz, ascending) and eigenvectors of H_ij/sqrt(m_i*m_j).

    Supports per-ion masses so mixed-species crystals (e.g. light antenna
    ions) reduce to the same eigenproblem.
    """
    masses = np.atleast_1d(np.asarray(masses, dtype=float))
    weighted = hess / np.sqrt(np.outer(masses, masses))
    eigenvalues, eigenvectors = np.linalg.eigh(weighted)
    if eigenvalues[0] <= 0.0:
        raise UnstableEquilibriumError(
            f"non-positive Hessian eigenvalue {eigenvalues[0]!r}")
    return np.sqrt(eigenvalues) / (2.0 * math.pi), eigenvectors


def mode_frequencies(p: AxialPotential, u_ax: float, config: IonConfiguration,
                     seed_positions=None) -> ModeSpectrum:
    """Normal-mode spectrum at one control voltage.

    Solves the equilibrium first (optionally warm-started), then
    diagonalizes the mass-weighted Hessian. The two lowest modes are the
    coupled pair of the two wells.
    """
    eq = solve_equilibrium(p, u_ax, config, seed_positions=seed_positions)
    if not eq.converged:
        raise NotConvergedError(
            f"equilibrium did not converge at u_ax={u_ax!r} V "
            f"(grad_norm={eq.grad_norm!r} N)")
    hess = energy_hessian(p, u_ax, eq.positions, config.species)
    freqs, vecs = spectrum_from_hessian(hess, np.full(config.n_total, config.species.mass))
    return ModeSpectrum(frequencies=freqs, eigenvectors=vecs, equilibrium=eq)


def _gap_point(p, config, u, seeds):
    """One scan sample; returns (ScanPoint, positions or None)."""
    try:
        ms = mode_frequencies(p, u, config, seed_positions=seeds)
    except (NotADoubleWellError, NotConvergedError, UnstableEquilibriumError,
            np.linalg.LinAlgError):
        return ScanPoint(u, math.nan, math.nan, False), None
    if ms.equilibrium.escaped:
        return ScanPoint(u, math.nan, math.nan, False), None
    nu = ms.frequencies
    if len(nu) < 2:
        raise ValueError("a crossing scan needs at least two ions")
    return ScanPoint(u, float(nu[0]), float(nu[1]), True), ms.equilibrium.positions


def scan_crossing(p: AxialPotential, config: IonConfiguration,
                  u_min: float, u_max: float, steps: int = 41) -> CrossingScan:
    """Sweep the control voltage and extract the avoided-crossing splitting.

    Each grid point re-solves the equilibrium, warm-started from its
    neighbour. Failed points are flagged and excluded from the splitting
    extraction, which golden-sections the gap around the coarse minimum
    down to 1e-5 V.
    """
    if steps < 3:
        raise ValueError("steps must be >= 3")
    if not u_max > u_min:
        raise ValueError("u_max must exceed u_min")

    points = []
    seeds = None
    for u in np.linspace(u_min, u_max, steps):
        pt, positions = _gap_point(p, config, float(u), seeds)
        points.append(pt)
        seeds = positions if positions is not None else seeds

    stable = [pt for pt in points if pt.stable]
    if not stable:
        return CrossingScan(points=points, splitting=math.nan,
                            resonance_voltage=math.nan)

    gaps = {pt.u_ax: pt.nu_high - pt.nu_low for pt in stable}
    u_best = min(gaps, key=gaps.get)
    grid = sorted(gaps)
    i = grid.index(u_best)
    a = grid[max(0, i - 1)]
    b = grid[min(len(grid) - 1, i + 1)]

    seeds_cache = {pt.u_ax: None for pt in points}

    def sample(u):
        nearest = min(gaps, key=lambda v: abs(v - u))
        pt, _ = _gap_point(p, config, u, seeds_cache.get(nearest))
        points.append(pt)
        if pt.stable:
            gaps[pt.u_ax] = pt.nu_high - pt.nu_low
            return pt.nu_high - pt.nu_low
        return math.inf

    if b > a:
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, fd = sample(c), sample(d)
        while b - a > GOLDEN_XTOL:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = sample(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = sample(d)

    u_best = min(gaps, key=gaps.get)
    points.sort(key=lambda pt: pt.u_ax)
    return CrossingScan(points=points, splitting=gaps[u_best],
                        resonance_voltage=u_best)


def _voltage_frequency_slope(p: AxialPotential, species: IonSpecies) -> float:
    """d(freq_right - freq_left)/du at u=0, in Hz/V."""
    du = 1e-4
    wp = find_wells(p, du, species)
    wm = find_wells(p, -du, species)
    return ((wp.freq_right - wp.freq_left) - (wm.freq_right - wm.freq_left)) / (2.0 * du)


def auto_scan_range(p: AxialPotential, config: IonConfiguration):
    """Scan window centered on the resonance, spanning +-5 expected splittings.

    The expected splitting comes from the point-charge estimate at the bare
    well geometry; the resonance voltage is located by an expanding coarse
    probe (needed for asymmetric configurations, whose string frequencies
    only meet at nonzero control voltage).
    """
    species = config.species
    bare = find_wells(p, 0.0, species)
    f_mean = 0.5 * (bare.freq_left + bare.freq_right)
    s_expected = _coupling.point_charge_rate(
        species, f_mean, bare.separation_r, max(config.n_left, 1),
        max(config.n_right, 1)) / (2.0 * math.pi)
    slope = _voltage_frequency_slope(p, species)
    if abs(slope) < 1e-9:
        raise ValueError(
            "control voltage has no effect on the well frequencies "
            "(tune coefficients are zero?)")
    half_width = 5.0 * s_expected / abs(slope)

    if config.n_left == config.n_right:
        center = 0.0
    else:
        pt0, _ = _gap_point(p, config, 0.0, None)
        if not pt0.stable:
            raise NotConvergedError("cannot probe the crossing at u_ax=0")
        guess = (pt0.nu_high - pt0.nu_low) / abs(slope)
        candidates = []
        for u in (guess, -guess):
            pt, _ = _gap_point(p, config, u, None)
            if pt.stable:
                candidates.append((pt.nu_high - pt.nu_low, u))
        if not candidates:
            raise NotConvergedError("cannot bracket the resonance voltage")
        center = min(candidates)[1]

    width = max(half_width, 0.2 * abs(center))
    for _ in range(8):
        probes = np.linspace(center - width, center + width, 9)
        gaps = []
        for u in probes:
            pt, _ = _gap_point(p, config, float(u), None)
            gaps.append(pt.nu_high - pt.nu_low if pt.stable else math.inf)
        i = int(np.argmin(gaps))
        if not math.isfinite(gaps[i]):
            width *= 0.5
            continue
        if i in (0, len(probes) - 1):
            center = float(probes[i])
            width *= 2.0
            continue
        center = float(probes[i])
        return center - half_width, center + half_width
    return center - half_width, center + half_width


def enhancement_report(p: AxialPotential, species: IonSpecies,
                       max_ions_per_well: int, steps: int = 25):
    """Splitting vs ion number, next to the point-charge prediction.

    Covers the ladder (1,1), (2,1), (2,2), ... up to the symmetric
    configuration with max_ions_per_well ions on each side. The point-charge
    column is sqrt(n_left*n_right) times the single-ion rate at the bare
    well geometry.
    """
    if max_ions_per_well < 1:
        raise ValueError("max_ions_per_well must be >= 1")
    bare = find_wells(p, 0.0, species)
    f_mean = 0.5 * (bare.freq_left + bare.freq_right)
    configs = []
    for k in range(1, max_ions_per_well + 1):
        if k > 1:
            configs.append((k, k - 1))
        configs.append((k, k))
    rows = []
    for n_left, n_right in configs:
        config = IonConfiguration(species, n_left, n_right)
        u_min, u_max = auto_scan_range(p, config)
        scan = scan_crossing(p, config, u_min, u_max, steps=steps)
        prediction = _coupling.point_charge_rate(
            species, f_mean, bare.separation_r, n_left, n_right) / (2.0 * math.pi)
        rows.append(EnhancementRow(n_left, n_right, scan.splitting, prediction))
    return rows


def scan_csv_lines(scan: CrossingScan):
    """CSV rows (no header comments): u_ax_V, nu_low_Hz, nu_high_Hz, stable_flag."""
    lines = ["u_ax_V,nu_low_Hz,nu_high_Hz,stable_flag"]
    for pt in scan.points:
        lines.append(f"{pt.u_ax!r},{pt.nu_low!r},{pt.nu_high!r},{int(pt.stable)}")
    return lines
