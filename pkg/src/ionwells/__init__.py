"""Simulator and fitting toolkit for dipole-dipole coupled ions in a
tunable double-well trap: equilibria, normal-mode spectra, avoided
crossings, phonon-exchange dynamics, and parameter recovery from data."""

__version__ = "0.1.0"

from .constants import CONSTANTS_VERSION, constants_table
from .coupling import (
    CouplingResult,
    angular_factor,
    coupling_rate,
    dipole_energy,
    exchange_coupling,
    gate_time,
    point_charge_rate,
    swap_time,
)
from .dynamics import (
    CutoffError,
    ExchangeModel,
    FockState,
    bell_fidelity,
    evolve_fock,
    exchange_trace,
    mean_phonons,
)
from .equilibrium import (
    CoincidentIonsError,
    EquilibriumResult,
    IonConfiguration,
    energy_gradient,
    solve_equilibrium,
    total_energy,
)
from .fitting import (
    FitResult,
    SpectraDataset,
    fit_avoided_crossing,
    fit_exchange,
    fit_spectra,
)
from .modes import (
    CrossingScan,
    ModeSpectrum,
    NotConvergedError,
    UnstableEquilibriumError,
    auto_scan_range,
    enhancement_report,
    hessian,
    mode_frequencies,
    scan_crossing,
)
from .potential import (
    SPECIES,
    AxialPotential,
    IonSpecies,
    NotADoubleWellError,
    WellGeometry,
    calibrate_symmetric,
    eval_potential,
    find_wells,
)
from .trapconfig import TrapSetup, load_trap_config
