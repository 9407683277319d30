import math

import numpy as np
import pytest

import ionwells as iw
from ionwells.equilibrium import IonConfiguration
from ionwells.fitting import SpectraDataset, fit_exchange, fit_spectra
from ionwells.modes import mode_frequencies


@pytest.fixture(scope="session")
def ca40():
    return iw.SPECIES["Ca40"]


@pytest.fixture(scope="session")
def paper_potential(ca40):
    """54 um / 537 kHz symmetric double well with the default control response."""
    return iw.calibrate_symmetric(54e-6, 537e3, ca40, tune1=5e-18)


@pytest.fixture(scope="session")
def enhancement_rows(paper_potential, ca40):
    return iw.enhancement_report(paper_potential, ca40, 3)


@pytest.fixture(scope="session")
def scan_1plus1(paper_potential, ca40):
    config = IonConfiguration(ca40, 1, 1)
    u_min, u_max = iw.auto_scan_range(paper_potential, config)
    return iw.scan_crossing(paper_potential, config, u_min, u_max, steps=25)


@pytest.fixture(scope="session")
def synth_spectra(ca40):
    """Factory for synthetic sideband datasets generated by the mode model."""

    def build(pot, configs, n_u=7, sigma=10.0, drift=0.0, u_offset=0.0,
              noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        data = {}
        t_clock = 0.0
        for (nl, nr) in configs:
            config = IonConfiguration(ca40, nl, nr)
            u0, u1 = iw.auto_scan_range(pot, config)
            rows = []
            for u in np.linspace(u0, u1, n_u):
                # the logged voltage is what the model's correction undoes
                u_meas = u - u_offset - drift * t_clock
                ms = mode_frequencies(pot, float(u), config)
                for f in ms.frequencies[:2]:
                    rows.append([u_meas, f + noise * rng.standard_normal(),
                                 sigma, t_clock])
                t_clock += 60.0
            data[(nl, nr)] = np.array(rows)
        return SpectraDataset(data)

    return build


_FIVE_CONFIGS = [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]


@pytest.fixture(scope="session")
def spectra_noiseless_fit(paper_potential, ca40, synth_spectra):
    """Exact-model dataset over all five configurations plus its fit."""
    dataset = synth_spectra(paper_potential, _FIVE_CONFIGS)
    result = fit_spectra(dataset, ca40, approx_separation=50e-6,
                         approx_frequency=520e3, restarts=1)
    return dataset, result


@pytest.fixture(scope="session")
def spectra_drift_fit(paper_potential, ca40, synth_spectra):
    """Dataset with a 7 mV/hour control-voltage drift injected, plus its fit."""
    drift = 7e-3 / 3600.0
    dataset = synth_spectra(paper_potential, _FIVE_CONFIGS, drift=drift)
    result = fit_spectra(dataset, ca40, approx_separation=50e-6,
                         approx_frequency=520e3, restarts=1)
    return drift, result


@pytest.fixture(scope="session")
def exchange_mc_errors():
    """Relative omega_c errors over 100 noisy synthetic exchange traces."""
    truth_omega = 2 * math.pi * 2.25e3
    model = iw.ExchangeModel(3.9, 9.0, truth_omega, 3e-3, 1300.0)
    taus = np.linspace(0.0, 1e-3, 50)
    clean = iw.exchange_trace(model, taus)
    rng = np.random.default_rng(2024)
    errors = []
    for i in range(100):
        y = clean + 0.05 * clean * rng.standard_normal(taus.size)
        sigma = np.maximum(0.05 * clean, 1e-3)
        fit = fit_exchange(np.column_stack([taus, y, sigma]), seed=i, restarts=2)
        errors.append(abs(fit.parameters["omega_c"] - truth_omega) / truth_omega)
    return np.asarray(errors)
