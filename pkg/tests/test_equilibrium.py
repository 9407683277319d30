import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

import ionwells as iw
from ionwells.constants import COULOMB_CONSTANT, ELEMENTARY_CHARGE
from ionwells.equilibrium import (
    CoincidentIonsError,
    IonConfiguration,
    default_seed_positions,
    energy_gradient,
    energy_hessian,
    solve_equilibrium,
    total_energy,
)
from ionwells.potential import AxialPotential

CA40_MASS = 6.635944333554532e-26


def harmonic_well(freq):
    """Single harmonic well of the given frequency for Ca40."""
    w = 2 * math.pi * freq
    return AxialPotential(0.0, CA40_MASS * w * w / 2, 0.0)


def fd_gradient(p, u, z, species, h=1e-10):
    g = np.empty(len(z))
    for i in range(len(z)):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (total_energy(p, u, zp, species) - total_energy(p, u, zm, species)) / (2 * h)
    return g


def test_single_ion_energy_zero(ca40, paper_potential):
    assert total_energy(paper_potential, 0.0, [0.0], ca40) == 0.0


def test_two_ion_mirror_energy(ca40, paper_potential):
    z = 20e-6
    expected = (2 * iw.eval_potential(paper_potential, 0.0, z)
                + COULOMB_CONSTANT * ca40.charge**2 / (2 * z))
    assert total_energy(paper_potential, 0.0, [-z, z], ca40) == pytest.approx(
        expected, rel=1e-14)


def test_paper_two_ion_energy_frozen(ca40, paper_potential):
    # independent arithmetic: 2*U(27um) + k*e^2/(54um)
    w0 = 2 * math.pi * 537e3
    a2 = -CA40_MASS * w0**2 / 4
    a4 = CA40_MASS * w0**2 / (2 * (54e-6) ** 2)
    z = 27e-6
    expected = 2 * (a2 * z**2 + a4 * z**4) + COULOMB_CONSTANT * ELEMENTARY_CHARGE**2 / (2 * z)
    assert expected == pytest.approx(-1.3341008221825618e-22, rel=1e-12)
    assert total_energy(paper_potential, 0.0, [-z, z], ca40) == pytest.approx(
        expected, rel=1e-12)


def test_coincident_positions_raise(ca40, paper_potential):
    with pytest.raises(CoincidentIonsError):
        total_energy(paper_potential, 0.0, [1e-6, 1e-6], ca40)
    with pytest.raises(CoincidentIonsError):
        energy_gradient(paper_potential, 0.0, [1e-6, 1e-6], ca40)
    with pytest.raises(CoincidentIonsError):
        energy_hessian(paper_potential, 0.0, [1e-6, 1e-6], ca40)


def test_gradient_zero_at_bare_minimum(ca40, paper_potential):
    g = energy_gradient(paper_potential, 0.0, [27e-6], ca40)
    assert abs(g[0]) < 1e-24


@settings(max_examples=25, deadline=None)
@given(shift=st.floats(min_value=-3e-6, max_value=3e-6),
       u=st.floats(min_value=-0.1, max_value=0.1))
def test_gradient_matches_finite_differences(ca40, paper_potential, shift, u):
    z = np.array([-31e-6, -24e-6 + shift, 22e-6, 30e-6])
    g = energy_gradient(paper_potential, u, z, ca40)
    ref = fd_gradient(paper_potential, u, z, ca40)
    assert np.allclose(g, ref, rtol=1e-6)


def test_gradient_mirror_antisymmetry(ca40, paper_potential):
    g = energy_gradient(paper_potential, 0.0, [-21e-6, 21e-6], ca40)
    assert g[0] == pytest.approx(-g[1], rel=1e-12)


def test_single_ion_harmonic_well_centers(ca40):
    config = IonConfiguration(ca40, 1, 0)
    res = solve_equilibrium(harmonic_well(537e3), 0.0, config)
    assert res.converged
    assert abs(res.positions[0]) < 1e-12


def test_two_ions_harmonic_well_separation(ca40):
    config = IonConfiguration(ca40, 2, 0)
    res = solve_equilibrium(harmonic_well(537e3), 0.0, config)
    assert res.converged
    d = res.positions[1] - res.positions[0]
    assert d == pytest.approx(8.48451553049297e-6, rel=1e-10)
    # closed form: d = (q^2/(2 pi eps0 m w^2))^(1/3)
    w = 2 * math.pi * 537e3
    expected = (2 * COULOMB_CONSTANT * ca40.charge**2 / (ca40.mass * w * w)) ** (1 / 3)
    assert d == pytest.approx(expected, rel=1e-10)
    # brute-force 2-D grid oracle around the solution
    grid = np.linspace(-8e-6, 8e-6, 81)
    best = None
    for z1 in grid:
        for z2 in grid:
            if z2 <= z1:
                continue
            e = total_energy(harmonic_well(537e3), 0.0, [z1, z2], ca40)
            if best is None or e < best[0]:
                best = (e, z1, z2)
    assert best[2] - best[1] == pytest.approx(d, abs=3e-7)
    assert res.total_energy <= best[0] + 1e-30


def test_three_ions_harmonic_middle_centered(ca40):
    config = IonConfiguration(ca40, 3, 0)
    res = solve_equilibrium(harmonic_well(537e3), 0.0, config)
    assert res.converged
    assert abs(res.positions[1]) < 1e-12


@pytest.mark.parametrize("counts", [(1, 1), (2, 2), (3, 3)])
def test_symmetric_config_antisymmetric_positions(ca40, paper_potential, counts):
    res = solve_equilibrium(paper_potential, 0.0, IonConfiguration(ca40, *counts))
    assert res.converged and not res.escaped
    z = res.positions
    assert np.allclose(z, -z[::-1], atol=1e-12)


@pytest.mark.parametrize("counts", [(1, 1), (2, 1), (3, 2), (3, 3)])
def test_hessian_positive_definite_at_solution(ca40, paper_potential, counts):
    res = solve_equilibrium(paper_potential, 0.0, IonConfiguration(ca40, *counts))
    assert res.converged
    eigenvalues = np.linalg.eigvalsh(
        energy_hessian(paper_potential, 0.0, res.positions, ca40))
    assert np.all(eigenvalues > 0)


def test_energy_never_above_seed(ca40, paper_potential):
    config = IonConfiguration(ca40, 2, 1)
    seeds = default_seed_positions(paper_potential, 0.0, config)
    res = solve_equilibrium(paper_potential, 0.0, config, seed_positions=seeds)
    assert res.converged
    assert res.total_energy <= total_energy(paper_potential, 0.0, seeds, ca40)


@pytest.mark.parametrize("counts,u", [((1, 1), 0.0), ((2, 1), 0.05), ((2, 0), 0.0)])
def test_random_restarts_find_nothing_lower(ca40, paper_potential, counts, u):
    config = IonConfiguration(ca40, *counts)
    res = solve_equilibrium(paper_potential, u, config)
    assert res.converged

    def objective(z):
        if np.any(np.diff(z) <= 0):
            return 1e-10
        try:
            return total_energy(paper_potential, u, z, ca40)
        except CoincidentIonsError:
            return 1e-10

    rng = np.random.default_rng(7)
    seeds = default_seed_positions(paper_potential, u, config)
    best = math.inf
    for _ in range(25):
        start = seeds + rng.uniform(-4e-6, 4e-6, size=len(seeds))
        start.sort()
        out = minimize(objective, start, method="Nelder-Mead",
                       options={"maxfev": 4000, "fatol": 1e-32, "xatol": 1e-14})
        best = min(best, out.fun)
    assert res.total_energy <= best + 1e-30


def test_unconverged_is_flagged(ca40, paper_potential):
    config = IonConfiguration(ca40, 3, 3)
    res = solve_equilibrium(paper_potential, 0.0, config, max_iterations=2)
    assert not res.converged


def test_escaped_flag_set_when_ion_crosses(ca40, paper_potential):
    # both seeds in the right well although one ion was requested on the left
    config = IonConfiguration(ca40, 1, 1)
    res = solve_equilibrium(paper_potential, 0.0, config,
                            seed_positions=np.array([24e-6, 30e-6]))
    assert res.converged
    assert res.escaped


def test_seed_validation(ca40, paper_potential):
    config = IonConfiguration(ca40, 1, 1)
    with pytest.raises(ValueError):
        solve_equilibrium(paper_potential, 0.0, config, seed_positions=[1e-6])
    with pytest.raises(ValueError):
        solve_equilibrium(paper_potential, 0.0, config,
                          seed_positions=[2e-6, 1e-6])


def test_configuration_validation(ca40):
    with pytest.raises(ValueError):
        IonConfiguration(ca40, -1, 2)
    with pytest.raises(ValueError):
        IonConfiguration(ca40, 0, 0)


def test_grad_norm_reported_below_tolerance(ca40, paper_potential):
    res = solve_equilibrium(paper_potential, 0.0, IonConfiguration(ca40, 2, 2))
    assert res.converged
    assert res.grad_norm < 1e-24
