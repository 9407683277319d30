import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ionwells as iw
from ionwells.potential import (
    AxialPotential,
    NotADoubleWellError,
    potential_curvature,
    potential_slope,
    stationary_points,
)

CA40_MASS = 6.635944333554532e-26  # kg, frozen for independent arithmetic


def calibrated(r=54e-6, f=537e3, **kw):
    return iw.calibrate_symmetric(r, f, iw.SPECIES["Ca40"], **kw)


coeff = st.floats(min_value=-1e-12, max_value=1e-12)
voltages = st.floats(min_value=-0.5, max_value=0.5)
radii = st.floats(min_value=10e-6, max_value=300e-6)
freqs = st.floats(min_value=50e3, max_value=5e6)


@given(a1=coeff, a2=coeff, u=voltages)
def test_zero_at_origin(a1, a2, u):
    p = AxialPotential(a1, a2, 1e-4, tune1=1e-18)
    assert iw.eval_potential(p, u, 0.0) == 0.0


@given(a2=st.floats(min_value=-1e-12, max_value=-1e-16),
       a4=st.floats(min_value=1e-6, max_value=1e-2))
def test_symmetric_minimum_value(a2, a4):
    p = AxialPotential(0.0, a2, a4)
    z_min = math.sqrt(-a2 / (2 * a4))
    assert iw.eval_potential(p, 0.0, z_min) == pytest.approx(-a2**2 / (4 * a4), rel=1e-12)


def test_paper_potential_value_at_27um():
    p = calibrated()
    # independent plug-in arithmetic with the same frozen constants
    w0 = 2 * math.pi * 537e3
    a2 = -CA40_MASS * w0**2 / 4
    a4 = CA40_MASS * w0**2 / (2 * (54e-6) ** 2)
    z = 27e-6
    expected = a2 * z**2 + a4 * z**4
    assert expected == pytest.approx(-6.884122402796303e-23, rel=1e-12)
    assert iw.eval_potential(p, 0.0, z) == pytest.approx(expected, rel=1e-12)


def test_eval_potential_polynomial_form():
    p = AxialPotential(2e-19, -1e-13, 1e-4, tune1=3e-18, tune2=1e-15)
    u, z = 0.17, 11e-6
    expected = ((2e-19 + u * 3e-18) * z + (-1e-13 + u * 1e-15) * z**2 + 1e-4 * z**4)
    assert iw.eval_potential(p, u, z) == pytest.approx(expected, rel=1e-14)


def test_calibrate_paper_values():
    p = calibrated()
    assert p.alpha1 == 0.0
    assert p.alpha2 == pytest.approx(-1.8886481214804673e-13, rel=1e-12)
    assert p.alpha4 == pytest.approx(1.2953690819481943e-4, rel=1e-12)
    # headline magnitudes
    assert p.alpha2 == pytest.approx(-1.89e-13, rel=1e-2)
    assert p.alpha4 == pytest.approx(1.30e-4, rel=1e-2)


@settings(max_examples=40)
@given(r=radii, f=freqs)
def test_calibrate_find_wells_roundtrip(r, f):
    species = iw.SPECIES["Ca40"]
    wells = iw.find_wells(iw.calibrate_symmetric(r, f, species), 0.0, species)
    assert wells.separation_r == pytest.approx(r, rel=1e-12)
    assert wells.freq_left == pytest.approx(f, rel=1e-12)
    assert wells.freq_right == pytest.approx(f, rel=1e-12)


@given(r=radii, f=freqs)
def test_calibrate_scaling_with_separation(r, f):
    p1 = iw.calibrate_symmetric(r, f, iw.SPECIES["Ca40"])
    p2 = iw.calibrate_symmetric(2 * r, f, iw.SPECIES["Ca40"])
    assert p2.alpha2 == p1.alpha2
    assert p2.alpha4 == pytest.approx(p1.alpha4 / 4, rel=1e-12)


def test_calibrate_rejects_nonpositive_inputs():
    with pytest.raises(ValueError):
        calibrated(r=-1e-6)
    with pytest.raises(ValueError):
        calibrated(f=0.0)


def test_find_wells_paper_geometry(ca40, paper_potential):
    wells = iw.find_wells(paper_potential, 0.0, ca40)
    assert wells.left_min == pytest.approx(-27e-6, rel=1e-12)
    assert wells.right_min == pytest.approx(27e-6, rel=1e-12)
    assert wells.freq_left == pytest.approx(537e3, rel=1e-12)
    assert wells.freq_right == pytest.approx(537e3, rel=1e-12)
    assert wells.barrier_top == pytest.approx(0.0, abs=1e-12)
    assert wells.barrier_height == pytest.approx(6.884122402796303e-23, rel=1e-9)


def test_single_well_raises(ca40):
    p = AxialPotential(0.0, 1e-13, 1e-4)
    with pytest.raises(NotADoubleWellError):
        iw.find_wells(p, 0.0, ca40)


def test_control_voltage_shifts_wells_oppositely(ca40, paper_potential):
    w0 = iw.find_wells(paper_potential, 0.0, ca40)
    w = iw.find_wells(paper_potential, 0.05, ca40)
    dl = w.freq_left - w0.freq_left
    dr = w.freq_right - w0.freq_right
    assert dl * dr < 0
    assert abs(dl) > 1.0 and abs(dr) > 1.0


def test_frequency_shift_monotonic_in_voltage(ca40, paper_potential):
    # tune1 > 0 here: the left well stiffens as u grows, the right softens
    lefts, rights = [], []
    for u in np.linspace(-0.2, 0.2, 9):
        w = iw.find_wells(paper_potential, float(u), ca40)
        lefts.append(w.freq_left)
        rights.append(w.freq_right)
    assert np.all(np.diff(lefts) > 0)
    assert np.all(np.diff(rights) < 0)


@settings(max_examples=30)
@given(u=voltages, z=st.floats(min_value=-60e-6, max_value=60e-6))
def test_even_when_effective_linear_term_vanishes(u, z):
    # alpha1 = -u*tune1 cancels the control tilt exactly
    p = AxialPotential(-u * 5e-18, -1.8e-13, 1.3e-4, tune1=5e-18)
    assert iw.eval_potential(p, u, z) == pytest.approx(
        iw.eval_potential(p, u, -z), rel=1e-12, abs=1e-40)


@settings(max_examples=40, deadline=None)
@given(r=radii, f=freqs, u_frac=st.floats(min_value=-0.5, max_value=0.5))
def test_reported_minima_are_stationary(r, f, u_frac):
    species = iw.SPECIES["Ca40"]
    p = iw.calibrate_symmetric(r, f, species, tune1=5e-18)
    # keep the tilt safely inside the double-well domain
    w0 = 2 * math.pi * f
    u = u_frac * (4 * p.alpha4 * (-p.alpha2 / (6 * p.alpha4)) ** 1.5 * 2) / 5e-18
    try:
        wells = iw.find_wells(p, u, species)
    except NotADoubleWellError:
        return
    for z in (wells.left_min, wells.right_min):
        assert abs(potential_slope(p, u, z)) < 1e-24
        assert potential_curvature(p, u, z) > 0.0
    assert wells.left_min < wells.barrier_top < wells.right_min
    assert wells.separation_r == pytest.approx(wells.right_min - wells.left_min)
    assert wells.barrier_height >= 0.0


def test_stationary_points_pure_harmonic():
    p = AxialPotential(1e-19, 1e-13, 0.0)
    pts = stationary_points(p, 0.0)
    assert len(pts) == 1
    assert pts[0] == pytest.approx(-1e-19 / (2e-13), rel=1e-12)


def test_negative_alpha4_rejected():
    with pytest.raises(ValueError):
        AxialPotential(0.0, -1e-13, -1e-5)


def test_species_validation():
    with pytest.raises(ValueError):
        iw.IonSpecies(charge=0.0, mass=1e-26)
    with pytest.raises(ValueError):
        iw.IonSpecies(charge=1.6e-19, mass=-1.0)
