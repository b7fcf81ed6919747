"""Quasienergy spectra, splitting surfaces, and classical energy analysis."""

import numpy as np
import pytest

from kposim import fockspace as fs
from kposim import spectral as sp
from kposim import units
from kposim.errors import TruncationError, UsageError

K = units.mhz_to_angular(3.1)
P = units.mhz_to_angular(3.13)
DELTA = units.mhz_to_angular(1.0)


def test_kerr_ladder_spectrum():
    spec = sp.quasienergies(K, 0.0, 0.0, 20, check_convergence=False)
    # energies sorted descending must match -(K/2) n(n-1) with parity (-1)^n
    n = np.arange(20)
    ladder = -0.5 * K * n * (n - 1)
    assert np.max(np.abs(np.sort(spec.energies) - np.sort(ladder))) < 1e-9
    # the degenerate top pair {|0>,|1>} carries one parity of each sign
    assert set(spec.parities[:2]) == {1, -1}


def test_headline_splitting():
    spec = sp.quasienergies(K, P, DELTA, 30)
    assert spec.splitting_mhz == pytest.approx(0.31888489419652216, abs=1e-12)
    assert abs(spec.splitting_mhz - 0.318) < 0.005
    # odd qubit level sits above the even one here
    assert spec.splitting > 0


def test_qubit_levels_are_highest():
    spec = sp.quasienergies(K, P, DELTA, 30)
    i_even, i_odd = spec.qubit_indices
    assert {i_even, i_odd} == {0, 1}
    assert spec.parities[i_even] == 1
    assert spec.parities[i_odd] == -1


def test_eigenstates_have_definite_parity():
    spec = sp.quasienergies(K, P, DELTA, 30)
    pi = fs.parity_op(30)
    for k in range(6):
        psi = spec.states[:, k]
        assert abs(np.vdot(psi, pi @ psi).real) > 0.999


def test_dim_convergence_of_top_levels():
    s30 = sp.quasienergies(K, P, DELTA, 30, check_convergence=False)
    s40 = sp.quasienergies(K, P, DELTA, 40, check_convergence=False)
    assert np.max(np.abs(s30.energies[:6] - s40.energies[:6])) < 1e-6 * K


def test_truncation_error_when_not_converged():
    with pytest.raises(TruncationError):
        sp.quasienergies(K, 40.0 * K, 0.0, 10)


def test_splitting_decays_along_pump_at_fixed_detuning():
    # exponential suppression of the splitting as the cat grows
    vals = [abs(sp.quasienergies(K, pk * K, 0.32 * K, 30).splitting)
            for pk in np.linspace(0.5, 3.0, 10)]
    assert np.all(np.diff(vals) < 0)
    assert vals[0] / vals[-1] > 50


def test_splitting_at_zero_detuning_is_degenerate():
    # at Delta = 0 the Hamiltonian factors and the cat pair is exactly
    # degenerate; the computed splitting sits at the eigensolver noise floor,
    # far below any value at finite detuning
    for pk in (0.5, 1.01, 2.0, 3.0):
        s0 = abs(sp.quasienergies(K, pk * K, 0.0, 30).splitting)
        assert s0 < 1e-3 * K
    s_finite = abs(sp.quasienergies(K, 1.01 * K, 0.32 * K, 30).splitting)
    assert abs(sp.quasienergies(K, 1.01 * K, 0.0, 30).splitting) < 1e-6 * s_finite


def test_splitting_sign_change_along_detuning():
    dg = np.linspace(0.05, 1.2, 24)
    row = np.array([sp.quasienergies(K, 1.01 * K, d * K, 30).splitting
                    for d in dg])
    signs = np.sign(row)
    assert np.any(np.diff(signs) != 0)
    # the crossing is a zero, not a jump: refine and find a tiny |splitting|
    i = int(np.where(np.diff(signs) != 0)[0][0])
    fine = np.linspace(dg[i], dg[i + 1], 51)
    fine_vals = [abs(sp.quasienergies(K, 1.01 * K, d * K, 30).splitting)
                 for d in fine]
    assert min(fine_vals) < 1e-3 * K


def test_splitting_surface_shape_and_point():
    pk = np.linspace(0.8, 1.2, 5)
    dk = np.linspace(0.1, 0.5, 5)
    surf = sp.splitting_surface(K, pk, dk, 30)
    assert surf.shape == (5, 5)
    # operating point P/K=1.01, Delta/K=0.32 sits near splitting/K ~ 0.103
    val = sp.quasienergies(K, 1.01 * K, 0.32 * K, 30).splitting / K
    assert val == pytest.approx(0.318 / 3.1, abs=0.01)


def test_classical_energy_formula():
    alpha = 0.7 - 0.4j
    e = sp.classical_energy(alpha, K, P, DELTA)
    expected = (DELTA * abs(alpha) ** 2 - 0.5 * K * abs(alpha) ** 4
                + 0.5 * P * (alpha ** 2 + np.conj(alpha) ** 2).real)
    assert e == pytest.approx(expected, rel=1e-12)


def test_stationary_points_at_operating_point():
    pts = sp.stationary_points(K, P, DELTA)
    nonzero = [p for p in pts if abs(p.alpha) > 1e-6]
    assert len(nonzero) == 2
    target = np.sqrt((P + DELTA) / K)
    assert target == pytest.approx(1.1542, abs=1e-4)
    for p in nonzero:
        assert abs(p.alpha) == pytest.approx(target, rel=1e-9)
        assert abs(p.alpha.imag) < 1e-9


def test_stationary_points_symmetric_pair():
    pts = sp.stationary_points(K, P, DELTA)
    alphas = sorted(p.alpha.real for p in pts if abs(p.alpha) > 1e-6)
    assert alphas[0] == pytest.approx(-alphas[1], abs=1e-9)


def test_stationary_points_no_bifurcation():
    # P + Delta <= 0: only the origin
    pts = sp.stationary_points(K, 0.5 * K, -0.8 * K)
    assert all(abs(p.alpha) < 1e-6 for p in pts)


def test_stationary_points_grid_formula():
    # the located extrema track sqrt((P+Delta)/K) across the plane
    for pk in np.linspace(0.5, 3.0, 4):
        for dk in np.linspace(0.0, 1.0, 4):
            pts = sp.stationary_points(K, pk * K, dk * K)
            nz = [abs(p.alpha) for p in pts if abs(p.alpha) > 1e-6]
            target = np.sqrt(pk + dk)
            assert max(nz) == pytest.approx(target, rel=1e-9)


def test_energy_gap_at_operating_point():
    gap = sp.energy_gap(K, P, DELTA, 30)
    assert gap / K == pytest.approx(1.3598872594055558, abs=1e-9)
    assert 1.2 <= gap / K <= 1.6


def test_energy_gap_monotone_in_pump():
    gaps = [sp.energy_gap(K, pk * K, DELTA, 30)
            for pk in np.linspace(1.0, 3.0, 6)]
    assert np.all(np.diff(gaps) > 0)


def test_energy_gap_kerr_ladder():
    assert sp.energy_gap(K, 0.0, 0.0, 20) == pytest.approx(K, rel=1e-12)


def test_quasienergies_input_validation():
    with pytest.raises(UsageError):
        sp.quasienergies(-1.0, P, DELTA, 30)
