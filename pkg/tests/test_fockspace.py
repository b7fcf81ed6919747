"""Operator and state primitives in the truncated Fock space."""

import numpy as np
import pytest

from kposim import fockspace as fs
from kposim.errors import (BasisError, InvalidDimensionError, TruncationError,
                           UsageError)

import oracles as orc


def test_ladder_smallest():
    a, ad = fs.ladder_ops(2)
    assert np.array_equal(a, [[0, 1], [0, 0]])
    assert np.array_equal(ad, a.conj().T)


def test_ladder_matrix_elements():
    a, _ = fs.ladder_ops(4)
    assert a[2, 3] == pytest.approx(np.sqrt(3))
    assert np.count_nonzero(a) == 3


def test_ladder_commutator():
    # [a, a†] = I away from the top truncated level
    a, ad = fs.ladder_ops(30)
    comm = a @ ad - ad @ a
    dev = comm[:29, :29] - np.eye(29)
    assert np.max(np.abs(dev)) < 1e-12


def test_ladder_matches_handbuilt():
    a, _ = fs.ladder_ops(17)
    assert np.array_equal(a, orc.ladder(17))


def test_invalid_dimension():
    with pytest.raises(InvalidDimensionError):
        fs.ladder_ops(1)
    with pytest.raises(InvalidDimensionError):
        fs.parity_op(0)


def test_parity_diagonal():
    assert np.array_equal(np.diag(fs.parity_op(3)), [1, -1, 1])
    pi = fs.parity_op(12)
    for n in range(12):
        assert pi[n, n] == (-1) ** n
    assert np.array_equal(pi @ pi, np.eye(12))


def test_parity_commutes_with_number():
    pi = fs.parity_op(20)
    n = fs.number_op(20)
    assert np.array_equal(pi @ n, n @ pi)


def test_parity_anticommutes_with_a():
    a, _ = fs.ladder_ops(20)
    pi = fs.parity_op(20)
    anti = pi @ a + a @ pi
    assert np.max(np.abs(anti[:19, :19])) < 1e-12


def test_coherent_vacuum():
    psi = fs.coherent_state(0.0, 10)
    assert psi.amplitudes[0] == pytest.approx(1.0)
    assert np.max(np.abs(psi.amplitudes[1:])) == 0.0


def test_coherent_mean_photon_number():
    psi = fs.coherent_state(1.154, 40)
    nbar = psi.expect(fs.number_op(40)).real
    assert nbar == pytest.approx(1.154 ** 2, abs=1e-6)


def test_coherent_overlap_closed_form():
    # <alpha|-alpha> = exp(-2|alpha|^2)
    plus = fs.coherent_state(1.0, 40)
    minus = fs.coherent_state(-1.0, 40)
    assert abs(plus.overlap(minus) - np.exp(-2.0)) < 1e-8


def test_coherent_matches_recursion_oracle():
    psi = fs.coherent_state(0.8 + 0.3j, 30)
    assert np.max(np.abs(psi.amplitudes - orc.coherent_amplitudes(0.8 + 0.3j, 30))) < 1e-12


def test_coherent_truncation_guard():
    with pytest.raises(TruncationError):
        fs.coherent_state(4.0, 12)


def test_cat_limits_to_vacuum():
    psi = fs.cat_state(1e-8, "even", 10)
    assert abs(psi.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)


def test_cat_parity_eigenstates():
    even = fs.cat_state(1.154, "even", 40)
    odd = fs.cat_state(1.154, "odd", 40)
    pi = fs.parity_op(40)
    assert even.expect(pi).real == pytest.approx(1.0, abs=1e-10)
    assert odd.expect(pi).real == pytest.approx(-1.0, abs=1e-10)
    # opposite parity sectors are exactly orthogonal
    assert abs(even.overlap(odd)) < 1e-12
    # even cat has no odd Fock amplitudes
    assert np.max(np.abs(even.amplitudes[1::2])) < 1e-12


def test_cat_normalization():
    for parity in ("even", "odd"):
        psi = fs.cat_state(0.9, parity, 30)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_displacement_identity():
    assert np.max(np.abs(fs.displacement_op(0.0, 15) - np.eye(15))) < 1e-12


def test_displacement_generates_coherent():
    d = fs.displacement_op(0.7, 30)
    psi = d @ fs.fock_state(0, 30).amplitudes
    assert np.max(np.abs(psi - fs.coherent_state(0.7, 30).amplitudes)) < 1e-8


def test_displacement_inverse():
    d = fs.displacement_op(0.6 - 0.2j, 30)
    dinv = fs.displacement_op(-0.6 + 0.2j, 30)
    assert np.max(np.abs(d @ dinv - np.eye(30))) < 1e-8


def test_displacement_composition_phase():
    # D(a) D(b) = exp(i Im(a conj(b))) D(a+b); compared on the lower block
    # where displaced support stays inside the truncation (the top corner
    # rows of a truncated exponential are meaningless)
    al, be = 0.8, -0.45 + 0.3j
    lhs = fs.displacement_op(al, 40) @ fs.displacement_op(be, 40)
    rhs = np.exp(1j * np.imag(al * np.conj(be))) * fs.displacement_op(al + be, 40)
    assert np.max(np.abs(lhs[:20, :20] - rhs[:20, :20])) < 1e-7


def test_displacement_truncation_guard():
    with pytest.raises(TruncationError):
        fs.displacement_op(3.5, 10)


def test_state_vector_norm_flag():
    with pytest.raises(UsageError):
        fs.StateVector(np.array([1.0, 1.0], dtype=complex))
    unnorm = fs.StateVector(np.array([1.0, 1.0], dtype=complex), normalized=False)
    assert unnorm.norm() == pytest.approx(np.sqrt(2))


def test_density_matrix_invariants():
    rho = fs.fock_state(2, 8).to_density()
    assert rho.trace() == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(1.0)
    with pytest.raises(UsageError):
        fs.DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex))


def test_state_fidelity_pure_states():
    # |<a|b>|^2 = exp(-|a-b|^2)
    psi = fs.coherent_state(0.5, 20)
    phi = fs.coherent_state(-0.5, 20)
    f = fs.state_fidelity(psi.to_density(), phi.to_density())
    assert f == pytest.approx(np.exp(-1.0), abs=1e-8)


def _toy_basis(dim=30, alpha=1.154):
    from kposim import model as md
    return md.CatBasis(fs.cat_state(alpha, "even", dim),
                       fs.cat_state(alpha, "odd", dim), alpha)


def test_cardinal_populations_plus_cat():
    basis = _toy_basis()
    rho = basis.plus_cat.to_density()
    pops = fs.cardinal_populations(rho, basis)
    arr = pops.as_array()
    assert arr[0] == pytest.approx(1.0, abs=1e-10)  # +Cat
    assert arr[1] == pytest.approx(0.0, abs=1e-10)  # -Cat
    for k in range(2, 6):                           # equatorial cardinals
        assert arr[k] == pytest.approx(0.5, abs=1e-10)


def test_cardinal_populations_mixed_qubit():
    basis = _toy_basis()
    rho = fs.DensityMatrix(0.5 * (basis.plus_cat.to_density().entries
                                  + basis.minus_cat.to_density().entries),
                           physical=False)
    arr = fs.cardinal_populations(rho, basis).as_array()
    assert np.max(np.abs(arr - 0.5)) < 1e-10


def test_cardinal_populations_plus_icat():
    basis = _toy_basis()
    cards = fs.cardinal_states(basis)
    arr = fs.cardinal_populations(cards["+iCat"].to_density(), basis).as_array()
    assert arr[4] == pytest.approx(1.0, abs=1e-10)
    assert arr[5] == pytest.approx(0.0, abs=1e-10)


def test_cardinal_pair_sums_equal_qubit_population():
    # each axis pair sums to the same qubit-space population, also with
    # deliberate leakage outside the qubit plane
    basis = _toy_basis()
    vec = 0.8 * basis.plus_cat.amplitudes + 0.6j * basis.minus_cat.amplitudes
    vec = vec / np.linalg.norm(vec) * np.sqrt(0.91)
    vec[7] += 0.3  # ~9% leakage
    vec /= np.linalg.norm(vec)
    rho = fs.DensityMatrix(np.outer(vec, vec.conj()))
    z_sum, x_sum, y_sum = fs.cardinal_populations(rho, basis).axis_sums()
    assert abs(z_sum - x_sum) < 1e-9
    assert abs(z_sum - y_sum) < 1e-9
    assert z_sum < 0.99  # the leaked part is really outside


def test_cardinal_populations_rejects_nonorthogonal_basis():
    from kposim import model as md
    dim = 30
    p = fs.cat_state(1.154, "even", dim)
    skew = fs.StateVector((p.amplitudes + fs.cat_state(1.154, "odd", dim).amplitudes)
                          / np.sqrt(2.0))
    basis = md.CatBasis.__new__(md.CatBasis)
    object.__setattr__(basis, "plus_cat", p)
    object.__setattr__(basis, "minus_cat", skew)
    object.__setattr__(basis, "alpha_eff", 1.154)
    with pytest.raises(BasisError):
        fs.cardinal_populations(p.to_density(), basis)


def test_cardinal_labels_order():
    assert fs.CARDINAL_LABELS == ("+Cat", "-Cat", "+Coh", "-Coh", "+iCat", "-iCat")
