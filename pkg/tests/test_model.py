"""Hamiltonian construction, pulse envelopes, and the model cat basis."""

import numpy as np
import pytest

from kposim import dynamics as dyn
from kposim import fockspace as fs
from kposim import model as md
from kposim import units
from kposim.errors import BasisError, ScheduleError, UsageError

import oracles as orc


PARAMS = md.SystemParams.from_mhz(3.1, 3.13, 1.0, 0.65, dim=30)


def test_params_units_roundtrip():
    assert PARAMS.K == pytest.approx(2 * np.pi * 3.1)
    assert units.angular_to_mhz(PARAMS.P_max) == pytest.approx(3.13)
    assert PARAMS.dim == 30


def test_params_validation():
    with pytest.raises(UsageError):
        md.SystemParams.from_mhz(-1.0)
    with pytest.raises(UsageError):
        md.SystemParams.from_mhz(3.1, kappa_per_us=-0.2)


def test_kerr_only_hamiltonian_diagonal():
    p = md.SystemParams.from_mhz(3.1, 0.0, 0.0, 0.0, dim=12)
    sched = md.hold_schedule(1.0, 0.0, 0.0)
    h = md.hamiltonian_at(p, sched, 0.5)
    n = np.arange(12)
    assert np.max(np.abs(np.diag(h) - (-0.5 * p.K * n * (n - 1)))) < 1e-12
    assert np.max(np.abs(h - np.diag(np.diag(h)))) == 0.0


def test_hamiltonian_matches_handbuilt():
    sched = md.hold_schedule(1.0, PARAMS.P_max, PARAMS.Delta)
    h = md.hamiltonian_at(PARAMS, sched, 0.3)
    ref = orc.kpo_hamiltonian(PARAMS.K, PARAMS.P_max, PARAMS.Delta, 30)
    # entries reach ~1e3 rad/us; 1e-9 absolute is still machine-level here
    assert np.max(np.abs(h - ref)) < 1e-9


def test_hamiltonian_hermitian_along_schedule():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta).then(
        md.drive_schedule(0.2, PARAMS.beta, 1.0, 0.4, PARAMS.P_max, PARAMS.Delta))
    for t in np.linspace(0.0, sched.total_duration, 41):
        h = md.hamiltonian_at(PARAMS, sched, t)
        assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_hamiltonian_time_out_of_range():
    sched = md.hold_schedule(0.5, PARAMS.P_max, PARAMS.Delta)
    with pytest.raises(ScheduleError):
        md.hamiltonian_at(PARAMS, sched, 0.7)


def test_parity_conservation_without_drive():
    # [H, Pi] = 0 exactly at every t when beta = 0
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta).then(
        md.chirp_schedule(2.0, 0.4, PARAMS.P_max, PARAMS.Delta))
    pi = fs.parity_op(30)
    for t in (0.0, 0.11, 0.3, 0.45, 0.7):
        h = md.hamiltonian_at(PARAMS, sched, t)
        assert np.max(np.abs(h @ pi - pi @ h)) == 0.0


def test_schedule_evaluation_deterministic():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    h1 = md.hamiltonian_at(PARAMS, sched, 0.1234567)
    h2 = md.hamiltonian_at(PARAMS, sched, 0.1234567)
    assert np.array_equal(h1, h2)


def test_ramp_envelope_endpoints():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    seg = sched.segments[0]
    assert seg.pump.value(0.0) == pytest.approx(0.0, abs=1e-12)
    assert seg.pump.value(0.3) == pytest.approx(PARAMS.P_max, abs=1e-9)
    # sin^2(pi t / 2 tau) profile at the midpoint
    assert seg.pump.value(0.15) == pytest.approx(0.5 * PARAMS.P_max)


def test_counterdiabatic_term_midpoint():
    # the auxiliary chirp depth at t = tau/2 corresponds to 0.3 P_max
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    seg = sched.segments[0]
    cd = seg.detuning.value(0.15) - seg.detuning_value(0.15)
    assert cd == pytest.approx(0.3 * PARAMS.P_max, rel=1e-9)
    # off at both ends: the detuning returns to the nominal value
    assert seg.detuning_value(0.0) == pytest.approx(PARAMS.Delta)
    assert seg.detuning_value(0.3) == pytest.approx(PARAMS.Delta, abs=1e-9)


def test_ramp_without_counterdiabatic():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta,
                             counterdiabatic=False)
    seg = sched.segments[0]
    assert seg.detuning_value(0.15) == pytest.approx(PARAMS.Delta)


def test_mapping_fidelity_against_expm_oracle():
    # adaptive integrator vs independent fine-step midpoint-expm product
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    basis = md.cat_basis_from_model(PARAMS)
    psi_pkg = dyn.propagate(PARAMS, sched, fs.fock_state(0, 30)).final_state
    psi_orc = orc.expm_propagate(PARAMS, sched, fs.fock_state(0, 30).amplitudes,
                                 n_steps=3000)
    assert abs(np.vdot(psi_pkg.amplitudes, psi_orc)) ** 2 > 1.0 - 1e-9
    fid = abs(np.vdot(basis.plus_cat.amplitudes, psi_pkg.amplitudes)) ** 2
    assert fid == pytest.approx(0.9912650608839326, abs=1e-9)
    assert fid >= 0.99


def test_chirp_zero_depth_is_wait():
    sched = md.chirp_schedule(0.0, 0.5, PARAMS.P_max, PARAMS.Delta)
    assert sched.total_frame_phase == 0.0
    basis = md.cat_basis_from_model(PARAMS)
    out = dyn.propagate(PARAMS, sched, basis.plus_cat).final_state
    # identity up to the deterministic quasienergy phase
    assert abs(np.vdot(basis.plus_cat.amplitudes, out.amplitudes)) ** 2 > 1.0 - 1e-9


def test_chirp_frame_phase_closed_form():
    # integral of sin^2(pi t / tau) over the pulse is tau/2
    dp, tau = 3.7, 0.42
    sched = md.chirp_schedule(dp, tau, PARAMS.P_max, PARAMS.Delta)
    assert sched.total_frame_phase == pytest.approx(dp * tau / 4.0, rel=1e-12)


def test_chirp_rotates_plus_coh_counterclockwise():
    basis = md.cat_basis_from_model(PARAMS)
    cards = fs.cardinal_states(basis)
    azimuths = []
    for dp_mhz in (0.0, 0.3, 0.6, 0.9, 1.2):
        sched = md.chirp_schedule(units.mhz_to_angular(dp_mhz), 0.5,
                                  PARAMS.P_max, PARAMS.Delta)
        out = dyn.propagate(PARAMS, sched, cards["+Coh"]).final_state
        arr = fs.cardinal_populations(out.to_density(), basis).as_array()
        azimuths.append(np.arctan2(arr[4] - arr[5], arr[2] - arr[3]))
    assert np.all(np.diff(azimuths) > 0)


def test_double_chirp_frame_phase_and_parity():
    # a sin^2 chirp is its own time reverse; two in a row give delta*tau/2
    # and, with no drive on, conserve the parity-sector populations exactly
    dp = units.mhz_to_angular(1.0)
    single = md.chirp_schedule(dp, 0.4, PARAMS.P_max, PARAMS.Delta)
    double = single.then(single)
    assert double.total_frame_phase == pytest.approx(dp * 0.4 / 2.0, rel=1e-12)
    basis = md.cat_basis_from_model(PARAMS)
    psi0 = fs.cardinal_states(basis)["+Coh"]
    out = dyn.propagate(PARAMS, double, psi0).final_state
    even = np.arange(30) % 2 == 0
    p_even0 = np.sum(np.abs(psi0.amplitudes[even]) ** 2)
    p_even1 = np.sum(np.abs(out.amplitudes[even]) ** 2)
    assert abs(p_even1 - p_even0) < 1e-8


def test_drive_two_level_leakage():
    # weak resonant drive on the Kerr ladder stays a |0>,|1> two-level system
    beta = 0.05 * PARAMS.K
    h = md.drive_frame_hamiltonian(PARAMS.K, 0.0, beta, 30)
    evals, vecs = np.linalg.eigh(h)
    c0 = vecs.conj().T @ fs.fock_state(0, 30).amplitudes
    leak = 0.0
    for t in np.linspace(0.0, np.pi / beta, 60):
        psi = vecs @ (np.exp(-1j * evals * t) * c0)
        leak = max(leak, 1.0 - abs(psi[0]) ** 2 - abs(psi[1]) ** 2)
    assert leak < 0.02


def test_tls_variants_agree_on_resonance():
    for t in (0.0, 0.37, 1.9):
        hd = md.tls_rabi_hamiltonian("symmetrized", 2.0, 0.0, t)
        hs = md.tls_rabi_hamiltonian("standard", 2.0, 0.0, t)
        sx = np.array([[0, 1], [1, 0]])
        assert np.max(np.abs(hd - sx)) < 1e-12
        assert np.max(np.abs(hs - sx)) < 1e-12


def test_tls_unknown_variant():
    with pytest.raises(UsageError):
        md.tls_rabi_hamiltonian("other", 1.0, 0.0, 0.0)


def test_tls_symmetrized_map_even():
    det = np.linspace(-4.0, 4.0, 9)
    tg = np.linspace(0.0, 2.0, 11)
    m = dyn.tls_rabi_map("symmetrized", 2.5, det, tg)
    assert np.max(np.abs(m - m[::-1, :])) < 1e-9


def test_tls_standard_chevron_closed_form():
    det = np.array([-3.0, -1.0, 0.0, 2.0])
    tg = np.linspace(0.0, 3.0, 25)
    m = dyn.tls_rabi_map("standard", 2.0, det, tg)
    for d, row in zip(det, m):
        assert np.max(np.abs(row - orc.chevron_excited(2.0, d, tg))) < 1e-8


def test_cat_basis_overlap_with_analytic_cat():
    basis = md.cat_basis_from_model(PARAMS)
    alpha_c = np.sqrt((PARAMS.P_max + PARAMS.Delta) / PARAMS.K)
    even = fs.cat_state(alpha_c, "even", 30)
    odd = fs.cat_state(alpha_c, "odd", 30)
    assert abs(basis.plus_cat.overlap(even)) ** 2 >= 0.98
    assert abs(basis.minus_cat.overlap(odd)) ** 2 >= 0.98
    assert abs(basis.plus_cat.overlap(basis.minus_cat)) < 1e-10


def test_cat_basis_phase_convention():
    # <+Coh|+Cat> = 1/sqrt(2), real positive by construction
    basis = md.cat_basis_from_model(PARAMS)
    plus_coh = fs.cardinal_states(basis)["+Coh"]
    ov = plus_coh.overlap(basis.plus_cat)
    assert ov.real > 0
    assert abs(ov.imag) < 1e-12


def test_cat_basis_exact_at_zero_detuning():
    # with Delta = 0 the Hamiltonian factors and the analytic cats are exact
    # eigenstates, so the overlap saturates at 1 for every pump strength
    for p_over_k in (1.0, 2.0, 4.0):
        p = md.SystemParams.from_mhz(3.1, 3.1 * p_over_k, 0.0, dim=40)
        basis = md.cat_basis_from_model(p)
        target = fs.cat_state(np.sqrt(p_over_k), "even", 40)
        assert abs(basis.plus_cat.overlap(target)) ** 2 > 1.0 - 1e-9


def test_cat_basis_converges_to_analytic_cats():
    # at finite detuning the eigenstates approach the analytic cats
    # monotonically as the pump grows
    overlaps = []
    for p_over_k in (1.0, 1.5, 2.0, 3.0, 4.0):
        p = md.SystemParams.from_mhz(3.1, 3.1 * p_over_k, 0.3 * 3.1, dim=40)
        basis = md.cat_basis_from_model(p)
        alpha_c = np.sqrt((p.P_max + p.Delta) / p.K)
        target = fs.cat_state(alpha_c, "even", 40)
        overlaps.append(abs(basis.plus_cat.overlap(target)) ** 2)
    assert np.all(np.diff(overlaps) > 0)
    assert overlaps[0] > 0.98
    assert overlaps[-1] > 1.0 - 1e-3


def test_cat_basis_rejects_far_from_cat_regime():
    # detuning-dominated spectrum: eigenstates are Fock-like, not cats
    p = md.SystemParams.from_mhz(3.1, 0.05, 3.0, dim=30)
    with pytest.raises(BasisError):
        md.cat_basis_from_model(p)


def test_cosine_envelope_value_and_integral():
    env = md.Cosine(1.3, 2.1, 0.4)
    ts = np.linspace(0.0, 1.5, 7)
    for t in ts:
        assert env.value(t) == pytest.approx(1.3 * np.cos(2.1 * t + 0.4))
    # integral against a fine Riemann sum
    tt = np.linspace(0.0, 1.5, 200001)
    riemann = np.trapezoid(1.3 * np.cos(2.1 * tt + 0.4), tt)
    assert env.integral(1.5) == pytest.approx(riemann, abs=1e-8)


def test_schedule_serialization_roundtrip(tmp_path):
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta).then(
        md.drive_schedule(0.25, PARAMS.beta, 1.7, 0.3, PARAMS.P_max,
                          PARAMS.Delta))
    path = tmp_path / "sched.json"
    sched.save(path)
    loaded = md.PulseSchedule.load(path)
    assert loaded.total_duration == pytest.approx(sched.total_duration)
    for t in np.linspace(0.0, sched.total_duration, 17):
        h1 = md.hamiltonian_at(PARAMS, sched, t)
        h2 = md.hamiltonian_at(PARAMS, loaded, t)
        assert np.max(np.abs(h1 - h2)) < 1e-12


def test_pump_continuity_check():
    ramp = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    with pytest.raises(ScheduleError):
        ramp.then(md.hold_schedule(0.2, 0.0, PARAMS.Delta))
    # flagged jumps are allowed
    jump = md.hold_schedule(0.2, 0.0, PARAMS.Delta, pump_jump=True)
    assert ramp.then(jump).total_duration == pytest.approx(0.5)
