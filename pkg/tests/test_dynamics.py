"""Propagation, Rabi maps, relaxation series, and curve fitting."""

import numpy as np
import pytest

from kposim import dynamics as dyn
from kposim import fockspace as fs
from kposim import model as md
from kposim import units
from kposim.errors import DegenerateDataError, FitError, UsageError

import oracles as orc


PARAMS = md.SystemParams.from_mhz(3.1, 3.13, 1.0, 0.65, dim=30)


def test_constant_diagonal_hamiltonian_exact_phases():
    # pure Kerr evolution of a Fock superposition: amplitudes pick up
    # e^{-i E_n t} with E_n = -(K/2) n(n-1)
    p = md.SystemParams.from_mhz(3.1, 0.0, 0.0, 0.0, dim=12)
    amps = np.zeros(12, dtype=complex)
    amps[[0, 1, 3]] = np.sqrt([0.5, 0.3, 0.2])
    psi0 = fs.StateVector(amps)
    t_end = 0.7
    sched = md.hold_schedule(t_end, 0.0, 0.0)
    out = dyn.propagate(p, sched, psi0).final_state
    n = np.arange(12)
    expected = amps * np.exp(1j * 0.5 * p.K * n * (n - 1) * t_end)
    assert np.max(np.abs(out.amplitudes - expected)) < 1e-9


def test_single_photon_decay():
    # H diagonal and rho diagonal: populations decay exactly as rate eqs say
    p = md.SystemParams.from_mhz(3.1, 0.0, 0.0, 0.0, dim=8, kappa_per_us=0.1)
    sched = md.hold_schedule(3.0, 0.0, 0.0)
    times = np.linspace(0.5, 3.0, 6)
    traj = dyn.propagate(p, sched, fs.fock_state(1, 8), sample_times=times)
    for t, state in zip(times, traj.states):
        assert state.entries[1, 1].real == pytest.approx(np.exp(-0.1 * t), abs=1e-6)


def test_lindblad_matches_rk4_oracle():
    p = md.SystemParams.from_mhz(3.1, 2.0, 0.5, dim=12)
    sched = md.hold_schedule(1.0, p.P_max, p.Delta)
    rho0 = fs.cat_state(1.0, "even", 12).to_density()
    out = dyn.propagate(p, sched, rho0, kappa=0.3).final_state
    # agreement is limited by the oracle's own fixed-step error (~3e-8 here)
    ref = orc.rk4_propagate_lindblad(p, sched, rho0.entries, 0.3, n_steps=8000)
    assert np.max(np.abs(out.entries - ref)) < 1e-7


def test_unitary_norm_preserved():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    traj = dyn.propagate(PARAMS, sched, fs.fock_state(0, 30),
                         sample_times=np.linspace(0.03, 0.3, 10))
    for s in traj.states:
        assert abs(s.norm() - 1.0) < 1e-8


def test_lindblad_trace_and_positivity():
    sched = md.hold_schedule(2.0, PARAMS.P_max, PARAMS.Delta)
    basis = md.cat_basis_from_model(PARAMS)
    traj = dyn.propagate(PARAMS, sched, basis.plus_cat, kappa=0.1,
                         sample_times=np.linspace(0.25, 2.0, 8))
    for s in traj.states:
        assert abs(s.trace() - 1.0) < 1e-8
        assert s.eigmin() > -1e-7


def test_purity_nonincreasing_under_loss():
    # early-time contraction of a mixed state under loss; at much longer
    # times the purity climbs back toward 1 as everything decays to vacuum,
    # so the window stays short of that turnaround
    p = md.SystemParams.from_mhz(3.1, 0.0, 0.0, 0.0, dim=10)
    ent = 0.6 * fs.fock_state(0, 10).to_density().entries \
        + 0.4 * fs.fock_state(2, 10).to_density().entries
    rho0 = fs.DensityMatrix(ent, physical=False)
    sched = md.hold_schedule(1.0, 0.0, 0.0)
    traj = dyn.propagate(p, sched, rho0, kappa=0.2,
                         sample_times=np.linspace(0.0, 1.0, 9))
    purities = [s.purity() for s in traj.states]
    assert np.all(np.diff(purities) < 1e-10)


def test_parity_conserved_without_drive():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta).then(
        md.hold_schedule(0.5, PARAMS.P_max, PARAMS.Delta))
    pi = fs.parity_op(30)
    traj = dyn.propagate(PARAMS, sched, fs.fock_state(0, 30),
                         sample_times=np.linspace(0.1, 0.8, 8))
    for s in traj.states:
        assert abs(s.expect(pi).real - 1.0) < 1e-8


def test_tolerance_convergence():
    sched = md.ramp_schedule(PARAMS.P_max, 0.3, PARAMS.Delta)
    out1 = dyn.propagate(PARAMS, sched, fs.fock_state(0, 30)).final_state
    out2 = dyn.propagate(PARAMS, sched, fs.fock_state(0, 30),
                         rtol=0.5 * dyn.DEFAULT_RTOL,
                         atol=0.5 * dyn.DEFAULT_ATOL).final_state
    pops1 = np.abs(out1.amplitudes) ** 2
    pops2 = np.abs(out2.amplitudes) ** 2
    assert np.max(np.abs(pops1 - pops2)) < 1e-6


def test_sample_time_validation():
    sched = md.hold_schedule(1.0, 0.0, 0.0)
    p = md.SystemParams.from_mhz(3.1, dim=8)
    with pytest.raises(UsageError):
        dyn.propagate(p, sched, fs.fock_state(0, 8),
                      sample_times=np.array([0.2, 0.1]))
    with pytest.raises(UsageError):
        dyn.propagate(p, sched, fs.fock_state(0, 8),
                      sample_times=np.array([0.5, 1.5]))


# ---------------------------------------------------------------------------
# Rabi maps


def test_rabi_map_drive_features():
    # transitions of the Kerr ladder: 0->1 at zero drive detuning, and the
    # weak two-photon 0->2 feature at K/2 (from E_n = -(K/2) n(n-1))
    K = PARAMS.K
    beta = 0.05 * K
    tg = np.linspace(0.0, 4.0, 161)
    det = np.array([-0.5 * K, 0.0, 0.5 * K, 0.75 * K, 1.0 * K])
    m = dyn.rabi_map(PARAMS, "drive", beta, det, tg)
    assert m[1].min() < 0.01          # resonant stripe, full contrast
    assert m[2].min() < 0.75          # two-photon dip, partial at this span
    assert m[2].min() < m[0].min() - 0.2   # and clearly absent at -K/2
    assert m[3].min() > 0.95          # flat in between
    assert m[4].min() > 0.95


def test_rabi_map_pump_features():
    # pump features at Delta = K/2 (0->2) and 3K/2 (0->4)
    K = PARAMS.K
    tg = np.linspace(0.0, 6.0, 241)
    det = np.array([0.0, 0.5 * K, 1.0 * K, 1.5 * K, 2.0 * K])
    m = dyn.rabi_map(PARAMS, "pump", 0.2 * K, det, tg)
    assert m[1].min() < 0.05
    assert m[3].min() < 0.05
    assert m[0].min() > 0.9
    assert m[2].min() > 0.9
    assert m[4].min() > 0.9


def test_rabi_map_dim2_reduces_to_chevron():
    # with dim=2 the drive model is exactly a two-level system
    p2 = md.SystemParams.from_mhz(3.1, dim=2)
    beta = 1.3
    det = np.linspace(-3.0, 3.0, 7)
    tg = np.linspace(0.0, 2.5, 41)
    m = dyn.rabi_map(p2, "drive", beta, det, tg)
    for d, row in zip(det, m):
        ideal = 1.0 - orc.chevron_excited(2.0 * beta, d, tg)
        assert np.max(np.abs(row - ideal)) < 0.02


def test_strong_drive_resembles_coherent_state():
    # beta/K >> 1 at short times: the driven vacuum is close to |alpha = -i beta t>
    K = PARAMS.K
    beta = 10.0 * K
    t = 0.005  # t*K ~ 0.1
    h = md.drive_frame_hamiltonian(K, 0.0, beta, 30)
    evals, vecs = np.linalg.eigh(h)
    psi = vecs @ (np.exp(-1j * evals * t) * (vecs.conj().T
                                             @ fs.fock_state(0, 30).amplitudes))
    target = fs.coherent_state(-1j * beta * t, 30)
    assert abs(np.vdot(target.amplitudes, psi)) ** 2 > 0.95


def test_rabi_map_input_validation():
    with pytest.raises(UsageError):
        dyn.rabi_map(PARAMS, "both", 1.0, np.array([0.0]), np.array([0.0, 1.0]))
    with pytest.raises(UsageError):
        dyn.rabi_map(PARAMS, "drive", 1.0, np.array([]), np.array([0.0, 1.0]))


# ---------------------------------------------------------------------------
# cat-qubit maps


def test_cat_rabi_map_symmetrized_even():
    det = units.mhz_to_angular(np.linspace(-1.5, 1.5, 7))
    tg = np.linspace(0.0, 0.5, 5)
    m = dyn.cat_rabi_map(PARAMS, det, tg)
    assert np.sqrt(np.mean((m - m[::-1, :]) ** 2)) < 1e-12


def test_cat_rabi_map_single_tone_asymmetric():
    # a single drive tone leaves a percent-level odd component in the map
    det = units.mhz_to_angular(np.array([-1.0, 1.0]))
    tg = np.linspace(0.0, 0.9, 7)
    m = dyn.cat_rabi_map(PARAMS, det, tg, symmetrized=False)
    assert np.max(np.abs(m[0] - m[1])) > 0.01


def test_cat_rabi_resonant_frequency():
    # on-resonance parity oscillation at 2 beta <+Cat|(a+a†)|-Cat>
    from kposim import qpt
    basis = md.cat_basis_from_model(PARAMS)
    omega_r = 2.0 * PARAMS.beta * qpt.x2_coupling(basis)
    tg = np.linspace(0.0, 1.2, 41)
    row = dyn.cat_rabi_map(PARAMS, np.array([0.0]), tg)[0]
    fit = dyn.fit_damped_cosine(tg, row)
    assert fit.frequency == pytest.approx(units.angular_to_mhz(omega_r), rel=0.01)


def test_cat_rabi_phase_map_runs():
    phis = np.linspace(0.0, np.pi, 5)
    tg = np.linspace(0.0, 0.4, 4)
    m = dyn.cat_rabi_phase_map(PARAMS, phis, tg)
    assert m.shape == (5, 4)
    assert np.max(np.abs(m)) <= 1.0 + 1e-9
    # the t=0 column is the initial +Cat parity
    assert np.max(np.abs(m[:, 0] - m[0, 0])) < 1e-9


def test_cat_ramsey_fringe():
    # deeper chirps rotate further between the two X/2 pulses; the parity
    # after the sequence sweeps out a fringe
    from kposim import qpt
    cal = qpt.calibrate_x2(PARAMS)
    dps = units.mhz_to_angular(np.linspace(0.0, 4.0, 9))
    m = dyn.cat_ramsey_map(PARAMS, dps, np.array([0.5]), cal["duration"])
    col = m[:, 0]
    assert np.ptp(col) > 1.0   # fringe swings over most of [-1, 1]
    # with no chirp the free precession between the pulses leaves the
    # sequence on the lower half of the fringe; deep chirps unwind it
    assert col[0] < -0.3
    assert col.max() > 0.8


# ---------------------------------------------------------------------------
# relaxation experiment


def test_relaxation_closed_system():
    wg = np.linspace(0.0, 6.0, 61)
    res = dyn.relaxation_experiment(PARAMS, 0.0, wg, prepare="ideal")
    zs, zd = res.axis_series("z")
    assert np.max(np.abs(zd - 1.0)) < 1e-6
    assert np.max(np.abs(zs - 1.0)) < 1e-6
    # x and y differences oscillate at the quasienergy splitting, undamped
    from kposim import spectral as sp
    split = sp.quasienergies(PARAMS.K, PARAMS.P_max, PARAMS.Delta, 30).splitting_mhz
    for axis in ("x", "y"):
        fit = dyn.fit_damped_cosine(wg, res.differences[axis])
        assert fit.frequency == pytest.approx(split, rel=1e-6)
        assert fit.rate < 1e-6


def test_relaxation_open_system():
    # shorter window than the headline experiment, enough for the z fit;
    # the oscillation-frequency check lives with the 6 us run elsewhere
    wg = np.linspace(0.0, 4.0, 41)
    res = dyn.relaxation_experiment(PARAMS, 0.1, wg, prepare="ramp")
    fit = dyn.fit_exp_decay(wg, res.differences["z"])
    t_z = 1.0 / fit.rate
    assert t_z == pytest.approx(3.529179264519292, abs=0.02)
    assert 3.2 <= t_z <= 5.3
    # loss flips parity: +Cat population falls while -Cat grows from zero
    pz = res.populations["z"]
    assert pz[0, 0] > 0.99
    assert pz[1, 0] < 1e-6
    assert np.all(np.diff(pz[1, :5]) > 0)
    assert np.all(np.diff(pz[0, :5]) < 0)


def test_relaxation_input_validation():
    with pytest.raises(UsageError):
        dyn.relaxation_experiment(PARAMS, 0.1, np.array([0.0]), prepare="ideal")
    with pytest.raises(UsageError):
        dyn.relaxation_experiment(PARAMS, 0.1, np.linspace(0, 1, 5),
                                  prepare="other")


# ---------------------------------------------------------------------------
# fitting


def test_fit_exp_decay_roundtrip():
    t = np.linspace(0.0, 10.0, 60)
    y = np.exp(-t / 4.2)
    fit = dyn.fit_exp_decay(t, y)
    assert 1.0 / fit.rate == pytest.approx(4.2, abs=1e-6)


def test_fit_damped_cosine_roundtrip():
    t = np.linspace(0.0, 10.0, 120)
    y = np.cos(2 * np.pi * 0.317 * t) * np.exp(-t / 6.6)
    fit = dyn.fit_damped_cosine(t, y)
    assert fit.frequency == pytest.approx(0.317, abs=1e-6)
    assert 1.0 / fit.rate == pytest.approx(6.6, abs=1e-5)


def test_fit_damped_cosine_with_offset_and_phase():
    t = np.linspace(0.0, 8.0, 100)
    y = 0.4 * np.cos(2 * np.pi * 0.5 * t + 0.7) * np.exp(-t / 3.0) + 0.25
    fit = dyn.fit_damped_cosine(t, y)
    assert fit.frequency == pytest.approx(0.5, abs=1e-8)
    assert fit.offset == pytest.approx(0.25, abs=1e-8)
    assert fit.phase == pytest.approx(0.7, abs=1e-6)


def test_fit_rejects_constant_series():
    t = np.linspace(0.0, 5.0, 30)
    with pytest.raises(DegenerateDataError):
        dyn.fit_damped_cosine(t, np.full(30, 0.7))


def test_fit_rejects_too_few_points():
    with pytest.raises(UsageError):
        dyn.fit_exp_decay(np.linspace(0, 1, 5), np.exp(-np.linspace(0, 1, 5)))


def test_fit_damped_cosine_needs_periods():
    # less than 1.5 periods of signal in the window
    t = np.linspace(0.0, 1.0, 40)
    y = np.cos(2 * np.pi * 0.3 * t)
    with pytest.raises((FitError, UsageError)):
        dyn.fit_damped_cosine(t, y)
