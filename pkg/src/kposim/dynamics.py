"""Time propagation and relaxation/oscillation analysis.

Schroedinger and Lindblad integration of pulse schedules built in
:mod:`kposim.model`, plain and parametric Rabi population maps, the
cardinal-state relaxation experiment, and deterministic least-squares fits
(exponential decay, damped cosine) used to extract lifetimes and oscillation
frequencies from the simulated data.

All frequencies are angular (rad/us) internally; fits report ordinary
frequency in MHz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from . import fockspace as fs
from . import model as md
from .errors import (AccuracyError, DegenerateDataError, FitError,
                     StiffnessError, UsageError)
from .parallel import parallel_map
from .units import TWO_PI

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of a propagation run.

    ``states`` holds one StateVector (unitary branch) or DensityMatrix
    (Lindblad branch) per entry of ``times``.  ``meta`` records integrator
    tolerances and step statistics.
    """

    times: np.ndarray
    states: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size != len(self.states):
            raise UsageError("times and states must have matching length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise UsageError("sample times must be strictly increasing")

    @property
    def final_state(self):
        return self.states[-1]

    def expect(self, operator):
        """Expectation-value series ⟨O⟩(t), real part."""
        return np.array([s.expect(operator) for s in self.states])

    def population(self, n):
        """Population of Fock level ``n`` along the trajectory."""
        out = np.empty(len(self.states))
        for i, s in enumerate(self.states):
            if isinstance(s, fs.StateVector):
                out[i] = abs(s.amplitudes[n]) ** 2
            else:
                out[i] = s.entries[n, n].real
        return out


def _ket_rhs(params, schedule):
    def rhs(t, y):
        H = md.hamiltonian_at(params, schedule, t)
        return -1j * (H @ y)

    return rhs


def _lindblad_rhs(params, schedule, kappa):
    blk = md._blocks(params.dim)
    a = blk["a"]
    adag = blk["adag"]
    n_diag = blk["n_diag"]
    dim = params.dim

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        H = md.hamiltonian_at(params, schedule, t)
        drho = -1j * (H @ rho - rho @ H)
        if kappa > 0.0:
            drho += kappa * (a @ rho @ adag)
            drho -= (0.5 * kappa) * (n_diag[:, None] + n_diag[None, :]) * rho
        return drho.reshape(-1)

    return rhs


def _solve_segment(rhs, y0, t0, t1, t_eval, rtol, atol):
    """Integrate one segment, returning (samples, y_end, nfev)."""
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853",
                    t_eval=t_eval if len(t_eval) else None,
                    rtol=rtol, atol=atol, dense_output=False)
    if not sol.success:
        reached = sol.t[-1] if sol.t.size else t0
        raise StiffnessError(
            f"integrator failed near t = {reached:.6f} us: {sol.message}",
            time=reached)
    if len(t_eval):
        samples = [sol.y[:, k] for k in range(sol.y.shape[1])]
    else:
        samples = []
    # endpoint state: rerun tail if t1 was not among t_eval
    if len(t_eval) and abs(t_eval[-1] - t1) < 1e-15:
        y_end = samples[-1]
        nfev = sol.nfev
    else:
        start = t_eval[-1] if len(t_eval) else t0
        y_start = samples[-1] if len(t_eval) else y0
        if abs(start - t1) < 1e-15:
            y_end = y_start
            nfev = sol.nfev
        else:
            sol2 = solve_ivp(rhs, (start, t1), y_start, method="DOP853",
                             rtol=rtol, atol=atol)
            if not sol2.success:
                raise StiffnessError(
                    f"integrator failed near t = {sol2.t[-1]:.6f} us: {sol2.message}",
                    time=sol2.t[-1])
            y_end = sol2.y[:, -1]
            nfev = sol.nfev + sol2.nfev
    return samples, y_end, nfev


def _static_ket_samples(H, y0, t0, t_points, t1):
    """Exact e^{-iH(t-t0)} propagation for a constant Hermitian H."""
    evals, vecs = np.linalg.eigh(H)
    c0 = vecs.conj().T @ y0
    samples = []
    for t in t_points:
        samples.append(vecs @ (np.exp(-1j * evals * (t - t0)) * c0))
    y_end = vecs @ (np.exp(-1j * evals * (t1 - t0)) * c0)
    return samples, y_end


def propagate(params, schedule, initial, sample_times=None, kappa=None,
              rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Propagate a state through a pulse schedule.

    With ``kappa`` > 0 (default: ``params.kappa``) the single-photon-loss
    Lindblad equation drho/dt = -i[H, rho] + kappa (a rho a† - {n, rho}/2)
    is integrated and a pure initial state is promoted to a density matrix;
    otherwise the Schroedinger equation is solved.  ``sample_times`` (us,
    within the schedule) selects the returned samples; the final time is
    always included.  Norm/trace drift beyond 1e-8 raises
    :class:`AccuracyError`; integrator breakdown raises
    :class:`StiffnessError` with the time reached.
    """
    if kappa is None:
        kappa = params.kappa
    total = schedule.total_duration
    if sample_times is None:
        sample_times = np.array([total])
    t_s = np.asarray(sample_times, dtype=float)
    if t_s.ndim != 1 or t_s.size == 0:
        raise UsageError("sample_times must be a nonempty 1-D sequence")
    if np.any(np.diff(t_s) <= 0):
        raise UsageError("sample_times must be strictly increasing")
    if t_s[0] < -1e-12 or t_s[-1] > total + 1e-9:
        raise UsageError(
            f"sample_times must lie within [0, {total}], got "
            f"[{t_s[0]}, {t_s[-1]}]")
    t_s = np.clip(t_s, 0.0, total)

    density = kappa > 0.0 or isinstance(initial, fs.DensityMatrix)
    if density:
        if isinstance(initial, fs.StateVector):
            initial = initial.to_density()
        y = initial.entries.astype(np.complex128).reshape(-1).copy()
    else:
        y = initial.amplitudes.astype(np.complex128).copy()
    if (density and initial.dim != params.dim) or (not density and initial.dim != params.dim):
        raise UsageError(
            f"state dimension {initial.dim} != params.dim {params.dim}")

    include_zero = abs(t_s[0]) < 1e-15
    states = []
    times_out = []
    if include_zero:
        states.append(_freeze(y, density, params.dim, t=0.0))
        times_out.append(0.0)
        t_pending = t_s[1:]
    else:
        t_pending = t_s

    nfev_total = 0
    t_cursor = 0.0
    for idx, seg in enumerate(schedule.segments):
        t0, t1 = t_cursor, t_cursor + seg.duration
        in_seg = t_pending[(t_pending > t0 + 1e-15) & (t_pending <= t1 + 1e-15)]
        # samples caught by the boundary tolerance must not leave the span
        in_seg = np.clip(in_seg, t0, t1)
        if not density and seg.is_static():
            H = md.hamiltonian_at(params, schedule, 0.5 * (t0 + t1))
            samples, y = _static_ket_samples(H, y, t0, in_seg, t1)
        else:
            rhs = (_lindblad_rhs(params, schedule, kappa) if density
                   else _ket_rhs(params, schedule))
            samples, y, nfev = _solve_segment(rhs, y, t0, t1, in_seg, rtol, atol)
            nfev_total += nfev
        for t, ys in zip(in_seg, samples):
            states.append(_freeze(ys, density, params.dim, t=t))
            times_out.append(t)
        t_cursor = t1

    meta = {"rtol": rtol, "atol": atol, "nfev": nfev_total,
            "kappa": kappa, "branch": "lindblad" if density else "unitary"}
    return Trajectory(np.array(times_out), tuple(states), meta)


def _freeze(y, density, dim, t):
    """Wrap raw solver output into a state object, checking conservation."""
    if density:
        rho = y.reshape(dim, dim)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-8:
            raise AccuracyError(
                f"trace drifted to {tr:.12f} at t = {t:.6f} us; "
                "tighten tolerances")
        rho = 0.5 * (rho + rho.conj().T)
        eigmin = float(np.linalg.eigvalsh(rho)[0])
        if eigmin < -1e-7:
            raise AccuracyError(
                f"negative population {eigmin:.3e} at t = {t:.6f} us; "
                "tighten tolerances")
        return fs.DensityMatrix(rho, physical=False)
    nrm = np.linalg.norm(y)
    if abs(nrm - 1.0) > 1e-8:
        raise AccuracyError(
            f"norm drifted to {nrm:.12f} at t = {t:.6f} us; "
            "tighten tolerances")
    return fs.StateVector(y / nrm)


# ---------------------------------------------------------------------------
# Rabi maps


def _rabi_column(args):
    H, time_grid, psi0 = args
    evals, vecs = np.linalg.eigh(H)
    c0 = vecs.conj().T @ psi0
    row0 = vecs[0, :]
    # P0(t) = |sum_k row0[k] e^{-i E_k t} c0[k]|^2
    phases = np.exp(-1j * np.outer(time_grid, evals))
    amp = phases @ (row0 * c0)
    return np.abs(amp) ** 2


def rabi_map(params, which, amplitude, detuning_grid, time_grid, workers=None):
    """|0>-population map of a driven Rabi experiment.

    ``which='drive'``: linear drive of amplitude ``amplitude`` (rad/us) on
    the bare Kerr ladder, detuning axis = drive detuning from the 0->1
    transition.  ``which='pump'``: rectangular two-photon pump of that
    amplitude, detuning axis = pump-referenced detuning of the oscillator.
    Returns an array of shape (len(detuning_grid), len(time_grid)).
    """
    det = np.asarray(detuning_grid, dtype=float)
    tg = np.asarray(time_grid, dtype=float)
    if det.size == 0 or tg.size == 0:
        raise UsageError("detuning_grid and time_grid must be nonempty")
    psi0 = fs.fock_state(0, params.dim).amplitudes
    if which == "drive":
        mats = [md.drive_frame_hamiltonian(params.K, d, amplitude, params.dim)
                for d in det]
    elif which == "pump":
        mats = [md.static_hamiltonian(params.K, amplitude, d, params.dim)
                for d in det]
    else:
        raise UsageError(f"which must be 'drive' or 'pump', got {which!r}")
    rows = parallel_map(_rabi_column, [(H, tg, psi0) for H in mats],
                        workers=workers)
    return np.array(rows)


def tls_rabi_map(variant, Omega_R, detuning_grid, time_grid, rtol=1e-10,
                 atol=1e-12, workers=None):
    """Excited-state population map of the two-level comparison models.

    Integrates the 2x2 Hamiltonian of :func:`kposim.model.tls_rabi_hamiltonian`
    from the ground state over ``time_grid`` for each detuning.  Returns an
    array of shape (len(detuning_grid), len(time_grid)).
    """
    det = np.asarray(detuning_grid, dtype=float)
    tg = np.asarray(time_grid, dtype=float)
    if det.size == 0 or tg.size == 0:
        raise UsageError("detuning_grid and time_grid must be nonempty")
    md.tls_rabi_hamiltonian(variant, Omega_R, 0.0, 0.0)  # validate variant early

    def column(d):
        def rhs(t, y):
            H = md.tls_rabi_hamiltonian(variant, Omega_R, d, t)
            return -1j * (H @ y)

        y0 = np.array([1.0 + 0j, 0.0 + 0j])
        t_end = tg[-1]
        eval_pts = tg[tg > 1e-15]
        sol = solve_ivp(rhs, (0.0, t_end if t_end > 0 else 1e-12), y0,
                        method="DOP853", t_eval=eval_pts if eval_pts.size else None,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise StiffnessError(f"TLS integration failed: {sol.message}",
                                 time=sol.t[-1] if sol.t.size else 0.0)
        out = np.empty(tg.size)
        k = 0
        for i, t in enumerate(tg):
            if t <= 1e-15:
                out[i] = 0.0
            else:
                out[i] = abs(sol.y[1, k]) ** 2
                k += 1
        return out

    rows = parallel_map(column, list(det), workers=workers)
    return np.array(rows)


def cat_rabi_map(params, detuning_grid, time_grid, beta=None, phi_d=0.0,
                 symmetrized=True, workers=None, rtol=DEFAULT_RTOL,
                 atol=DEFAULT_ATOL):
    """Parity map of the driven stabilized cat vs drive detuning and time.

    Starts from the even qubit eigenstate with the pump held at P_max, adds
    a drive of amplitude ``beta`` at each detuning of ``detuning_grid``
    (rad/us), and records <parity> at the times of ``time_grid``.  Parity,
    via W(0) pi/2, is the z readout of the cat qubit, so this is the
    cat-qubit Rabi map.

    ``symmetrized=True`` (default) drives with the tone pair at +- the
    detuning — a cosine-modulated carrier — which is the drive the
    symmetrized-detuning analysis describes and makes the map exactly even
    in the detuning.  ``symmetrized=False`` applies a single tone; its map
    picks up a percent-level asymmetry from the unequal a / a-dagger matrix
    elements between the two cat states.
    """
    det = np.asarray(detuning_grid, dtype=float)
    tg = np.asarray(time_grid, dtype=float)
    if det.size == 0 or tg.size == 0:
        raise UsageError("detuning_grid and time_grid must be nonempty")
    if beta is None:
        beta = params.beta
    basis = md.cat_basis_from_model(params)
    par = fs.parity_op(params.dim)

    def column(d):
        if symmetrized:
            # phase rides inside the modulation: a mixer conjugates the
            # image tone's phase along with its detuning
            seg = md.Segment(duration=tg[-1], pump=md.Constant(params.P_max),
                             detuning=md.Constant(params.Delta),
                             drive=md.Cosine(beta, d, phi_d))
            sched = md.PulseSchedule((seg,))
        else:
            sched = md.drive_schedule(tg[-1], beta, d, phi_d, params.P_max,
                                      params.Delta)
        traj = propagate(params, sched, basis.plus_cat, sample_times=tg,
                         kappa=0.0, rtol=rtol, atol=atol)
        return [float(np.real(s.expect(par))) for s in traj.states]

    rows = parallel_map(column, list(det), workers=workers)
    return np.array(rows)


def cat_rabi_phase_map(params, phi_grid, time_grid, beta=None, Delta_d=0.0,
                       symmetrized=True, workers=None, rtol=DEFAULT_RTOL,
                       atol=DEFAULT_ATOL):
    """Parity map of the driven cat vs drive phase and time (fixed detuning)."""
    phis = np.asarray(phi_grid, dtype=float)
    tg = np.asarray(time_grid, dtype=float)
    if phis.size == 0 or tg.size == 0:
        raise UsageError("phi_grid and time_grid must be nonempty")
    if beta is None:
        beta = params.beta
    basis = md.cat_basis_from_model(params)
    par = fs.parity_op(params.dim)

    def column(phi):
        if symmetrized:
            seg = md.Segment(duration=tg[-1], pump=md.Constant(params.P_max),
                             detuning=md.Constant(params.Delta),
                             drive=md.Cosine(beta, Delta_d, phi))
            sched = md.PulseSchedule((seg,))
        else:
            sched = md.drive_schedule(tg[-1], beta, Delta_d, phi,
                                      params.P_max, params.Delta)
        traj = propagate(params, sched, basis.plus_cat, sample_times=tg,
                         kappa=0.0, rtol=rtol, atol=atol)
        return [float(np.real(s.expect(par))) for s in traj.states]

    rows = parallel_map(column, list(phis), workers=workers)
    return np.array(rows)


def cat_ramsey_map(params, delta_peak_grid, tau_Z_grid, x2_duration,
                   beta=None, kappa=0.0, workers=None, rtol=DEFAULT_RTOL,
                   atol=DEFAULT_ATOL):
    """Parity after an X/2 - chirp - X/2 Ramsey sequence.

    Sweeps the chirp depth (rad/us) and gate time; ``x2_duration`` is the
    calibrated quarter-rotation pulse length (see kposim.qpt.calibrate_x2 —
    passed in rather than imported to keep the module dependency one-way).
    The chirp's accumulated frame phase automatically retards the second
    pulse's drive phase through the schedule bookkeeping.  Returns an array
    of shape (len(delta_peak_grid), len(tau_Z_grid)).
    """
    dps = np.asarray(delta_peak_grid, dtype=float)
    taus = np.asarray(tau_Z_grid, dtype=float)
    if dps.size == 0 or taus.size == 0:
        raise UsageError("delta_peak_grid and tau_Z_grid must be nonempty")
    if beta is None:
        beta = params.beta
    basis = md.cat_basis_from_model(params)
    par = fs.parity_op(params.dim)
    pulse = md.drive_schedule(x2_duration, beta, 0.0, 0.0, params.P_max,
                              params.Delta)

    def point(args):
        dp, tau = args
        sched = pulse.then(md.chirp_schedule(dp, tau, params.P_max,
                                             params.Delta)).then(pulse)
        out = propagate(params, sched, basis.plus_cat, kappa=kappa,
                        rtol=rtol, atol=atol).final_state
        return float(np.real(out.expect(par)))

    pts = [(dp, tau) for dp in dps for tau in taus]
    vals = parallel_map(point, pts, workers=workers)
    return np.array(vals).reshape(dps.size, taus.size)


# ---------------------------------------------------------------------------
# relaxation experiment


@dataclass(frozen=True)
class RelaxationResult:
    """Cardinal-population series from the relaxation experiment.

    ``populations`` maps each prepared-state label ('z', 'x', 'y' for
    |+Cat>, |+Coh>, |+iCat> preparations) to a (6, T) array over the six
    cardinal projectors.  ``sums``/``differences`` hold the per-axis
    population sum and difference series of the matching preparation
    (z axis read from the 'z' run, etc.).
    """

    wait_grid: np.ndarray
    populations: dict
    sums: dict
    differences: dict

    def axis_series(self, axis):
        return self.sums[axis], self.differences[axis]


_AXIS_OF = {"z": 0, "x": 1, "y": 2}


def _relaxation_run(args):
    params, kappa, wait_grid, psi0, basis, rtol, atol = args
    hold = md.hold_schedule(wait_grid[-1] if wait_grid[-1] > 0 else 1e-6,
                            params.P_max, params.Delta)
    traj = propagate(params, hold, psi0, sample_times=wait_grid,
                     kappa=kappa, rtol=rtol, atol=atol)
    pops = np.empty((6, len(traj.states)))
    for i, s in enumerate(traj.states):
        rho = s.to_density() if isinstance(s, fs.StateVector) else s
        pops[:, i] = fs.cardinal_populations(rho, basis).as_array()
    return pops


def relaxation_experiment(params, kappa, wait_grid, prepare="ramp",
                          tau_ramp=0.3, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                          workers=None):
    """Hold each cat-Bloch cardinal preparation and track all six populations.

    ``prepare='ramp'`` builds |+Cat>, |+Coh>, |+iCat> by running the
    counterdiabatic mapping ramp on |0>, (|0>+|1>)/sqrt2, (|0>+i|1>)/sqrt2
    (noiseless), mirroring the pulse sequence of the experiment;
    ``prepare='ideal'`` starts exactly from the model cat-basis cardinals.
    The hold segment keeps the pump at ``params.P_max`` with loss ``kappa``.
    """
    wg = np.asarray(wait_grid, dtype=float)
    if wg.size < 2 or np.any(np.diff(wg) <= 0):
        raise UsageError("wait_grid must be increasing with >= 2 points")
    if wg[0] < 0:
        raise UsageError("wait_grid must be nonnegative")
    basis = md.cat_basis_from_model(params)
    cards = fs.cardinal_states(basis)
    if prepare == "ideal":
        initial = {"z": cards["+Cat"], "x": cards["+Coh"], "y": cards["+iCat"]}
    elif prepare == "ramp":
        ramp = md.ramp_schedule(params.P_max, tau_ramp, params.Delta)
        initial = {}
        for lbl, fock_amp in (("z", (1.0, 0.0)), ("x", (1.0, 1.0)),
                              ("y", (1.0, 1.0j))):
            vec = np.zeros(params.dim, dtype=complex)
            vec[0], vec[1] = fock_amp
            psi = fs.StateVector(vec / np.linalg.norm(vec))
            initial[lbl] = propagate(params, ramp, psi, kappa=0.0,
                                     rtol=rtol, atol=atol).final_state
    else:
        raise UsageError(f"prepare must be 'ramp' or 'ideal', got {prepare!r}")

    jobs = [(params, kappa, wg, initial[lbl], basis, rtol, atol)
            for lbl in ("z", "x", "y")]
    results = parallel_map(_relaxation_run, jobs, workers=workers)
    populations = dict(zip(("z", "x", "y"), results))
    sums, diffs = {}, {}
    for lbl, pops in populations.items():
        k = _AXIS_OF[lbl]
        sums[lbl] = pops[2 * k] + pops[2 * k + 1]
        diffs[lbl] = pops[2 * k] - pops[2 * k + 1]
    return RelaxationResult(wg, populations, sums, diffs)


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitResult:
    """Parameters of a least-squares curve fit.

    ``rate`` is 1/us, ``frequency`` ordinary MHz, ``phase`` rad.  ``decay_time``
    is 1/rate (inf for rate 0).  ``covariance`` approximates the parameter
    covariance in the same order as ``parameter_names``.
    """

    amplitude: float
    rate: float
    frequency: float
    phase: float
    offset: float
    covariance: np.ndarray
    residual_norm: float
    parameter_names: tuple

    @property
    def decay_time(self):
        return np.inf if self.rate == 0.0 else 1.0 / self.rate


def _validate_series(t, y, minimum):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise UsageError("series must be two equal-length 1-D arrays")
    if t.size < minimum:
        raise UsageError(f"need at least {minimum} points, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise UsageError("time points must be strictly increasing")
    return t, y


def _run_lm(residual, x0, names, t, y):
    res = least_squares(residual, x0, method="lm", xtol=1e-12, ftol=1e-12,
                        gtol=1e-12, max_nfev=500 * (len(x0) + 1))
    if res.status == 0:
        raise FitError(
            f"fit did not converge within the iteration budget; final "
            f"residual norm {np.linalg.norm(res.fun):.3e}")
    m, n = len(t), len(x0)
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.full((n, n), np.nan)
    dof = max(m - n, 1)
    cov = cov * (2.0 * res.cost / dof)
    return res.x, cov, float(np.linalg.norm(res.fun))


def fit_exp_decay(t, y):
    """Fit y = A exp(-rate t) + C with deterministic initialization."""
    t, y = _validate_series(t, y, 8)
    spread = y.max() - y.min()
    if spread < 1e-13 * max(1.0, abs(y).max()):
        raise DegenerateDataError("series is constant; nothing to fit")
    c0 = y[-1]
    a0 = y[0] - c0
    if abs(a0) < 1e-13:
        a0 = spread
    # rate from the log-envelope slope over the first half of the series
    half = max(t.size // 2, 2)
    z = np.abs(y[:half] - c0)
    mask = z > 1e-12 * abs(a0)
    if mask.sum() >= 2:
        slope = np.polyfit(t[:half][mask], np.log(z[mask]), 1)[0]
        r0 = max(-slope, 1e-6 / (t[-1] - t[0]))
    else:
        r0 = 1.0 / (t[-1] - t[0])

    def residual(x):
        a, r, c = x
        return a * np.exp(-r * t) + c - y

    x, cov, rnorm = _run_lm(residual, np.array([a0, r0, c0]),
                            ("amplitude", "rate", "offset"), t, y)
    a, r, c = x
    if r < 0:
        if abs(r) * (t[-1] - t[0]) < 1e-6:
            r = 0.0
        else:
            raise FitError(f"fitted rate is negative ({r:.3e}/us); "
                           "series is growing, not decaying")
    return FitResult(amplitude=float(a), rate=float(r), frequency=0.0,
                     phase=0.0, offset=float(c), covariance=cov,
                     residual_norm=rnorm,
                     parameter_names=("amplitude", "rate", "offset"))


def _spectral_guess(t, y):
    """Frequency (MHz), phase and amplitude of the dominant spectral line."""
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * dt.mean():
        # resample to a uniform grid for the FFT-based guess
        tu = np.linspace(t[0], t[-1], t.size)
        yu = np.interp(tu, t, y)
        t, y = tu, yu
        dt = np.diff(t)
    step = dt.mean()
    yc = y - y.mean()
    spec = np.fft.rfft(yc)
    freqs = np.fft.rfftfreq(t.size, step)
    k = int(np.argmax(np.abs(spec[1:])) + 1)
    if np.abs(spec[k]) < 1e-12 * t.size:
        raise DegenerateDataError("no oscillation detectable in the series")
    f0 = freqs[k]
    phi0 = float(np.angle(spec[k] * np.exp(-2j * np.pi * f0 * t[0])))
    a0 = 2.0 * np.abs(spec[k]) / t.size
    return f0, phi0, a0


def fit_damped_cosine(t, y):
    """Fit y = A cos(2 pi f t + phi) exp(-rate t) + C.

    Initialization is deterministic: frequency and phase from the discrete
    spectrum peak, decay rate from the RMS ratio of the two series halves.
    The returned frequency is ordinary (MHz when t is in us) and normalized
    to f >= 0, A >= 0, phi in (-pi, pi].
    """
    t, y = _validate_series(t, y, 8)
    spread = y.max() - y.min()
    if spread < 1e-13 * max(1.0, abs(y).max()):
        raise DegenerateDataError("series is constant; nothing to fit")
    f0, phi0, a0 = _spectral_guess(t, y)
    span = t[-1] - t[0]
    if f0 * span < 1.0:
        # fewer than one resolvable period: frequency fit is ill-posed
        raise DegenerateDataError(
            f"series spans only {f0 * span:.2f} periods of the spectral "
            "peak; need >= 1")
    c0 = float(y.mean())
    half = t.size // 2
    r1 = np.sqrt(np.mean((y[:half] - c0) ** 2))
    r2 = np.sqrt(np.mean((y[half:] - c0) ** 2))
    if r1 > 0 and r2 > 0 and r1 > r2:
        rate0 = 2.0 * np.log(r1 / r2) / span
    else:
        rate0 = 0.0

    def residual(x):
        a, r, f, phi, c = x
        return a * np.cos(TWO_PI * f * t + phi) * np.exp(-r * t) + c - y

    x0 = np.array([a0, rate0, f0, phi0, c0])
    x, cov, rnorm = _run_lm(residual, x0,
                            ("amplitude", "rate", "frequency", "phase",
                             "offset"), t, y)
    a, r, f, phi, c = x
    if f < 0:
        f, phi = -f, -phi
    if a < 0:
        a, phi = -a, phi + np.pi
    phi = float(np.remainder(phi + np.pi, TWO_PI) - np.pi)
    if phi == -np.pi:
        phi = np.pi
    if r < 0:
        # coherent leakage beating can mimic a sub-percent envelope growth;
        # call that unresolved (rate 0) and only flag genuine growth
        if abs(r) * span < 2e-2:
            r = 0.0
        else:
            raise FitError(f"fitted rate is negative ({r:.3e}/us); "
                           "envelope is growing, not decaying")
    return FitResult(amplitude=float(a), rate=float(r), frequency=float(f),
                     phase=phi, offset=float(c), covariance=cov,
                     residual_norm=rnorm,
                     parameter_names=("amplitude", "rate", "frequency",
                                      "phase", "offset"))
