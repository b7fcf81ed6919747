"""Wigner maps, simulated displaced-parity measurement, and reconstruction.

The Wigner function is evaluated in its displaced-parity form
W(alpha) = (2/pi) Tr[D(alpha) Pi D†(alpha) rho].  A simulated measurement
applies a short, strong displacement pulse under the full nonlinear model
(the Kerr term distorts the displacement — the effect the postprocessing
correction removes) followed by a parity readout.  Density matrices are
recovered from parity records by projected least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import fockspace as fs
from . import model as md
from .errors import (CalibrationError, GridExtentError, ReconstructionError,
                     TruncationError, UsageError)
from .parallel import parallel_map
from .units import TWO_PI

TWO_OVER_PI = 2.0 / np.pi


def default_grid(dim, points=81, extent=3.0):
    """Uniform grid for one phase-space axis, capped at the safe extent.

    The displaced-parity evaluation is only trustworthy while the displaced
    state fits the truncation, i.e. for |alpha| <= sqrt(dim)/2; the default
    +-3 window is clipped to that bound.
    """
    safe = np.sqrt(dim) / 2.0
    return np.linspace(-min(extent, safe), min(extent, safe), points)


@dataclass(frozen=True)
class WignerMap:
    """W(alpha) sampled on a rectangular grid.

    ``values[r, c]`` is W(re_grid[c] + 1j * im_grid[r]), in units of inverse
    phase-space area.  ``meta`` records the source ('ideal' or
    'simulated-measurement') and any corrections applied.
    """

    re_grid: np.ndarray
    im_grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        re = np.asarray(self.re_grid, dtype=float)
        im = np.asarray(self.im_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (im.size, re.size):
            raise UsageError(
                f"values shape {v.shape} != (len(im_grid), len(re_grid)) = "
                f"({im.size}, {re.size})")
        if np.max(np.abs(v)) > TWO_OVER_PI + 1e-9:
            raise UsageError(
                f"|W| exceeds 2/pi: max {np.max(np.abs(v)):.6f}")
        object.__setattr__(self, "re_grid", re)
        object.__setattr__(self, "im_grid", im)
        object.__setattr__(self, "values", v)

    def integral(self):
        """Riemann sum of W over the grid (should be ~1 for contained states)."""
        dre = self.re_grid[1] - self.re_grid[0] if self.re_grid.size > 1 else 0.0
        dim_ = self.im_grid[1] - self.im_grid[0] if self.im_grid.size > 1 else 0.0
        return float(self.values.sum() * dre * dim_)

    def at_origin(self):
        """W(0), parity/(pi/2), when the grid contains the origin."""
        r = np.argmin(np.abs(self.im_grid))
        c = np.argmin(np.abs(self.re_grid))
        if abs(self.im_grid[r]) > 1e-12 or abs(self.re_grid[c]) > 1e-12:
            raise UsageError("grid does not contain the origin")
        return float(self.values[r, c])


class _DisplacementFactory:
    """Exact displacement operators from two fixed eigendecompositions.

    D(x + iy) equals (up to a global phase, irrelevant under conjugation)
    D(iy) D(x); D(x) = exp(-i x G) with G = i(a† - a) and D(iy) =
    exp(i y Q) with Q = a† + a, both Hermitian, so one eigh each serves the
    whole grid.
    """

    def __init__(self, dim):
        a, adag = fs.ladder_ops(dim)
        self.dim = dim
        g = 1j * (adag - a)
        q = adag + a
        self._gl, self._gv = np.linalg.eigh(g)
        self._ql, self._qv = np.linalg.eigh(q)

    def real_shift(self, x):
        ph = np.exp(-1j * x * self._gl)
        return (self._gv * ph) @ self._gv.conj().T

    def imag_shift(self, y):
        ph = np.exp(1j * y * self._ql)
        return (self._qv * ph) @ self._qv.conj().T

    def full(self, alpha):
        """D(alpha) including the phase convention of the BCH splitting."""
        x, y = alpha.real, alpha.imag
        return np.exp(-1j * x * y) * (self.imag_shift(y) @ self.real_shift(x))


def _check_extent(re_grid, im_grid, dim):
    extent = max(np.max(np.abs(re_grid)), np.max(np.abs(im_grid)))
    safe = np.sqrt(dim) / 2.0
    if extent > safe + 1e-12:
        raise TruncationError(
            f"grid extent {extent:.3f} exceeds the truncation-safe bound "
            f"sqrt(dim)/2 = {safe:.3f}; increase dim or shrink the grid",
            required_dim=int(np.ceil((2.0 * extent) ** 2)))


def wigner_ideal(rho, re_grid, im_grid=None):
    """Exact displaced-parity Wigner map of a state or density matrix."""
    re = np.asarray(re_grid, dtype=float)
    im = re.copy() if im_grid is None else np.asarray(im_grid, dtype=float)
    if re.size == 0 or im.size == 0:
        raise UsageError("grids must be nonempty")
    rho_arr = fs._as_density_array(rho)
    dim = rho_arr.shape[0]
    _check_extent(re, im, dim)
    disp = _DisplacementFactory(dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    values = np.empty((im.size, re.size))
    for c, x in enumerate(re):
        dx = disp.real_shift(x)
        rho_x = dx.conj().T @ rho_arr @ dx
        for r, y in enumerate(im):
            dy = disp.imag_shift(y)
            m = dy.conj().T @ rho_x @ dy
            values[r, c] = TWO_OVER_PI * float(
                np.real(np.sum(signs * np.diagonal(m))))
    return WignerMap(re, im, values, meta={"source": "ideal", "dim": dim})


def wigner_of_mixture(maps, weights):
    """Convex combination of Wigner maps on a shared grid."""
    if len(maps) != len(weights) or not maps:
        raise UsageError("need matching nonempty maps and weights")
    w = np.asarray(weights, dtype=float)
    if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
        raise UsageError("weights must be a convex combination")
    base = maps[0]
    vals = sum(wi * m.values for wi, m in zip(w, maps))
    return WignerMap(base.re_grid, base.im_grid, vals,
                     meta={"source": "mixture"})


# ---------------------------------------------------------------------------
# simulated measurement


@dataclass(frozen=True)
class MeasurementRecord:
    """Displaced-parity samples: one parity expectation per target point."""

    alphas: np.ndarray
    parities: np.ndarray
    pulse: dict = field(default_factory=dict)

    def __post_init__(self):
        al = np.asarray(self.alphas, dtype=complex)
        pa = np.asarray(self.parities, dtype=float)
        if al.shape != pa.shape or al.ndim != 1:
            raise UsageError("alphas and parities must be matching 1-D arrays")
        if np.max(np.abs(pa)) > 1.0 + 1e-9:
            raise UsageError("|parity| exceeds 1")
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "parities", pa)

    def to_wigner(self, re_grid, im_grid):
        """Reshape a grid-ordered record into a WignerMap (W = 2/pi * parity)."""
        re = np.asarray(re_grid, dtype=float)
        im = np.asarray(im_grid, dtype=float)
        if self.alphas.size != re.size * im.size:
            raise UsageError("record size does not match the grid")
        vals = TWO_OVER_PI * self.parities.reshape(im.size, re.size)
        return WignerMap(re, im, vals, meta={"source": "simulated-measurement",
                                             "pulse": dict(self.pulse)})


def _linear_displacement_gain(duration, detuning):
    """Displacement per unit complex drive amplitude in the linear model.

    Integrates d alpha/dt = -i detuning alpha - i B with B = 1 over the pulse;
    computed numerically rather than assumed, so the calibration tracks the
    actual pulse duration and frame detuning.
    """

    def rhs(t, y):
        al = y[0] + 1j * y[1]
        dal = -1j * detuning * al - 1j
        return [dal.real, dal.imag]

    sol = solve_ivp(rhs, (0.0, duration), [0.0, 0.0], method="DOP853",
                    rtol=1e-12, atol=1e-14)
    return complex(sol.y[0, -1], sol.y[1, -1])


def simulate_ld_tomography(params, rho, alphas, pulse_duration=0.02,
                           amplitude_bound=None, detuning=None,
                           pump_level=0.0, workers=None, rtol=1e-9,
                           atol=1e-11):
    """Displaced-parity record under a finite-duration displacement pulse.

    For each target point the drive amplitude/phase is calibrated so the
    *linear* model would displace by exactly -alpha_i; the state is then
    propagated under the full Hamiltonian (Kerr on, detuning as given,
    optional constant pump) and the number parity is recorded.  A target
    needing more drive than ``amplitude_bound`` raises
    :class:`CalibrationError`.
    """
    al = np.asarray(alphas, dtype=complex).reshape(-1)
    if al.size == 0:
        raise UsageError("alphas must be nonempty")
    if pulse_duration <= 0:
        raise UsageError(f"pulse_duration must be positive, got {pulse_duration}")
    if detuning is None:
        detuning = params.Delta
    gain = _linear_displacement_gain(pulse_duration, detuning)
    drives = -al / gain
    need = np.max(np.abs(drives))
    if amplitude_bound is not None and need > amplitude_bound:
        raise CalibrationError(
            f"pulse needs drive amplitude {need:.3f} rad/us > bound "
            f"{amplitude_bound:.3f}; lengthen the pulse or raise the bound")
    rho_arr = fs._as_density_array(rho)
    if rho_arr.shape[0] != params.dim:
        raise UsageError("state dimension does not match params.dim")
    par = fs.parity_op(params.dim)
    from . import dynamics as dyn  # local import to avoid a cycle

    def one(drive):
        beta = abs(drive)
        phi = -np.angle(drive) if beta > 0 else 0.0
        seg = md.Segment(duration=pulse_duration,
                         pump=md.Constant(pump_level),
                         detuning=md.Constant(detuning),
                         drive=md.Constant(beta), drive_detuning=0.0,
                         drive_phase=phi)
        sched = md.PulseSchedule((seg,))
        out = dyn.propagate(params, sched,
                            fs.DensityMatrix(rho_arr), kappa=params.kappa,
                            rtol=rtol, atol=atol).final_state
        return float(np.clip(np.real(out.expect(par)), -1.0, 1.0))

    parities = np.array(parallel_map(one, list(drives), workers=workers))
    return MeasurementRecord(al, parities,
                             pulse={"duration_us": pulse_duration,
                                    "detuning": detuning,
                                    "max_drive": float(need)})


def grid_points(re_grid, im_grid):
    """Row-major (im outer, re inner) flattening matching WignerMap layout."""
    re = np.asarray(re_grid, dtype=float)
    im = np.asarray(im_grid, dtype=float)
    return (re[None, :] + 1j * im[:, None]).reshape(-1)


def ideal_record(rho, alphas):
    """Exact displaced-parity record of a state, instantaneous displacements.

    parity_i = Tr[D(a_i) Pi D†(a_i) rho] evaluated in the state's own
    truncated space — the zero-duration limit of
    :func:`simulate_ld_tomography`, and the data model inverted by
    :func:`reconstruct_density`.  Unlike a Wigner map, a record may probe
    points beyond the map-safe extent; the values then describe the
    truncated model rather than the infinite-dimensional oscillator.
    """
    al = np.asarray(alphas, dtype=complex).reshape(-1)
    if al.size == 0:
        raise UsageError("alphas must be nonempty")
    rho_arr = fs._as_density_array(rho)
    dim = rho_arr.shape[0]
    disp = _DisplacementFactory(dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    parities = np.empty(al.size)
    for i, a in enumerate(al):
        d = disp.full(a)
        obs = (d * signs) @ d.conj().T
        parities[i] = float(np.real(np.sum(obs.conj() * rho_arr)))
    return MeasurementRecord(al, np.clip(parities, -1.0, 1.0),
                             pulse={"duration_us": 0.0})


def kerr_correct(rho, K, Delta, tau_corr):
    """Undo free Kerr + detuning evolution accumulated over ``tau_corr``.

    Applies U† rho U with U = exp(-i (Delta n - (K/2) n(n-1)) tau_corr);
    both terms are diagonal, so the correction is an exact phase conjugation.
    """
    if tau_corr < 0:
        raise UsageError(f"tau_corr must be >= 0, got {tau_corr}")
    rho_arr = fs._as_density_array(rho)
    dim = rho_arr.shape[0]
    n = np.arange(dim)
    phases = np.exp(-1j * (Delta * n - 0.5 * K * n * (n - 1.0)) * tau_corr)
    corrected = np.conj(phases)[:, None] * rho_arr * phases[None, :]
    return fs.DensityMatrix(corrected)


# ---------------------------------------------------------------------------
# reconstruction


def _hermitian_basis(dim):
    """Orthonormal traceless Hermitian basis (real coefficients)."""
    ops = []
    for i in range(dim):
        for j in range(i + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            ops.append(m)
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = -1j / np.sqrt(2.0)
            m[j, i] = 1j / np.sqrt(2.0)
            ops.append(m)
    for k in range(1, dim):
        diag = np.zeros(dim)
        diag[:k] = 1.0
        diag[k] = -k
        diag /= np.sqrt(k * (k + 1.0))
        ops.append(np.diag(diag.astype(complex)))
    return ops


def _simplex_project(evals):
    """Euclidean projection of eigenvalues onto the probability simplex."""
    u = np.sort(evals)[::-1]
    css = np.cumsum(u)
    rho_idx = np.nonzero(u * np.arange(1, len(u) + 1) > (css - 1.0))[0][-1]
    theta = (css[rho_idx] - 1.0) / (rho_idx + 1.0)
    return np.maximum(evals - theta, 0.0)


def _project_state(m):
    """Nearest (Frobenius) density matrix to a Hermitian matrix."""
    evals, vecs = np.linalg.eigh(m)
    lam = _simplex_project(evals)
    return (vecs * lam) @ vecs.conj().T


def reconstruct_density(record, dim, max_iters=200, tol=1e-9,
                        cond_limit=1e6):
    """Density matrix from a displaced-parity record by projected least squares.

    Solves parity_i = Tr[D†(a_i) Pi D(a_i) rho] for Hermitian unit-trace rho
    in an orthonormal operator basis, then runs projected gradient descent
    onto the physical (PSD, trace-1) set until the iterate moves less than
    ``tol`` in Frobenius norm.
    """
    al = record.alphas
    y = record.parities
    if al.size < dim * dim:
        raise UsageError(
            f"need at least dim^2 = {dim * dim} points, got {al.size}")
    disp = _DisplacementFactory(dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    obs_flat = np.empty((al.size, dim * dim), dtype=complex)
    for i, a in enumerate(al):
        d = disp.full(a)
        obs_flat[i] = ((d * signs) @ d.conj().T).reshape(-1)  # D diag(±1) D†
    basis = _hermitian_basis(dim)
    basis_flat = np.array([b.reshape(-1) for b in basis])
    # Tr[O B] = sum(conj(O) * B) elementwise for Hermitian O
    design = np.real(obs_flat.conj() @ basis_flat.T)
    offset = np.real(obs_flat.reshape(al.size, dim, dim)
                     .trace(axis1=1, axis2=2)) / dim
    sv = np.linalg.svd(design, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > cond_limit:
        raise ReconstructionError(
            f"design matrix condition number {cond:.3e} exceeds {cond_limit:.0e}; "
            "spread the sample points", condition=cond)
    x, *_ = np.linalg.lstsq(design, y - offset, rcond=None)
    warm = np.eye(dim, dtype=complex) / dim + (x @ basis_flat).reshape(dim, dim)

    # accelerated projected gradient (FISTA) on ||Tr[O rho] - y||^2 over the
    # PSD trace-1 set; step = 1/L with L the largest design eigenvalue
    step = 0.5 / (sv[0] ** 2)
    rho = _project_state(warm)
    z = rho
    t_mom = 1.0
    delta = np.inf
    for _ in range(max_iters):
        resid = np.real(obs_flat.conj() @ z.reshape(-1)) - y
        grad = 2.0 * (resid @ obs_flat).reshape(dim, dim)
        new = _project_state(z - step * grad)
        move = new - rho
        if np.real(np.sum(grad.conj() * move)) > 0.0:
            # momentum points uphill: restart it (adaptive-restart rule)
            t_mom = 1.0
            z = new
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            z = new + ((t_mom - 1.0) / t_next) * move
            t_mom = t_next
        delta = np.linalg.norm(move)
        rho = new
        if delta < tol:
            break
    else:
        raise ReconstructionError(
            f"projection iteration did not converge within {max_iters} steps "
            f"(last move {delta:.3e})")
    return fs.DensityMatrix(rho)


# ---------------------------------------------------------------------------
# cat size


def cat_size(wigner_map):
    """|alpha| of the Wigner maximum, with quadratic sub-grid refinement.

    Intended for parity-mixed (fringe-free) states whose lobes mark the
    coherent amplitude; the raw argmax is polished with a separable
    3x3 parabolic fit.  An argmax on the grid boundary raises
    :class:`GridExtentError`.
    """
    v = wigner_map.values
    r, c = np.unravel_index(np.argmax(v), v.shape)
    if r in (0, v.shape[0] - 1) or c in (0, v.shape[1] - 1):
        raise GridExtentError(
            "Wigner maximum sits on the grid boundary; enlarge the grid")
    im = wigner_map.im_grid
    re = wigner_map.re_grid

    def refine(grid, vm, v0, vp, k):
        denom = vm - 2.0 * v0 + vp
        if abs(denom) < 1e-300:
            return grid[k]
        shift = 0.5 * (vm - vp) / denom
        return grid[k] + shift * (grid[1] - grid[0])

    y = refine(im, v[r - 1, c], v[r, c], v[r + 1, c], r)
    x = refine(re, v[r, c - 1], v[r, c], v[r, c + 1], c)
    return float(np.hypot(x, y))
