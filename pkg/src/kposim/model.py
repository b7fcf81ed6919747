"""System parameters, pulse schedules, and Hamiltonian assembly.

The rotating-frame Hamiltonian of the pumped Kerr oscillator (frame at half
the pump frequency) is, in rad/us,

    H(t) = Delta(t) adag a  -  (K/2) adag adag a a
           + (P(t)/2) (adag^2 + a^2)
           + beta(t) (adag e^{-i (Delta_d t + phi_d)} + a e^{+i (...)})

with K the Kerr coefficient, P the two-photon pump amplitude, Delta the
oscillator detuning from half the pump frequency, and (beta, Delta_d, phi_d)
a linear drive.  A pump-frequency chirp delta_p(t) is represented in this
frame as Delta(t) = Delta - delta_p(t)/2 together with an accumulated frame
phase  phi_acc = int delta_p(t)/2 dt  that offsets the phase of any drive
applied after (or during) the chirp; this representation is exact while no
drive is on.

Schedules are ordered lists of :class:`Segment`, each holding named envelope
shapes for the pump, detuning, chirp, and drive.  Frame phases are derived
quantities owned by :class:`PulseSchedule`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import fockspace as fs
from .errors import BasisError, ScheduleError, UsageError
from .units import angular_to_mhz, mhz_to_angular, ns_to_us, us_to_ns

__all__ = [
    "SystemParams",
    "Constant",
    "SinSquaredRamp",
    "SinBump",
    "SinSquaredBump",
    "Sum",
    "Segment",
    "PulseSchedule",
    "hold_schedule",
    "ramp_schedule",
    "chirp_schedule",
    "drive_schedule",
    "concat_schedules",
    "hamiltonian_at",
    "static_hamiltonian",
    "drive_frame_hamiltonian",
    "tls_rabi_hamiltonian",
    "CatBasis",
    "cat_basis_from_model",
]


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemParams:
    """Static device parameters in internal units (rad/us, 1/us).

    ``P_max`` is the plateau pump amplitude reached by ramp schedules;
    segments carry their own instantaneous envelopes.  ``kappa`` is the
    single-photon loss rate (0 disables dissipation).
    """

    K: float
    P_max: float = 0.0
    Delta: float = 0.0
    beta: float = 0.0
    Delta_d: float = 0.0
    phi_d: float = 0.0
    kappa: float = 0.0
    dim: int = 30

    def __post_init__(self):
        if not self.K > 0:
            raise UsageError(f"K must be positive, got {self.K}")
        if self.kappa < 0:
            raise UsageError(f"kappa must be >= 0, got {self.kappa}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise UsageError(f"dim must be an int >= 2, got {self.dim!r}")
        if self.P_max < 0:
            raise UsageError(f"P_max must be >= 0, got {self.P_max}")

    @classmethod
    def from_mhz(cls, K_MHz, P_MHz=0.0, Delta_MHz=0.0, beta_MHz=0.0,
                 Delta_d_MHz=0.0, phi_d=0.0, kappa_per_us=0.0, dim=30):
        """Build from publication-style ordinary frequencies in MHz."""
        return cls(
            K=mhz_to_angular(K_MHz),
            P_max=mhz_to_angular(P_MHz),
            Delta=mhz_to_angular(Delta_MHz),
            beta=mhz_to_angular(beta_MHz),
            Delta_d=mhz_to_angular(Delta_d_MHz),
            phi_d=phi_d,
            kappa=kappa_per_us,
            dim=int(dim),
        )

    def with_(self, **kwargs):
        return replace(self, **kwargs)


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------

class Envelope:
    """Base class for named envelope shapes (amplitudes in rad/us, times us)."""

    def value(self, t):
        raise NotImplementedError

    def integral(self, t):
        """Closed-form integral of the envelope over [0, t]."""
        raise NotImplementedError

    def is_constant(self):
        return False

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Envelope):
    level: float = 0.0

    def value(self, t):
        return self.level

    def integral(self, t):
        return self.level * t

    def is_constant(self):
        return True

    def to_dict(self):
        return {"shape": "constant", "level_MHz": angular_to_mhz(self.level)}


@dataclass(frozen=True)
class SinSquaredRamp(Envelope):
    """``A sin^2(pi t / (2 tau))``: 0 at t=0, plateau value A at t=tau."""

    amplitude: float
    ramp_time: float

    def value(self, t):
        return self.amplitude * math.sin(math.pi * t / (2.0 * self.ramp_time)) ** 2

    def integral(self, t):
        tau = self.ramp_time
        return self.amplitude * (t / 2.0 - (tau / (2.0 * math.pi)) * math.sin(math.pi * t / tau))

    def to_dict(self):
        return {
            "shape": "sin2_ramp",
            "amplitude_MHz": angular_to_mhz(self.amplitude),
            "ramp_ns": us_to_ns(self.ramp_time),
        }


@dataclass(frozen=True)
class SinBump(Envelope):
    """``A sin(pi t / width)``: a single half-sine arch, zero at both ends."""

    amplitude: float
    width: float

    def value(self, t):
        return self.amplitude * math.sin(math.pi * t / self.width)

    def integral(self, t):
        w = self.width
        return self.amplitude * (w / math.pi) * (1.0 - math.cos(math.pi * t / w))

    def to_dict(self):
        return {
            "shape": "sin_bump",
            "amplitude_MHz": angular_to_mhz(self.amplitude),
            "width_ns": us_to_ns(self.width),
        }


@dataclass(frozen=True)
class SinSquaredBump(Envelope):
    """``A sin^2(pi t / width)``: smooth bump, zero with zero slope at ends."""

    amplitude: float
    width: float

    def value(self, t):
        return self.amplitude * math.sin(math.pi * t / self.width) ** 2

    def integral(self, t):
        w = self.width
        return self.amplitude * (t / 2.0 - (w / (4.0 * math.pi)) * math.sin(2.0 * math.pi * t / w))

    def to_dict(self):
        return {
            "shape": "sin2_bump",
            "amplitude_MHz": angular_to_mhz(self.amplitude),
            "width_ns": us_to_ns(self.width),
        }


@dataclass(frozen=True)
class Cosine(Envelope):
    """``A cos(omega t + phase)``: amplitude modulation at ``omega`` rad/us.

    Used for the symmetrized drive: a cosine-modulated carrier is the pair
    of tones at carrier +- omega with equal amplitude A/2.
    """

    amplitude: float
    omega: float
    phase: float = 0.0

    def value(self, t):
        return self.amplitude * math.cos(self.omega * t + self.phase)

    def integral(self, t):
        if self.omega == 0.0:
            return self.amplitude * math.cos(self.phase) * t
        return (self.amplitude / self.omega) * (
            math.sin(self.omega * t + self.phase) - math.sin(self.phase))

    def is_constant(self):
        return self.omega == 0.0 and self.phase == 0.0

    def to_dict(self):
        return {
            "shape": "cosine",
            "amplitude_MHz": angular_to_mhz(self.amplitude),
            "omega_MHz": angular_to_mhz(self.omega),
            "phase": self.phase,
        }


@dataclass(frozen=True)
class Sum(Envelope):
    parts: tuple = ()

    def value(self, t):
        return sum(p.value(t) for p in self.parts)

    def integral(self, t):
        return sum(p.integral(t) for p in self.parts)

    def is_constant(self):
        return all(p.is_constant() for p in self.parts)

    def to_dict(self):
        return {"shape": "sum", "parts": [p.to_dict() for p in self.parts]}


def envelope_from_dict(d):
    shape = d.get("shape")
    if shape == "constant":
        return Constant(mhz_to_angular(d["level_MHz"]))
    if shape == "sin2_ramp":
        return SinSquaredRamp(mhz_to_angular(d["amplitude_MHz"]), ns_to_us(d["ramp_ns"]))
    if shape == "sin_bump":
        return SinBump(mhz_to_angular(d["amplitude_MHz"]), ns_to_us(d["width_ns"]))
    if shape == "sin2_bump":
        return SinSquaredBump(mhz_to_angular(d["amplitude_MHz"]), ns_to_us(d["width_ns"]))
    if shape == "cosine":
        return Cosine(mhz_to_angular(d["amplitude_MHz"]),
                      mhz_to_angular(d["omega_MHz"]), d["phase"])
    if shape == "sum":
        return Sum(tuple(envelope_from_dict(p) for p in d["parts"]))
    raise ScheduleError(f"unknown envelope shape {shape!r}")


# ---------------------------------------------------------------------------
# segments and schedules
# ---------------------------------------------------------------------------

_ZERO = Constant(0.0)


@dataclass(frozen=True)
class Segment:
    """One schedule segment; all envelopes are functions of segment-local time.

    ``pump`` drives the in-phase two-photon quadrature (adag^2 + a^2)/2 and
    ``pump_quad`` the orthogonal one i(adag^2 - a^2)/2.  ``chirp`` holds the
    pump-frequency offset delta_p(t); it lowers the effective detuning by
    delta_p/2 and feeds the accumulated frame phase.  The drive oscillation
    ``Delta_d t + phi_d`` is referenced to the segment start.  ``pump_jump``
    waives the pump-continuity check at this segment's left boundary.
    """

    duration: float
    pump: Envelope = _ZERO
    pump_quad: Envelope = _ZERO
    detuning: Envelope = _ZERO
    chirp: Envelope = _ZERO
    drive: Envelope = _ZERO
    drive_detuning: float = 0.0
    drive_phase: float = 0.0
    pump_jump: bool = False

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError(f"segment duration must be positive, got {self.duration}")

    def detuning_value(self, t):
        """Effective detuning Delta(t) - delta_p(t)/2 at local time t."""
        return self.detuning.value(t) - 0.5 * self.chirp.value(t)

    def frame_phase_increment(self, t):
        """Accumulated frame phase int_0^t delta_p/2 within this segment."""
        return 0.5 * self.chirp.integral(t)

    def is_static(self):
        """True when the Hamiltonian is constant over the whole segment."""
        envs_const = all(
            e.is_constant() for e in (self.pump, self.pump_quad, self.detuning, self.chirp)
        )
        drive_static = self.drive.is_constant() and (
            self.drive.value(0.0) == 0.0 or self.drive_detuning == 0.0
        )
        return envs_const and drive_static

    def to_dict(self):
        return {
            "duration_ns": us_to_ns(self.duration),
            "pump": self.pump.to_dict(),
            "pump_quad": self.pump_quad.to_dict(),
            "detuning": self.detuning.to_dict(),
            "chirp": self.chirp.to_dict(),
            "drive": self.drive.to_dict(),
            "drive_detuning_MHz": angular_to_mhz(self.drive_detuning),
            "drive_phase_rad": self.drive_phase,
            "pump_jump": self.pump_jump,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            duration=ns_to_us(d["duration_ns"]),
            pump=envelope_from_dict(d["pump"]),
            pump_quad=envelope_from_dict(d["pump_quad"]),
            detuning=envelope_from_dict(d["detuning"]),
            chirp=envelope_from_dict(d["chirp"]),
            drive=envelope_from_dict(d["drive"]),
            drive_detuning=mhz_to_angular(d["drive_detuning_MHz"]),
            drive_phase=d["drive_phase_rad"],
            pump_jump=bool(d.get("pump_jump", False)),
        )


#: tolerance for the pump-continuity check across segment boundaries (rad/us)
_CONTINUITY_TOL = 1e-9


@dataclass(frozen=True)
class PulseSchedule:
    """An ordered, validated sequence of segments.

    Frame phases are derived here: segment ``i`` starts at frame phase
    ``frame_phase_start(i)``, the cumulative chirp integral of all earlier
    segments.  The pump envelopes must be continuous across boundaries within
    1e-9 rad/us unless the right-hand segment sets ``pump_jump``.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ScheduleError("schedule needs at least one segment")
        for seg in segs:
            if not isinstance(seg, Segment):
                raise ScheduleError(f"schedule entries must be Segment, got {type(seg)!r}")
        object.__setattr__(self, "segments", segs)
        for left, right in zip(segs[:-1], segs[1:]):
            if right.pump_jump:
                continue
            jump = abs(left.pump.value(left.duration) - right.pump.value(0.0))
            jump_q = abs(left.pump_quad.value(left.duration) - right.pump_quad.value(0.0))
            if max(jump, jump_q) > _CONTINUITY_TOL:
                raise ScheduleError(
                    f"pump discontinuity {max(jump, jump_q):.3e} rad/us at a segment "
                    "boundary; set pump_jump=True to allow it"
                )
        starts = np.concatenate(([0.0], np.cumsum([s.duration for s in segs])))
        object.__setattr__(self, "_starts", starts)
        phases = [0.0]
        for seg in segs:
            phases.append(phases[-1] + seg.frame_phase_increment(seg.duration))
        object.__setattr__(self, "_frame_phases", tuple(phases))

    @property
    def total_duration(self):
        return float(self._starts[-1])

    @property
    def total_frame_phase(self):
        """Accumulated pump-frame phase phi_acc over the whole schedule."""
        return float(self._frame_phases[-1])

    def frame_phase_start(self, index):
        return float(self._frame_phases[index])

    def locate(self, t):
        """Map global time ``t`` to ``(segment, t_local, index)``.

        Boundaries belong to the segment that starts there, except the final
        instant which belongs to the last segment.
        """
        total = self.total_duration
        if t < -1e-12 or t > total + 1e-12:
            raise ScheduleError(f"time {t} outside schedule [0, {total}]")
        t = min(max(t, 0.0), total)
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        idx = min(idx, len(self.segments) - 1)
        return self.segments[idx], t - float(self._starts[idx]), idx

    def drive_phase_at(self, index, t_local):
        """Drive phase argument ``Delta_d t + phi_d - phi_frame(t)``.

        The frame phase accumulated by earlier (and in-progress) chirps is
        subtracted: a drive whose generator is phase-locked to the original
        frame appears in the chirped frame with its phase retarded by
        phi_acc.
        """
        seg = self.segments[index]
        frame = self.frame_phase_start(index) + seg.frame_phase_increment(t_local)
        return seg.drive_detuning * t_local + seg.drive_phase - frame

    def then(self, other):
        """Concatenate with another schedule (pump continuity re-checked)."""
        other_segs = other.segments if isinstance(other, PulseSchedule) else tuple(other)
        return PulseSchedule(self.segments + tuple(other_segs))

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {"segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Segment.from_dict(s) for s in d["segments"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def concat_schedules(*schedules):
    segs = ()
    for sched in schedules:
        segs = segs + tuple(sched.segments)
    return PulseSchedule(segs)


# ---------------------------------------------------------------------------
# schedule builders
# ---------------------------------------------------------------------------

def hold_schedule(duration, P_level, Delta, pump_jump=False):
    """Constant pump/detuning segment (free cat-qubit evolution)."""
    return PulseSchedule((
        Segment(
            duration=duration,
            pump=Constant(P_level),
            detuning=Constant(Delta),
            pump_jump=pump_jump,
        ),
    ))


def ramp_schedule(P_max, tau_ramp, Delta, counterdiabatic=True, cd_scale=0.3,
                  cd_mode="chirp", hold=0.0):
    """Adiabatic vacuum-to-cat mapping ramp.

    The pump rises as ``P_max sin^2(pi t / (2 tau_ramp))`` over ``tau_ramp``
    and stays at ``P_max`` for an optional ``hold`` afterwards.  With
    ``counterdiabatic`` a shortcut arch ``cd_scale * P_max *
    sin(pi t / tau_ramp)`` is applied during the ramp.  ``cd_mode`` selects
    its realization:

    ``'chirp'`` (default)
        a pump-frequency chirp that dips the effective detuning by the arch,
        widening the narrow even-sector gap ``K - 2 Delta`` mid-ramp.  The
        accumulated frame phase is tracked and offsets later drive segments.
    ``'pump_in_phase'``
        the arch is added to the pump amplitude itself.
    ``'pump_orthogonal'``
        the arch multiplies the orthogonal two-photon quadrature
        ``i (a^dag^2 - a^2)``, the transitionless-driving generator for
        displacing the lobes outward.

    At the default operating point (``tau_ramp`` = 300 ns) only ``'chirp'``
    keeps the even-parity mapping error below 1e-2; the pump-quadrature
    variants are retained for comparison studies.
    """
    if tau_ramp <= 0:
        raise ScheduleError(f"tau_ramp must be positive, got {tau_ramp}")
    ramp = SinSquaredRamp(P_max, tau_ramp)
    pump: Envelope = ramp
    pump_quad: Envelope = _ZERO
    chirp: Envelope = _ZERO
    if counterdiabatic:
        cd = SinBump(cd_scale * P_max, tau_ramp)
        if cd_mode == "chirp":
            # detuning_value subtracts chirp/2, so double the arch here
            chirp = SinBump(2.0 * cd_scale * P_max, tau_ramp)
        elif cd_mode == "pump_in_phase":
            pump = Sum((ramp, cd))
        elif cd_mode == "pump_orthogonal":
            pump_quad = cd
        else:
            raise UsageError(
                "cd_mode must be 'chirp', 'pump_in_phase' or 'pump_orthogonal', "
                f"got {cd_mode!r}"
            )
    segs = [Segment(duration=tau_ramp, pump=pump, pump_quad=pump_quad,
                    detuning=Constant(Delta), chirp=chirp)]
    if hold > 0:
        segs.append(Segment(duration=hold, pump=Constant(P_max), detuning=Constant(Delta)))
    return PulseSchedule(tuple(segs))


def chirp_schedule(delta_peak, tau_Z, P_level, Delta, pump_jump=False):
    """Pump-frequency chirp ``delta_p(t) = delta_peak sin^2(pi t / tau_Z)``.

    Represented as an effective detuning dip ``Delta - delta_p(t)/2``.  The
    schedule's ``total_frame_phase`` records the accumulated frame phase
    ``delta_peak * tau_Z / 4``, which retards the phase of any drive applied
    in later segments.
    """
    if tau_Z <= 0:
        raise ScheduleError(f"tau_Z must be positive, got {tau_Z}")
    return PulseSchedule((
        Segment(
            duration=tau_Z,
            pump=Constant(P_level),
            detuning=Constant(Delta),
            chirp=SinSquaredBump(delta_peak, tau_Z),
            pump_jump=pump_jump,
        ),
    ))


def drive_schedule(duration, beta, Delta_d, phi_d, P_level, Delta, pump_jump=False):
    """Rectangular linear drive on top of a constant pump."""
    return PulseSchedule((
        Segment(
            duration=duration,
            pump=Constant(P_level),
            detuning=Constant(Delta),
            drive=Constant(beta),
            drive_detuning=Delta_d,
            drive_phase=phi_d,
            pump_jump=pump_jump,
        ),
    ))


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

_block_cache = {}


def _blocks(dim):
    """Cached operator blocks reused by every Hamiltonian assembly."""
    if dim not in _block_cache:
        a, adag = fs.ladder_ops(dim)
        n = np.arange(dim, dtype=np.float64)
        _block_cache[dim] = {
            "a": a,
            "adag": adag,
            "n_diag": n,
            "kerr_diag": n * (n - 1.0),
            "pump": adag @ adag + a @ a,
            "pump_quad": 1j * (adag @ adag - a @ a),
        }
    return _block_cache[dim]


def hamiltonian_at(params, schedule, t):
    """Dense Hamiltonian matrix H(t) (rad/us) for a schedule, Hermitian.

    Segment-local envelopes are evaluated exactly at ``t``; the drive phase
    follows :meth:`PulseSchedule.drive_phase_at` (oscillation referenced to
    the segment start, frame phase from earlier chirps subtracted).
    """
    seg, t_loc, idx = schedule.locate(t)
    blk = _blocks(params.dim)
    diag = (seg.detuning_value(t_loc) * blk["n_diag"]
            - 0.5 * params.K * blk["kerr_diag"])
    H = np.diag(diag.astype(np.complex128))
    p = seg.pump.value(t_loc)
    if p != 0.0:
        H += (0.5 * p) * blk["pump"]
    pq = seg.pump_quad.value(t_loc)
    if pq != 0.0:
        H += (0.5 * pq) * blk["pump_quad"]
    b = seg.drive.value(t_loc)
    if b != 0.0:
        theta = schedule.drive_phase_at(idx, t_loc)
        phase = np.exp(-1j * theta)
        H += b * (phase * blk["adag"] + np.conj(phase) * blk["a"])
    return fs.assert_hermitian(H, name="assembled Hamiltonian")


def static_hamiltonian(K, P, Delta, dim):
    """Drive-free Hamiltonian ``Delta n - (K/2) adag adag a a + (P/2)(adag^2+a^2)``."""
    blk = _blocks(dim)
    H = np.diag((Delta * blk["n_diag"] - 0.5 * K * blk["kerr_diag"]).astype(np.complex128))
    if P != 0.0:
        H = H + (0.5 * P) * blk["pump"]
    return H


def drive_frame_hamiltonian(K, Delta_dr, beta, dim):
    """Pump-off Hamiltonian in the frame of a drive detuned by ``Delta_dr``.

    ``H = Delta_dr n - (K/2) adag adag a a + beta (adag + a)``; time
    independent, used for the plain (non-parametric) Rabi experiments.
    """
    blk = _blocks(dim)
    H = np.diag((Delta_dr * blk["n_diag"] - 0.5 * K * blk["kerr_diag"]).astype(np.complex128))
    if beta != 0.0:
        H = H + beta * (blk["adag"] + blk["a"])
    return H


_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


def tls_rabi_hamiltonian(variant, Omega_R, Delta_dT, t):
    """Two-level comparison Hamiltonians for the cat Rabi experiment.

    ``variant='symmetrized'`` drives with two tones at opposite detunings,

        H = (Omega_R/4) (e^{-i Delta t} + e^{+i Delta t}) (sp + sm)
          = (Omega_R/2) cos(Delta t) sigma_x,

    exactly even in ``Delta_dT``.  ``variant='standard'`` is the usual
    rotating-frame Rabi model

        H = (Omega_R/2) (sp e^{+i Delta t} + sm e^{-i Delta t}),

    whose excitation dynamics follow the generalized Rabi frequency
    sqrt(Omega_R^2 + Delta_dT^2).
    """
    if variant == "symmetrized":
        return (0.5 * Omega_R * math.cos(Delta_dT * t)) * _SIGMA_X
    if variant == "standard":
        phase = np.exp(1j * Delta_dT * t)
        H = np.zeros((2, 2), dtype=np.complex128)
        H[0, 1] = 0.5 * Omega_R * phase        # sigma_plus = |0><1| in our ordering
        H[1, 0] = 0.5 * Omega_R * np.conj(phase)
        return H
    raise UsageError(f"variant must be 'symmetrized' or 'standard', got {variant!r}")


# ---------------------------------------------------------------------------
# model cat basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatBasis:
    """Orthonormal cat-qubit basis pair with a fitted effective amplitude.

    ``plus_cat`` has even photon-number parity, ``minus_cat`` odd, both
    within 1e-6; orthonormality is checked to 1e-8.
    """

    plus_cat: fs.StateVector
    minus_cat: fs.StateVector
    alpha_eff: complex

    def __post_init__(self):
        p = self.plus_cat.amplitudes
        m = self.minus_cat.amplitudes
        err = max(abs(np.vdot(p, p) - 1.0), abs(np.vdot(m, m) - 1.0), abs(np.vdot(p, m)))
        if err > 1e-8:
            raise BasisError(f"cat basis not orthonormal (deviation {err:.3e})")
        par = fs.parity_op(p.size)
        p_par = float(np.vdot(p, par @ p).real)
        m_par = float(np.vdot(m, par @ m).real)
        if abs(p_par - 1.0) > 1e-6 or abs(m_par + 1.0) > 1e-6:
            raise BasisError(
                f"cat basis lacks definite parity (even <Pi>={p_par:.8f}, odd <Pi>={m_par:.8f})"
            )

    @property
    def dim(self):
        return self.plus_cat.dim

    def cardinal_states(self):
        return fs.cardinal_states(self)


def _parity_sector_eigensystem(H):
    """Eigen-decomposition of a parity-conserving H, done per parity block."""
    dim = H.shape[0]
    energies = np.empty(dim)
    parities = np.empty(dim, dtype=int)
    states = np.zeros((dim, dim), dtype=np.complex128)
    for par, idx in ((+1, np.arange(0, dim, 2)), (-1, np.arange(1, dim, 2))):
        block = H[np.ix_(idx, idx)]
        vals, vecs = np.linalg.eigh(block)
        energies[idx] = vals
        parities[idx] = par
        for col, j in enumerate(idx):
            states[idx, j] = vecs[:, col]
    order = np.argsort(energies)[::-1]          # descending
    return energies[order], parities[order], states[:, order]


def _reference_pair(alpha_c, dim):
    """Analytic (even, odd) reference states used to identify the qubit pair."""
    if alpha_c < 1e-6:
        return fs.fock_state(0, dim), fs.fock_state(1, dim)
    return fs.cat_state(alpha_c, "even", dim), fs.cat_state(alpha_c, "odd", dim)


def cat_basis_from_model(params, P=None, Delta=None):
    """Cat-qubit basis from the pumped-Hamiltonian eigenstates.

    Diagonalizes the drive-free Hamiltonian at pump level ``P`` (default
    ``params.P_max``) and detuning ``Delta`` (default ``params.Delta``),
    picks in each parity sector the eigenstate closest to the analytic cat of
    amplitude ``alpha_c = sqrt((P + Delta)/K)``, fixes phases so the overlap
    with the coherent state ``|alpha_c>`` is real positive, and fits the
    effective amplitude by maximizing overlap with analytic cats.

    Raises ``BasisError`` if the best overlap falls below 0.8 (the requested
    working point does not host an identifiable cat qubit).
    """
    P = params.P_max if P is None else P
    Delta = params.Delta if Delta is None else Delta
    dim = params.dim
    H = static_hamiltonian(params.K, P, Delta, dim)
    energies, parities, states = _parity_sector_eigensystem(H)
    alpha_c = math.sqrt(max(P + Delta, 0.0) / params.K)
    ref_even, ref_odd = _reference_pair(alpha_c, dim)

    picked = {}
    for par, ref in ((+1, ref_even), (-1, ref_odd)):
        sel = np.where(parities == par)[0]
        ovl = np.abs(ref.amplitudes.conj() @ states[:, sel]) ** 2
        best = sel[int(np.argmax(ovl))]
        if ovl.max() < 0.8:
            raise BasisError(
                f"no eigenstate with parity {par:+d} overlaps the analytic cat "
                f"(best overlap {ovl.max():.3f} < 0.8) at P={P:.3f}, Delta={Delta:.3f}"
            )
        picked[par] = states[:, best].copy()

    coh = fs.coherent_state(alpha_c, dim) if alpha_c > 1e-6 else None
    pair = []
    for par, n_ref in ((+1, 0), (-1, 1)):
        v = picked[par]
        ref_amp = coh.amplitudes if coh is not None else fs.fock_state(n_ref, dim).amplitudes
        ph = np.vdot(ref_amp, v)
        if abs(ph) < 1e-12:
            raise BasisError("cannot fix cat-basis phase: reference overlap vanishes")
        v = v * (np.conj(ph) / abs(ph))
        pair.append(fs.StateVector(v / np.linalg.norm(v)))
    plus_cat, minus_cat = pair

    alpha_eff = _fit_alpha_eff(plus_cat, alpha_c, dim)
    return CatBasis(plus_cat=plus_cat, minus_cat=minus_cat, alpha_eff=complex(alpha_eff))


def _fit_alpha_eff(plus_cat, alpha_c, dim):
    """Amplitude of the analytic even cat closest to the model even state."""
    if alpha_c < 1e-6:
        return 0.0

    def neg_overlap(x):
        ref = fs.cat_state(x, "even", dim)
        return -abs(ref.overlap(plus_cat)) ** 2

    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        neg_overlap,
        bounds=(0.25 * alpha_c, min(2.0 * alpha_c, 0.5 * math.sqrt(dim))),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)
