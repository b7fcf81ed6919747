"""Truncated Fock-space operators, canonical states, and shared linear algebra.

Everything in the package lives in a photon-number basis truncated at ``dim``
levels, with the annihilation operator ``a[n-1, n] = sqrt(n)``.  Operators are
plain complex numpy arrays (returned read-only); states and density matrices
get thin dataclass wrappers that carry their validation flags.

Cat-qubit conventions
---------------------
For a complex amplitude ``alpha`` the normalized cat states are

    |Cat_+-> = (|alpha> +- |-alpha>) / sqrt(2 (1 +- exp(-2|alpha|^2)))

(even/odd photon-number parity).  The six cardinal states of the qubit Bloch
sphere built on an orthonormal pair (plus_cat, minus_cat) are

    z: |+Cat>, |-Cat>
    x: (|+Cat> +- |-Cat>) / sqrt(2)    (labelled +Coh / -Coh; for large cats
                                        these approach the coherent states
                                        |+alpha> and |-alpha>)
    y: (|+Cat> +- i |-Cat>) / sqrt(2)  (labelled +iCat / -iCat)

The relative phase of the pair is always fixed so that ``<alpha|+Cat>`` and
``<alpha|-Cat>`` are real and positive, which makes +Coh the right-hand lobe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy.linalg import expm

from .errors import (
    BasisError,
    InvalidDimensionError,
    TruncationError,
    UsageError,
)

__all__ = [
    "ladder_ops",
    "number_op",
    "parity_op",
    "kerr_op",
    "pump_op",
    "identity_op",
    "fock_state",
    "coherent_state",
    "cat_state",
    "displacement_op",
    "dag",
    "dm",
    "expect",
    "overlap",
    "state_fidelity",
    "assert_hermitian",
    "StateVector",
    "DensityMatrix",
    "CardinalPopulations",
    "CARDINAL_LABELS",
    "cardinal_states",
    "cardinal_populations",
]

logger = logging.getLogger(__name__)

#: Entrywise tolerance for Hermiticity checks on operators.
HERMITIAN_TOL = 1e-12


def _readonly(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an int >= 2, got {dim!r}")
    return int(dim)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def ladder_ops(dim):
    """Annihilation and creation operators on a ``dim``-level Fock space.

    Returns ``(a, adag)`` with ``a[n-1, n] = sqrt(n)``.  On the truncated
    space ``[a, adag] = 1`` except in the last diagonal entry, which is
    ``1 - dim`` (the usual truncation artifact).
    """
    dim = _check_dim(dim)
    a = np.zeros((dim, dim), dtype=np.complex128)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return _readonly(a), _readonly(a.conj().T)


def number_op(dim):
    """Photon-number operator ``diag(0, 1, ..., dim-1)``."""
    dim = _check_dim(dim)
    return _readonly(np.diag(np.arange(dim, dtype=np.complex128)))


def parity_op(dim):
    """Photon-number parity ``diag((-1)^n)``; involutory and Hermitian."""
    dim = _check_dim(dim)
    signs = 1.0 - 2.0 * (np.arange(dim) % 2)
    return _readonly(np.diag(signs.astype(np.complex128)))


def kerr_op(dim):
    """The quartic ladder product ``adag adag a a = diag(n (n-1))``."""
    dim = _check_dim(dim)
    n = np.arange(dim, dtype=np.float64)
    return _readonly(np.diag((n * (n - 1)).astype(np.complex128)))


def pump_op(dim):
    """Two-photon quadrature operator ``adag^2 + a^2``."""
    a, adag = ladder_ops(dim)
    return _readonly(adag @ adag + a @ a)


def identity_op(dim):
    dim = _check_dim(dim)
    return _readonly(np.eye(dim, dtype=np.complex128))


def dag(op):
    """Conjugate transpose."""
    return np.asarray(op).conj().T


def assert_hermitian(op, tol=HERMITIAN_TOL, name="operator"):
    """Raise ``UsageError`` unless ``op`` is entrywise Hermitian within ``tol``."""
    op = np.asarray(op)
    err = np.max(np.abs(op - op.conj().T)) if op.size else 0.0
    if err > tol:
        raise UsageError(f"{name} is not Hermitian (max |M - M^dag| = {err:.3e})")
    return op


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    """A ket in the truncated Fock space.

    ``normalized=True`` (the default) asserts unit norm within 1e-10 at
    construction; vectors that are deliberately unnormalized must be flagged
    with ``normalized=False``.
    """

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.size < 2:
            raise InvalidDimensionError("StateVector needs a 1-d array of length >= 2")
        object.__setattr__(self, "amplitudes", _readonly(amp))
        if self.normalized:
            nrm = np.linalg.norm(amp)
            if abs(nrm - 1.0) > 1e-10:
                raise UsageError(
                    f"state flagged normalized has norm {nrm!r}; "
                    "pass normalized=False for unnormalized vectors"
                )

    @property
    def dim(self):
        return self.amplitudes.size

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def renormalized(self):
        nrm = np.linalg.norm(self.amplitudes)
        if nrm == 0.0:
            raise UsageError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm)

    def overlap(self, other):
        """Inner product ``<self|other>``."""
        other_amp = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return complex(np.vdot(self.amplitudes, other_amp))

    def expect(self, op):
        """Expectation value ``<psi|op|psi>`` (complex in general)."""
        return complex(np.vdot(self.amplitudes, np.asarray(op) @ self.amplitudes))

    def to_density(self):
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """A density matrix; ``physical=True`` enforces the standard invariants.

    Hermitian within 1e-10 entrywise, unit trace within 1e-8, and smallest
    eigenvalue above -1e-8.  Intermediate unnormalized objects can opt out
    with ``physical=False``.
    """

    entries: np.ndarray
    physical: bool = True

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
            raise InvalidDimensionError("DensityMatrix needs a square array of size >= 2")
        object.__setattr__(self, "entries", _readonly(rho))
        if self.physical:
            herm_err = np.max(np.abs(rho - rho.conj().T))
            if herm_err > 1e-10:
                raise UsageError(f"density matrix not Hermitian (err {herm_err:.3e})")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > 1e-8:
                raise UsageError(f"density matrix trace {tr!r} != 1")
            eigmin = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)[0])
            if eigmin < -1e-8:
                raise UsageError(f"density matrix has negative eigenvalue {eigmin:.3e}")

    @property
    def dim(self):
        return self.entries.shape[0]

    def trace(self):
        return float(np.trace(self.entries).real)

    def purity(self):
        return float(np.trace(self.entries @ self.entries).real)

    def eigmin(self):
        return float(np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2.0)[0])

    def expect(self, op):
        """Expectation value ``Tr[op rho]`` (complex in general)."""
        return complex(np.trace(np.asarray(op) @ self.entries))


def _as_density_array(rho):
    if isinstance(rho, DensityMatrix):
        return rho.entries
    if isinstance(rho, StateVector):
        return np.outer(rho.amplitudes, rho.amplitudes.conj())
    arr = np.asarray(rho, dtype=np.complex128)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def dm(psi):
    """Outer product |psi><psi| as a plain array."""
    amp = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    return np.outer(amp, amp.conj())


def expect(op, state):
    """Expectation value of ``op`` in a ket, density matrix, or raw array."""
    op = np.asarray(op)
    if isinstance(state, StateVector):
        return state.expect(op)
    if isinstance(state, DensityMatrix):
        return state.expect(op)
    arr = np.asarray(state)
    if arr.ndim == 1:
        return complex(np.vdot(arr, op @ arr))
    return complex(np.trace(op @ arr))


def overlap(psi, phi):
    """Inner product ``<psi|phi>`` of two kets."""
    a = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    b = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi)
    return complex(np.vdot(a, b))


def state_fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Accepts kets, DensityMatrix objects, or raw arrays in any combination;
    for pure inputs this reduces to the usual squared overlap.
    """
    if isinstance(rho, StateVector) and isinstance(sigma, StateVector):
        return float(abs(rho.overlap(sigma)) ** 2)
    r = _as_density_array(rho)
    s = _as_density_array(sigma)
    vals, vecs = np.linalg.eigh((r + r.conj().T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    sqrt_r = (vecs * np.sqrt(vals)) @ vecs.conj().T
    inner = sqrt_r @ s @ sqrt_r
    mu = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    mu = np.clip(mu, 0.0, None)
    return float(np.sum(np.sqrt(mu)) ** 2)


def fock_state(n, dim):
    """Number state |n>."""
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock index {n} outside 0..{dim - 1}")
    amp = np.zeros(dim, dtype=np.complex128)
    amp[n] = 1.0
    return StateVector(amp)


def _check_alpha_fits(alpha, dim, what):
    """Truncation guard |alpha|^2 <= dim/4 shared by coherent-state builders."""
    nbar = abs(alpha) ** 2
    if nbar > dim / 4.0:
        raise TruncationError(
            f"{what} with |alpha|^2 = {nbar:.3f} does not fit safely in dim={dim} "
            "(need |alpha|^2 <= dim/4)",
            required_dim=int(np.ceil(4.0 * nbar)),
        )


def _coherent_amplitudes(alpha, dim):
    """Raw coherent amplitudes c_n = exp(-|a|^2/2) a^n / sqrt(n!), in log space."""
    n = np.arange(dim)
    if alpha == 0:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
        return amp
    log_mag = (
        -0.5 * abs(alpha) ** 2
        + n * np.log(abs(alpha))
        - 0.5 * np.array([lgamma(k + 1.0) for k in n])
    )
    phase = n * np.angle(alpha)
    return np.exp(log_mag) * np.exp(1j * phase)


def coherent_state(alpha, dim):
    """Coherent state |alpha> with amplitudes evaluated in log space.

    Requires ``|alpha|^2 <= dim/4`` so the Poisson tail lost to truncation is
    negligible; the renormalization deficit is logged when it exceeds 1e-8.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    _check_alpha_fits(alpha, dim, "coherent state")
    amp = _coherent_amplitudes(alpha, dim)
    nrm = np.linalg.norm(amp)
    deficit = abs(1.0 - nrm**2)
    if deficit > 1e-8:
        logger.info(
            "coherent_state(alpha=%s, dim=%d): renormalizing, truncated weight %.3e",
            alpha, dim, deficit,
        )
    return StateVector(amp / nrm)


def cat_state(alpha, parity, dim):
    """Even or odd cat state of amplitude ``alpha``.

    ``parity`` is ``'even'`` or ``'odd'``.  Built by masking the coherent
    amplitudes to one number parity (mathematically identical to the
    two-coherent-state superposition, but the suppressed amplitudes are
    exactly zero).  The odd cat is undefined at alpha = 0.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    if parity not in ("even", "odd"):
        raise UsageError(f"parity must be 'even' or 'odd', got {parity!r}")
    if alpha == 0:
        if parity == "odd":
            raise UsageError("odd cat state is undefined at alpha = 0")
        return fock_state(0, dim)
    _check_alpha_fits(alpha, dim, "cat state")
    amp = _coherent_amplitudes(alpha, dim)
    mask = (np.arange(dim) % 2) == (0 if parity == "even" else 1)
    amp = np.where(mask, amp, 0.0)
    nrm = np.linalg.norm(amp)
    return StateVector(amp / nrm)


def displacement_op(alpha, dim):
    """Displacement ``D(alpha) = exp(alpha adag - alpha* a)``.

    Evaluated with a scaling-and-squaring Pade matrix exponential.  Unitary to
    high accuracy on the subspace that stays clear of the truncation edge;
    the usual ``|alpha|^2 <= dim/4`` guard applies.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    _check_alpha_fits(alpha, dim, "displacement")
    a, adag = ladder_ops(dim)
    return _readonly(expm(alpha * adag - np.conj(alpha) * a))


# ---------------------------------------------------------------------------
# cardinal states of a cat qubit
# ---------------------------------------------------------------------------

CARDINAL_LABELS = ("+Cat", "-Cat", "+Coh", "-Coh", "+iCat", "-iCat")


@dataclass(frozen=True)
class CardinalPopulations:
    """Populations of the six cat-qubit cardinal states.

    Pairs along one axis sum to the total qubit-subspace weight, so all three
    sums agree (up to numerical noise) and are <= 1 for physical states.
    """

    plus_cat: float
    minus_cat: float
    plus_coh: float
    minus_coh: float
    plus_icat: float
    minus_icat: float

    def as_array(self):
        return np.array([
            self.plus_cat, self.minus_cat,
            self.plus_coh, self.minus_coh,
            self.plus_icat, self.minus_icat,
        ])

    def axis_sums(self):
        """(z, x, y) pair sums; all equal to the qubit-subspace weight."""
        return (
            self.plus_cat + self.minus_cat,
            self.plus_coh + self.minus_coh,
            self.plus_icat + self.minus_icat,
        )

    def axis_differences(self):
        """(z, x, y) pair differences (Bloch-vector components, unnormalized)."""
        return (
            self.plus_cat - self.minus_cat,
            self.plus_coh - self.minus_coh,
            self.plus_icat - self.minus_icat,
        )


def _basis_pair(basis):
    """Extract (plus_cat, minus_cat) amplitude arrays from a basis object."""
    try:
        plus, minus = basis.plus_cat, basis.minus_cat
    except AttributeError:
        raise BasisError(
            "basis must expose plus_cat / minus_cat state vectors"
        ) from None
    p = plus.amplitudes if isinstance(plus, StateVector) else np.asarray(plus)
    m = minus.amplitudes if isinstance(minus, StateVector) else np.asarray(minus)
    return np.asarray(p, dtype=np.complex128), np.asarray(m, dtype=np.complex128)


def _check_orthonormal(p, m, tol):
    err = max(
        abs(np.vdot(p, p) - 1.0),
        abs(np.vdot(m, m) - 1.0),
        abs(np.vdot(p, m)),
    )
    if err > tol:
        raise BasisError(f"cat basis is not orthonormal (max deviation {err:.3e})")


def cardinal_states(basis):
    """The six cardinal states built from an orthonormal (plus, minus) pair.

    Returns a dict keyed by :data:`CARDINAL_LABELS`.
    """
    p, m = _basis_pair(basis)
    _check_orthonormal(p, m, 1e-8)
    s = 1.0 / np.sqrt(2.0)
    return {
        "+Cat": StateVector(p),
        "-Cat": StateVector(m),
        "+Coh": StateVector(s * (p + m)),
        "-Coh": StateVector(s * (p - m)),
        "+iCat": StateVector(s * (p + 1j * m)),
        "-iCat": StateVector(s * (p - 1j * m)),
    }


def cardinal_populations(rho, basis):
    """Populations of the six cardinal states in state ``rho``.

    ``rho`` may be a ket, a DensityMatrix, or a raw array; ``basis`` is any
    object exposing orthonormal ``plus_cat`` / ``minus_cat`` states (checked
    to 1e-6 here).  Values land in [0, 1] up to numerical noise for physical
    states and are reported unclipped.
    """
    p, m = _basis_pair(basis)
    _check_orthonormal(p, m, 1e-6)
    rho_arr = _as_density_array(rho)
    if rho_arr.shape[0] != p.size:
        raise BasisError(
            f"dimension mismatch: state dim {rho_arr.shape[0]}, basis dim {p.size}"
        )
    s = 1.0 / np.sqrt(2.0)
    vecs = (
        p, m,
        s * (p + m), s * (p - m),
        s * (p + 1j * m), s * (p - 1j * m),
    )
    pops = [float(np.vdot(v, rho_arr @ v).real) for v in vecs]
    return CardinalPopulations(*pops)
