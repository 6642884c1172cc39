"""Small dense complex linear algebra for 2x2 and 4x4 operators.

Everything here is a thin, validated layer over numpy/scipy.  Operators are
plain ``numpy.ndarray`` objects of complex dtype; the functions accept stacks
of matrices along leading axes where that is natural (``expm_hermitian``,
``dagger``).
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import sqrtm

__all__ = [
    "I2", "X", "Y", "Z", "I4",
    "dagger", "is_hermitian", "kron", "expm_hermitian", "rotation",
    "validate_density", "to_density", "state_fidelity",
    "process_fidelity", "average_gate_fidelity", "phase_align",
    "canonical_key", "DensityError",
]

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I4 = np.eye(4, dtype=complex)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
TRACE_TOL = 1e-8


class DensityError(ValueError):
    """Raised when an operator is not a valid density matrix."""


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two single-qubit operators.

    The first factor acts on qubit 1 (the more significant index).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"kron expects two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def expm_hermitian(a: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Return ``exp(i * scale * A)`` for Hermitian ``A`` via eigendecomposition.

    Parameters
    ----------
    a : ndarray, shape (..., d, d)
        Hermitian matrix or stack of Hermitian matrices.
    scale : float
        Real prefactor of the exponent.

    Returns
    -------
    ndarray
        Unitary matrix (or stack) of the same shape.

    Raises
    ------
    ValueError
        If ``a`` is not Hermitian within ``1e-10`` (absolute, max-norm).
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError("expm_hermitian expects square matrices")
    if not is_hermitian(a):
        raise ValueError("expm_hermitian: input is not Hermitian within tolerance")
    w, v = np.linalg.eigh(a)
    phases = np.exp(1j * scale * w)
    return (v * phases[..., None, :]) @ dagger(v)


def rotation(axis_angle: float, theta: float) -> np.ndarray:
    """Single-qubit rotation by ``theta`` about an equatorial axis.

    The axis is ``cos(a) X + sin(a) Y`` with ``a = axis_angle``; the returned
    matrix is ``exp(-i theta/2 (cos a X + sin a Y))``.
    """
    n = np.cos(axis_angle) * X + np.sin(axis_angle) * Y
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * n


def validate_density(rho: np.ndarray, name: str = "rho") -> np.ndarray:
    """Check that ``rho`` is a density operator and return a cleaned copy.

    Eigenvalues down to ``-1e-8`` are tolerated, clamped to zero and the
    matrix renormalised.

    Raises
    ------
    DensityError
        Naming the failed invariant (shape, hermiticity, positivity, trace).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DensityError(f"{name}: not a square matrix (shape {rho.shape})")
    if not is_hermitian(rho, 1e-8):
        raise DensityError(f"{name}: not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise DensityError(f"{name}: trace {tr:.12g} differs from 1")
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w.min() < -PSD_TOL:
        raise DensityError(f"{name}: negative eigenvalue {w.min():.3e}")
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
    return (v * w) @ v.conj().T


def to_density(state: np.ndarray) -> np.ndarray:
    """Return a density operator from a state vector or pass a matrix through."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        nrm = np.linalg.norm(state)
        if nrm == 0:
            raise DensityError("zero state vector")
        psi = state / nrm
        return np.outer(psi, psi.conj())
    return state


def _pure_vector(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray | None:
    w, v = np.linalg.eigh(rho)
    if w[-1] > 1 - tol:
        return v[:, -1]
    return None


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Either argument may be a state vector.  If one operand is pure the
    fidelity reduces to ``<psi|rho|psi>`` which is evaluated directly.
    """
    rho = validate_density(to_density(rho), "rho")
    sigma = validate_density(to_density(sigma), "sigma")
    for a, b in ((sigma, rho), (rho, sigma)):
        psi = _pure_vector(a)
        if psi is not None:
            return float(np.clip(np.real(psi.conj() @ b @ psi), 0.0, 1.0))
    s = sqrtm(rho)
    f = np.real(np.trace(sqrtm(s @ sigma @ s))) ** 2
    return float(np.clip(f, 0.0, 1.0))


def process_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Process (entanglement) fidelity ``|Tr(V^dag U)|^2 / d^2`` of two unitaries."""
    d = u.shape[-1]
    return float(np.abs(np.trace(dagger(v) @ u)) ** 2 / d**2)


def average_gate_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Average gate fidelity ``(d F_pro + 1)/(d + 1)`` between two unitaries."""
    d = u.shape[-1]
    return (d * process_fidelity(u, v) + 1) / (d + 1)


def phase_align(u: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Remove the global phase so the first entry above ``tol`` is real positive."""
    flat = u.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > tol))
    ph = flat[idx] / abs(flat[idx])
    return u / ph


def canonical_key(u: np.ndarray, decimals: int = 6) -> bytes:
    """Hashable key of a unitary modulo global phase (rounded to ``decimals``)."""
    a = np.round(phase_align(u), decimals) + (0.0 + 0.0j)
    return a.tobytes()
