"""Two-photon polarization states, Pauli algebra and the R-matrix picture.

Basis ordering is fixed everywhere: |H> = |0>, |V> = |1>, and two-photon
kets are ordered (|HH>, |HV>, |VH>, |VV>) with photon A as the left tensor
factor. The R-matrix of a density operator is R_ij = tr(rho sigma_i x sigma_j),
so that rho = sum_ij R_ij sigma_i x sigma_j / 4.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionMismatch, NonHermitianInput, NotAState, NotNormalized

ATOL = 1e-12
PSD_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.array([I2, SIGMA_X, SIGMA_Y, SIGMA_Z])
# PAULI2[i, j] = sigma_i (x) sigma_j
PAULI2 = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)
BASIS_LABELS = ("HH", "HV", "VH", "VV")

_S2 = 1 / np.sqrt(2)
BELL_STATES = {
    "phi+": np.array([_S2, 0, 0, _S2], dtype=complex),
    "phi-": np.array([_S2, 0, 0, -_S2], dtype=complex),
    "psi+": np.array([0, _S2, _S2, 0], dtype=complex),
    "psi-": np.array([0, _S2, -_S2, 0], dtype=complex),
}


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def schmidt_state(alpha: float) -> np.ndarray:
    """cos(alpha)|HH> + sin(alpha)|VV>."""
    return np.array([np.cos(alpha), 0, 0, np.sin(alpha)], dtype=complex)


def bell_state(name: str) -> np.ndarray:
    return BELL_STATES[name].copy()


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def werner_state(p: float) -> np.ndarray:
    """p |phi+><phi+| + (1 - p) I/4."""
    return p * projector(BELL_STATES["phi+"]) + (1 - p) * np.eye(4) / 4


def bell_diagonal_state(weights) -> np.ndarray:
    """Mixture of (phi+, phi-, psi+, psi-) with the given weights."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4,):
        raise DimensionMismatch("bell-diagonal state needs four weights")
    names = ("phi+", "phi-", "psi+", "psi-")
    return sum(w * projector(BELL_STATES[n]) for w, n in zip(weights, names))


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(m - dagger(m))) <= atol)


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m @ dagger(m) - np.eye(m.shape[0]))) <= atol)


def as_ket(psi, normalized: bool = True, atol: float = ATOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (4,):
        raise DimensionMismatch(f"expected a 4-component two-photon ket, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise NotAState("ket has non-finite amplitudes")
    if normalized and abs(np.vdot(psi, psi).real - 1) > atol:
        raise NotNormalized(f"ket norm^2 = {np.vdot(psi, psi).real!r}")
    return psi


def as_density(rho, normalized: bool = True, atol: float = ATOL) -> np.ndarray:
    """Validate a 4x4 density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise NotAState("density matrix has non-finite entries")
    if not is_hermitian(rho, atol):
        raise NonHermitianInput("density matrix is not Hermitian")
    if normalized and abs(np.trace(rho).real - 1) > atol:
        raise NotNormalized(f"trace = {np.trace(rho).real!r}")
    if np.linalg.eigvalsh(rho).min() < -PSD_ATOL:
        raise NotAState("density matrix has a negative eigenvalue")
    return rho


def as_state(state) -> np.ndarray:
    """Accept either a ket (shape (4,)) or a density matrix (shape (4, 4))."""
    arr = np.asarray(state)
    if arr.ndim == 1:
        return as_ket(arr)
    return as_density(arr)


def to_density(state) -> np.ndarray:
    arr = np.asarray(state, dtype=complex)
    return projector(arr) if arr.ndim == 1 else arr


def density_to_rmatrix(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 matrix, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise NonHermitianInput("cannot form an R-matrix from a non-Hermitian operator")
    rho = (rho + dagger(rho)) / 2
    r = np.einsum("ijab,ba->ij", PAULI2, rho)
    assert np.max(np.abs(r.imag)) < ATOL
    return r.real.copy()


def rmatrix_to_density(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 R-matrix, got shape {r.shape}")
    return np.einsum("ij,ijab->ab", r, PAULI2) / 4


def partial_trace(rho, keep: str = "A") -> np.ndarray:
    t = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("jijk->ik", t)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def phase_invariant_distance(u, v) -> float:
    """min over phi of ||u - exp(i phi) v||_F."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.vdot(v, u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_ket(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    return psi / np.linalg.norm(psi)


def random_density(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real
