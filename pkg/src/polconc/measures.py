"""Entanglement and distance measures for two-qubit states."""

from __future__ import annotations

import numpy as np
from scipy.linalg import sqrtm

from .qstate import SIGMA_Y, dagger, to_density

_YY = np.kron(SIGMA_Y, SIGMA_Y)
# eigenvalues below this are treated as rounding noise of a rank-deficient state
_RANK_CUTOFF = 1e-13


def concurrence(rho) -> float | np.ndarray:
    """Wootters concurrence; accepts a ket, a 4x4 matrix or a stack of 4x4 matrices.

    The decreasing lambdas are the singular values of W^T (Y x Y) W with
    rho = W W^dagger, which avoids square roots of near-zero eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        a, b, c, d = rho / np.linalg.norm(rho)
        return float(2 * abs(a * d - b * c))
    evals, evecs = np.linalg.eigh(rho)
    evals = np.where(evals > _RANK_CUTOFF, evals, 0.0)
    w = evecs * np.sqrt(evals)[..., None, :]
    tau = np.swapaxes(w, -1, -2) @ _YY @ w
    lam = np.linalg.svd(tau, compute_uv=False)
    c = np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])
    return float(c) if c.ndim == 0 else c


def binary_entropy(x) -> float | np.ndarray:
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    h = np.where((x <= 0) | (x >= 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def eof_from_concurrence(c) -> float | np.ndarray:
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    return binary_entropy((1 + np.sqrt(1 - c**2)) / 2)


def entanglement_of_formation(rho) -> float | np.ndarray:
    return eof_from_concurrence(concurrence(rho))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (squared convention); pure arguments use <psi|rho|psi>."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim == 1:
        return float(np.vdot(sigma, to_density(rho) @ sigma).real)
    if rho.ndim == 1:
        return float(np.vdot(rho, sigma @ rho).real)
    s = sqrtm(rho)
    return float(np.real(np.trace(sqrtm(s @ sigma @ s))) ** 2)


def trace_distance(rho, sigma) -> float:
    diff = to_density(rho) - to_density(sigma)
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + dagger(diff)) / 2)).sum())
