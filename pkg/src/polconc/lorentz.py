"""Lorentz normal form of the R-matrix and the SL(2,C) double cover.

A local filter A x B maps R -> T(A) R T(B)^T with
T(A)_ij = tr(sigma_i A sigma_j A^dagger) / 2, and T(A)/|det A| is a proper
orthochronous Lorentz transformation (POLT). Decomposing
R = La' diag(s) Lb'^T with POLTs La', Lb' therefore tells which filters
bring the state to Bell-diagonal form.

Construction: the columns of Lb' are eigenvectors of R^T eta R eta
(eigenvalues s_i^2), Minkowski-orthonormalized inside each eigenspace; La'
follows from the images R eta Lb' eta = La' diag(s). A Jordan block (an
eigenspace short of its algebraic multiplicity, a lightlike eigenvector, or
an eigenvector matrix with condition number above 1e8) means the state has
no Bell-diagonal normal form; the lightlike eigenvector then gives the
direction along which quasi-distillation filters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.linalg import null_space

from .errors import NotAState
from .qstate import PAULI, dagger, rmatrix_to_density

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

CLUSTER_TOL = 1e-7
NULL_TOL = 1e-6
LIGHTLIKE_TOL = 1e-6
COND_LIMIT = 1e8
ZERO_SINGULAR = 1e-8


def filter_action(a: np.ndarray) -> np.ndarray:
    """T(A) with T(A)_ij = tr(sigma_i A sigma_j A^dagger) / 2."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * np.einsum("iab,bc,jcd,da->ij", PAULI, a, PAULI, dagger(a)).real


def lorentz_from_filter(a: np.ndarray) -> np.ndarray:
    return filter_action(a) / abs(np.linalg.det(a))


def filter_from_lorentz(lt: np.ndarray) -> np.ndarray:
    """The SL(2,C) matrix (defined up to sign) whose action is ``lt``."""
    p = 0.5 * np.einsum("ij,iab,jcd->bcad", lt, PAULI.conj(), PAULI.conj()).reshape(4, 4)
    evals, evecs = np.linalg.eigh((p + dagger(p)) / 2)
    a = (evecs[:, -1] * np.sqrt(max(evals[-1], 0.0))).reshape(2, 2)
    det = np.linalg.det(a)
    a = a / np.sqrt(det)
    # fix the overall sign: first nonzero entry with positive real part
    k = np.flatnonzero(np.abs(a.reshape(-1)) > 1e-12)[0]
    if a.reshape(-1)[k].real < 0:
        a = -a
    return a


def is_proper_orthochronous(lt: np.ndarray, atol: float = 1e-10) -> bool:
    lt = np.asarray(lt)
    return bool(
        np.max(np.abs(lt @ ETA @ lt.T - ETA)) <= atol
        and abs(np.linalg.det(lt) - 1) <= atol
        and lt[0, 0] >= 1 - atol
    )


def minkowski_inverse(lt: np.ndarray) -> np.ndarray:
    return ETA @ lt.T @ ETA


@dataclass(frozen=True, eq=False)
class LorentzNormalForm:
    """``L_A @ R @ L_B.T == diag(sigma)`` when ``diagonalizable``."""

    R: np.ndarray = field(repr=False)
    L_A: np.ndarray | None = field(repr=False)
    L_B: np.ndarray | None = field(repr=False)
    sigma: np.ndarray
    diagonalizable: bool
    singular_direction_A: np.ndarray | None = None
    singular_direction_B: np.ndarray | None = None
    eta: ClassVar[np.ndarray] = ETA

    def diagonal_form(self) -> np.ndarray:
        if not self.diagonalizable:
            raise ValueError("state has no diagonal Lorentz normal form")
        return self.L_A @ self.R @ self.L_B.T

    def off_diagonal_mass(self) -> float:
        d = self.diagonal_form()
        return float(np.linalg.norm(d - np.diag(np.diag(d))))


class _JordanBlock(Exception):
    def __init__(self, lightlike: np.ndarray | None):
        self.lightlike = lightlike


def _signature_basis(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minkowski-orthonormal basis of span(q) and the sign (+1 timelike, -1 spacelike) of each vector."""
    g = q.T @ ETA @ q
    d, w = np.linalg.eigh((g + g.T) / 2)
    if np.min(np.abs(d)) < LIGHTLIKE_TOL:
        raise _JordanBlock(q @ w[:, np.argmin(np.abs(d))])
    return q @ w / np.sqrt(np.abs(d)), np.sign(d)


def _eigenbasis(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columns: timelike eigenvector first, then spacelike by decreasing eigenvalue."""
    lam, vecs = np.linalg.eig(m)
    order = np.argsort(-lam.real, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    if np.max(np.abs(lam.imag)) > CLUSTER_TOL:
        raise _JordanBlock(None)
    lam = lam.real
    clusters: list[list[int]] = []
    for i in range(4):
        if clusters and abs(lam[i] - lam[clusters[-1][-1]]) <= CLUSTER_TOL:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    cols, signs, values = [], [], []
    for idx in clusters:
        mean = float(np.mean(lam[idx]))
        if len(idx) == 1:
            v = vecs[:, idx[0]]
            v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
            q = v.real[:, None] / np.linalg.norm(v.real)
        else:
            _, sv, vh = np.linalg.svd(m - mean * np.eye(4))
            q = vh[sv < NULL_TOL].T
            if q.shape[1] < len(idx):
                # defective eigenspace: the lightlike eigenvector sits inside it
                try:
                    _signature_basis(q)
                except _JordanBlock as jb:
                    raise _JordanBlock(jb.lightlike) from None
                raise _JordanBlock(None)
        basis, sgn = _signature_basis(q)
        for k in range(basis.shape[1]):
            cols.append(basis[:, k])
            signs.append(sgn[k])
            values.append(mean)
    signs = np.array(signs)
    if np.count_nonzero(signs > 0) != 1:
        raise _JordanBlock(None)
    t = int(np.flatnonzero(signs > 0)[0])
    order = [t] + [k for k in range(4) if k != t]
    basis = np.stack([cols[k] for k in order], axis=1)
    if np.linalg.cond(basis) > COND_LIMIT:
        raise _JordanBlock(None)
    return basis, np.array([values[k] for k in order])


def _gram_schmidt(cols: np.ndarray) -> np.ndarray:
    """Minkowski Gram-Schmidt in column order; column 0 timelike, the rest spacelike."""
    out = np.array(cols, dtype=float)
    for k in range(4):
        v = out[:, k]
        for j in range(k):
            v = v - (v @ ETA @ out[:, j]) / ETA[j, j] * out[:, j]
        out[:, k] = v / np.sqrt(abs(v @ ETA @ v))
    return out


def _complete(known: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Fill missing column slots with a Minkowski-orthonormal completion."""
    missing = [k for k in range(4) if k not in known]
    if not missing:
        return known
    if known:
        c = np.stack([known[k] for k in sorted(known)], axis=1)
        q = null_space(c.T @ ETA)
    else:
        q = np.eye(4)
    basis, sgn = _signature_basis(q)
    timelike = [basis[:, k] for k in range(basis.shape[1]) if sgn[k] > 0]
    spacelike = [basis[:, k] for k in range(basis.shape[1]) if sgn[k] < 0]
    out = dict(known)
    for k in missing:
        out[k] = timelike.pop(0) if k == 0 else spacelike.pop(0)
    return out


def _bloch_direction(v: np.ndarray | None) -> np.ndarray | None:
    if v is None or abs(v[0]) < 1e-12:
        return None
    v = v / v[0]
    n = v[1:]
    return n / np.linalg.norm(n)


def _check_state(r: np.ndarray) -> None:
    if r[0, 0] <= 0:
        raise NotAState("R_00 must be positive")
    evals = np.linalg.eigvalsh(rmatrix_to_density(r / r[0, 0]))
    if evals.min() < -1e-10:
        raise NotAState(f"R-matrix does not describe a positive operator (min eigenvalue {evals.min():.3e})")


def lorentz_normal_form(r) -> LorentzNormalForm:
    r = np.asarray(r, dtype=float)
    _check_state(r)
    scale = r[0, 0]
    rn = r / scale
    try:
        lb, _ = _eigenbasis(rn.T @ ETA @ rn @ ETA)
    except _JordanBlock as jb:
        dir_b = _bloch_direction(jb.lightlike)
        try:
            _eigenbasis(rn @ ETA @ rn.T @ ETA)
            dir_a = None
        except _JordanBlock as ja:
            dir_a = _bloch_direction(ja.lightlike)
        lam = np.sort(np.abs(np.linalg.eigvals(rn.T @ ETA @ rn @ ETA)))[::-1]
        return LorentzNormalForm(r, None, None, scale * np.sqrt(lam), False, dir_a, dir_b)

    if lb[0, 0] < 0:
        lb[:, 0] *= -1
    lb = _gram_schmidt(lb)
    if np.linalg.det(lb) < 0:
        lb[:, 3] *= -1

    images = rn @ ETA @ lb @ ETA
    s = np.zeros(4)
    known: dict[int, np.ndarray] = {}
    for i in range(4):
        w = images[:, i]
        q = w @ ETA @ w
        s[i] = np.sqrt(max(q if i == 0 else -q, 0.0))
        if s[i] > ZERO_SINGULAR:
            known[i] = w / s[i]
    if 0 in known and known[0][0] < 0:
        raise NotAState("normal form is not orthochronous; input is not a physical state")
    la = np.stack([v for _, v in sorted(_complete(known).items())], axis=1)
    la = _gram_schmidt(la)
    if np.linalg.det(la) < 0:
        la[:, 3] *= -1
        s[3] = -s[3]
    return LorentzNormalForm(r, minkowski_inverse(la), minkowski_inverse(lb), scale * s, True)
