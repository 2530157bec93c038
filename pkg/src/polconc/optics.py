"""Jones calculus for the optical toolbox and wave-plate synthesis of polarization rotations.

Conventions
-----------
* Plate angles are measured from the horizontal axis. A plate at angle phi
  is ``rot(phi) @ diag(1, exp(i*delta)) @ rot(-phi)`` with retardance
  ``delta = pi`` (HWP) or ``pi/2`` (QWP). With the fast axis horizontal the QWP
  is ``diag(1, i)``, and ``qwp(phi) @ qwp(phi) == hwp(phi)`` holds exactly.
* ``ry(a) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]``.
* An SPR (single-qubit polarization rotation) has the determinant -1 form
  ``[[e^{-i xi} cos t, e^{-i iota} sin t], [e^{i iota} sin t, -e^{i xi} cos t]]``
  and is realized as phase shifter -> HWP(t/2) -> phase shifter, with any
  remaining global phase recorded separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotUnitary
from .qstate import I2, is_unitary, phase_invariant_distance

POLARIZATION_KINDS = frozenset({"hwp", "qwp", "phase", "identity", "jones"})
LOCATION_KINDS = frozenset({"pbs", "location_not"})

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def hwp_matrix(plate_angle: float) -> np.ndarray:
    c, s = np.cos(2 * plate_angle), np.sin(2 * plate_angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_matrix(plate_angle: float) -> np.ndarray:
    return rotation(plate_angle) @ np.diag([1, 1j]) @ rotation(-plate_angle)


def phase_shifter_matrix(phase: float, component: int | None = 1) -> np.ndarray:
    """Phase on |V> (component=1), on |H> (component=0) or on both (None, a path delay)."""
    if component is None:
        return np.exp(1j * phase) * I2
    d = np.ones(2, dtype=complex)
    d[component] = np.exp(1j * phase)
    return np.diag(d)


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class SprParams:
    xi: float
    iota: float
    theta: float

    def matrix(self) -> np.ndarray:
        return spr_matrix(self)


def spr_matrix(p: SprParams) -> np.ndarray:
    c, s = np.cos(p.theta), np.sin(p.theta)
    return np.array(
        [
            [np.exp(-1j * p.xi) * c, np.exp(-1j * p.iota) * s],
            [np.exp(1j * p.iota) * s, -np.exp(1j * p.xi) * c],
        ],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class OpticalElement:
    """One element placed in arm ``arm``.

    Polarization elements act on the photon's polarization; if ``path`` is
    set they sit inside that interferometer path only. ``pbs`` toggles the
    location of the V component; ``location_not`` swaps the two paths.
    """

    kind: str
    angle: float = 0.0
    component: int | None = 1
    arm: str = "A"
    path: int | None = None
    jones_matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in POLARIZATION_KINDS | LOCATION_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.path not in (None, 0, 1):
            raise ValueError("path must be None, 0 or 1")
        if self.kind == "jones" and self.jones_matrix is None:
            raise ValueError("a 'jones' element needs an explicit matrix")

    def jones(self) -> np.ndarray:
        if self.kind == "hwp":
            return hwp_matrix(self.angle)
        if self.kind == "qwp":
            return qwp_matrix(self.angle)
        if self.kind == "phase":
            return phase_shifter_matrix(self.angle, self.component)
        if self.kind == "identity":
            return I2.copy()
        if self.kind == "jones":
            return np.asarray(self.jones_matrix, dtype=complex)
        raise ValueError(f"{self.kind} does not act on polarization alone")

    def mode_matrix(self) -> np.ndarray:
        """4x4 operator on (polarization, location) of its arm, polarization-major."""
        if self.kind == "pbs":
            return np.kron(_P0, I2) + np.kron(_P1, np.array([[0, 1], [1, 0]]))
        if self.kind == "location_not":
            return np.kron(I2, np.array([[0, 1], [1, 0]], dtype=complex))
        j = self.jones()
        if self.path is None:
            return np.kron(j, I2)
        here, other = (_P0, _P1) if self.path == 0 else (_P1, _P0)
        return np.kron(j, here) + np.kron(I2, other)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "arm": self.arm, "path": self.path}
        if self.kind in ("hwp", "qwp", "phase"):
            d["angle"] = float(self.angle)
        if self.kind == "phase":
            d["component"] = self.component
        if self.kind == "jones":
            d["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.jones_matrix]
        return d


@dataclass(frozen=True, eq=False)
class WavePlateSequence:
    """Phase shifter, HWP, phase shifter (propagation order) plus a global phase."""

    elements: tuple[OpticalElement, ...]
    params: SprParams
    global_phase: float
    target: np.ndarray = field(repr=False)

    def matrix(self, include_global_phase: bool = True) -> np.ndarray:
        m = I2.copy()
        for el in self.elements:
            m = el.jones() @ m
        if include_global_phase:
            m = np.exp(1j * self.global_phase) * m
        return m

    @property
    def residual(self) -> float:
        return phase_invariant_distance(self.target, self.matrix(include_global_phase=False))

    def placed(self, arm: str, path: int | None = None) -> list[OpticalElement]:
        """Netlist elements for this sequence in ``arm``/``path``, global phase as a path delay."""
        out = [
            OpticalElement(el.kind, el.angle, el.component, arm=arm, path=path) for el in self.elements
        ]
        if self.global_phase != 0.0:
            out.append(OpticalElement("phase", self.global_phase, None, arm=arm, path=path))
        return out


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - angle, 2 * np.pi))


def synthesize_spr(target, atol: float = 1e-10) -> WavePlateSequence:
    """Closed-form wave-plate realization of a 2x2 unitary.

    The target is split as ``exp(i g) * U`` with ``det U = -1``; the SPR
    parameters are read off ``U``: theta in [0, pi/2] from the moduli and
    xi, iota in (-pi, pi] from the phases (set to 0 where the entry vanishes).
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not is_unitary(target, atol):
        raise NotUnitary("SPR target must be a 2x2 unitary")
    g = _wrap(np.angle(-np.linalg.det(target)) / 2)
    u = np.exp(-1j * g) * target
    c, s = abs(u[0, 0]), abs(u[0, 1])
    theta = float(np.arctan2(s, c))
    xi = _wrap(-np.angle(u[0, 0])) if c > 1e-15 else 0.0
    iota = _wrap(-np.angle(u[0, 1])) if s > 1e-15 else 0.0
    params = SprParams(xi, iota, theta)
    # spr(xi, iota, theta) = exp(-i xi) * PS_V(xi + iota) @ HWP(theta/2) @ PS_V(xi - iota)
    elements = (
        OpticalElement("phase", _wrap(xi - iota), 1),
        OpticalElement("hwp", theta / 2),
        OpticalElement("phase", _wrap(xi + iota), 1),
    )
    seq = WavePlateSequence(elements, params, _wrap(g - xi), target.copy())
    if seq.residual > atol:
        raise NotUnitary(f"synthesis residual {seq.residual:.3e} exceeds {atol}")
    return seq
