"""POVM dilation onto polarization x location and the Mach-Zehnder netlist simulator.

A canonical POVM pair ``M1 = diag(cos t, cos v)``, ``M2 = diag(sin t, sin v)``
is dilated to ``U = diag(Ry(-2t), Ry(-2v))`` in the basis
{|0>_P|0>_L, |0>_P|1>_L, |1>_P|0>_L, |1>_P|1>_L}, which factors as
``V1 V2 V3 V2 V1``:

* V1: HWP at 45 degrees in path 1 (location-controlled polarization NOT),
* V2: PBS (polarization-controlled location NOT, V is reflected),
* V3: Ry(-2t) in path 0 and Ry(+2v) in path 1.

The photon enters in path 0; post-selecting path 0 applies M1, path 1
applies M2 up to a sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotNormalized, ProtocolFailed
from .optics import OpticalElement, ry, synthesize_spr
from .qstate import ATOL, I2, as_state, dagger, to_density

EMPTY_BRANCH = 1e-14
HWP_NOT_ANGLE = np.pi / 4


@dataclass(frozen=True, eq=False)
class PovmPair:
    theta: float
    vartheta: float
    pre_unitary: np.ndarray | None = field(default=None, repr=False)
    post_unitary: np.ndarray | None = field(default=None, repr=False)

    @property
    def m1(self) -> np.ndarray:
        return np.diag([np.cos(self.theta), np.cos(self.vartheta)]).astype(complex)

    @property
    def m2(self) -> np.ndarray:
        return np.diag([np.sin(self.theta), np.sin(self.vartheta)]).astype(complex)

    def kraus(self) -> tuple[np.ndarray, np.ndarray]:
        pre = I2 if self.pre_unitary is None else np.asarray(self.pre_unitary, dtype=complex)
        post = I2 if self.post_unitary is None else np.asarray(self.post_unitary, dtype=complex)
        return post @ self.m1 @ pre, post @ self.m2 @ pre

    def completeness_residual(self) -> float:
        k1, k2 = self.kraus()
        return float(np.max(np.abs(dagger(k1) @ k1 + dagger(k2) @ k2 - I2)))


def _controlled(on0: np.ndarray, on1: np.ndarray) -> np.ndarray:
    """Location-controlled polarization operator, polarization-major ordering."""
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    return np.kron(on0, p0) + np.kron(on1, p1)


V1 = _controlled(I2, np.array([[0, 1], [1, 0]], dtype=complex))
V2 = OpticalElement("pbs").mode_matrix()


def dilation_unitary(theta: float, vartheta: float) -> np.ndarray:
    u = np.zeros((4, 4), dtype=complex)
    u[:2, :2] = ry(-2 * theta)
    u[2:, 2:] = ry(-2 * vartheta)
    return u


@dataclass(frozen=True, eq=False)
class DilationCircuit:
    povm: PovmPair
    dilation_unitary: np.ndarray = field(repr=False)
    gates: tuple[np.ndarray, ...] = field(repr=False)
    gate_names: tuple[str, ...] = ("V1", "V2", "V3", "V2", "V1")

    def gate_product(self) -> np.ndarray:
        out = np.eye(4, dtype=complex)
        for g in self.gates:
            out = out @ g
        return out

    def residual(self) -> float:
        return float(np.linalg.norm(self.gate_product() - self.dilation_unitary))


def build_dilation(povm: PovmPair) -> DilationCircuit:
    v3 = _controlled(ry(-2 * povm.theta), ry(2 * povm.vartheta))
    circuit = DilationCircuit(
        povm, dilation_unitary(povm.theta, povm.vartheta), (V1, V2, v3, V2, V1)
    )
    if circuit.residual() > ATOL:
        raise ProtocolFailed(f"gate product deviates from the dilation by {circuit.residual():.3e}")
    return circuit


# ---------------------------------------------------------------------------
# netlists on a register of polarization (P*) and location (L*) qubits


@dataclass(frozen=True, eq=False)
class OpticalNetlist:
    modes: tuple[str, ...]
    elements: tuple[OpticalElement, ...] = ()

    @property
    def dim(self) -> int:
        return 2 ** len(self.modes)

    def axes_for(self, arm: str) -> tuple[int, int]:
        try:
            return self.modes.index("P" + arm), self.modes.index("L" + arm)
        except ValueError:
            raise DimensionMismatch(f"netlist modes {self.modes} lack arm {arm!r}") from None

    def then(self, *elements: OpticalElement) -> "OpticalNetlist":
        return OpticalNetlist(self.modes, self.elements + tuple(elements))

    def unitary(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        for el in self.elements:
            u = _apply_to_axes(u, el.mode_matrix(), self.axes_for(el.arm), len(self.modes))
        return u

    def to_dict(self) -> dict:
        return {"modes": list(self.modes), "elements": [el.to_dict() for el in self.elements]}


def _apply_to_axes(state: np.ndarray, op: np.ndarray, axes: tuple[int, int], n: int) -> np.ndarray:
    """Apply a 4x4 two-qubit operator on ``axes`` to the leading index of ``state``."""
    rest = state.shape[1:]
    t = state.reshape((2,) * n + rest)
    t = np.tensordot(op.reshape(2, 2, 2, 2), t, axes=([2, 3], list(axes)))
    t = np.moveaxis(t, [0, 1], list(axes))
    return t.reshape(state.shape)


def embed(state, netlist: OpticalNetlist) -> np.ndarray:
    """Place a two-photon polarization state in the register with every location in path 0."""
    state = np.asarray(state, dtype=complex)
    n = len(netlist.modes)
    if state.shape[0] == netlist.dim:
        return state
    if state.shape[0] != 4:
        raise DimensionMismatch(f"state of dimension {state.shape[0]} does not fit {netlist.modes}")
    pol = [m for m in netlist.modes if m.startswith("P")]
    if pol != ["PA", "PB"]:
        raise DimensionMismatch("embedding a two-photon state needs modes PA and PB")
    ket_axes = [netlist.modes.index(m) for m in pol]
    if state.ndim == 1:
        t = np.zeros((2,) * n, dtype=complex)
        idx = [0] * n
        for a in range(2):
            for b in range(2):
                idx[ket_axes[0]], idx[ket_axes[1]] = a, b
                t[tuple(idx)] = state[2 * a + b]
        return t.reshape(-1)
    # density matrix: embed column-wise on both sides
    cols = np.stack([embed(state[:, k], netlist) for k in range(4)], axis=1)
    return np.stack([embed(cols[r, :], netlist) for r in range(netlist.dim)], axis=0)


def simulate_netlist(netlist: OpticalNetlist, state) -> np.ndarray:
    """Run the netlist on a ket or density matrix; two-photon inputs are embedded first."""
    full = embed(state, netlist)
    if full.shape[0] != netlist.dim or (full.ndim == 2 and full.shape[1] != netlist.dim):
        raise DimensionMismatch(f"state shape {full.shape} does not match dimension {netlist.dim}")
    u = netlist.unitary()
    if full.ndim == 1:
        return u @ full
    return u @ full @ dagger(u)


def postselect(netlist: OpticalNetlist, state: np.ndarray, outcomes: dict[str, int]) -> tuple[float, np.ndarray]:
    """Project location modes onto ``outcomes``; trace out any other location mode.

    Returns the Born probability and the unnormalized (PA, PB) state: a ket
    when the input is a ket and every location is selected, else a density matrix.
    """
    n = len(netlist.modes)
    loc = [m for m in netlist.modes if m.startswith("L")]
    pa, pb = netlist.modes.index("PA"), netlist.modes.index("PB")
    free = [m for m in loc if m not in outcomes]
    state = np.asarray(state)
    if state.ndim == 1 and not free:
        t = state.reshape((2,) * n)
        idx = [slice(None)] * n
        for m, v in outcomes.items():
            idx[netlist.modes.index(m)] = v
        sub = t[tuple(idx)]
        # remaining axes are PA, PB in register order
        if pa > pb:
            sub = sub.T
        sub = sub.reshape(4)
        return float(np.vdot(sub, sub).real), sub
    rho = to_density(state).reshape((2,) * (2 * n))
    idx = [slice(None)] * (2 * n)
    for m, v in outcomes.items():
        k = netlist.modes.index(m)
        idx[k] = v
        idx[n + k] = v
    sub = rho[tuple(idx)]
    kept = [m for m in netlist.modes if m not in outcomes]
    letters = "abcdefghij"
    ket = [letters[i] for i in range(len(kept))]
    bra = [letters[i].upper() for i in range(len(kept))]
    for m in free:
        k = kept.index(m)
        bra[k] = ket[k]
    ia, ib = kept.index("PA"), kept.index("PB")
    spec = "".join(ket) + "".join(bra) + "->" + ket[ia] + ket[ib] + bra[ia] + bra[ib]
    out = np.einsum(spec, sub).reshape(4, 4)
    return float(np.trace(out).real), out


@dataclass(frozen=True, eq=False)
class PostSelectedResult:
    branch: int
    probability: float
    conditional_state: np.ndarray = field(repr=False)
    empty: bool = False


def _normalized_result(branch: int, prob: float, unnormalized: np.ndarray) -> PostSelectedResult:
    if prob < EMPTY_BRANCH:
        return PostSelectedResult(branch, prob, np.zeros_like(unnormalized), empty=True)
    scale = np.sqrt(prob) if unnormalized.ndim == 1 else prob
    return PostSelectedResult(branch, prob, unnormalized / scale)


def lift(op: np.ndarray, arm: str) -> np.ndarray:
    if arm == "A":
        return np.kron(op, I2)
    if arm == "B":
        return np.kron(I2, op)
    raise ValueError(f"arm must be 'A' or 'B', not {arm!r}")


def spr_elements(target: np.ndarray | None, arm: str, path: int | None) -> list[OpticalElement]:
    """Wave plates realizing ``target`` exactly (global phase included as a path delay)."""
    if target is None or np.allclose(target, I2, atol=1e-15, rtol=0):
        return []
    return synthesize_spr(target).placed(arm, path)


def interferometer_elements(
    theta: float,
    vartheta: float,
    arm: str,
    pre: np.ndarray | None = None,
    post: np.ndarray | None = None,
    post_path: int | None = None,
) -> list[OpticalElement]:
    """Pre-rotation, V1 V2 V3 V2 V1 and post-rotation for one arm."""
    v1 = OpticalElement("hwp", HWP_NOT_ANGLE, arm=arm, path=1)
    pbs = OpticalElement("pbs", arm=arm)
    return [
        *spr_elements(pre, arm, None),
        v1,
        pbs,
        *spr_elements(ry(-2 * theta), arm, 0),
        *spr_elements(ry(2 * vartheta), arm, 1),
        pbs,
        v1,
        *spr_elements(post, arm, post_path),
    ]


def povm_netlist(povm: PovmPair, arm: str = "A") -> OpticalNetlist:
    """Eight-dimensional register (PA, PB, L) realizing the POVM on one arm."""
    modes = ("PA", "PB", "L" + arm)
    return OpticalNetlist(
        modes,
        tuple(interferometer_elements(povm.theta, povm.vartheta, arm, povm.pre_unitary, povm.post_unitary)),
    )


def _check_normalized(state: np.ndarray) -> None:
    norm = np.vdot(state, state).real if state.ndim == 1 else np.trace(state).real
    if abs(norm - 1) > ATOL:
        raise NotNormalized(f"input norm {norm!r}")


def apply_povm(povm: PovmPair, state, arm: str = "A", method: str = "kraus") -> list[PostSelectedResult]:
    """Both POVM branches on one arm, as post-selected path outcomes 0 and 1.

    ``method="kraus"`` uses the Kraus operators directly; ``method="circuit"``
    simulates the interferometer on the 8-dimensional register and measures
    the location. Branch-1 kets from the circuit carry an extra sign.
    """
    state = np.asarray(state, dtype=complex)
    _check_normalized(state)
    state = as_state(state)
    if method == "kraus":
        results = []
        for branch, k in enumerate(povm.kraus()):
            big = lift(k, arm)
            out = big @ state if state.ndim == 1 else big @ state @ dagger(big)
            prob = np.vdot(out, out).real if out.ndim == 1 else np.trace(out).real
            results.append(_normalized_result(branch, float(prob), out))
        return results
    if method == "circuit":
        net = povm_netlist(povm, arm)
        out = simulate_netlist(net, state)
        return [
            _normalized_result(b, *postselect(net, out, {"L" + arm: b})) for b in (0, 1)
        ]
    raise ValueError(f"unknown method {method!r}")
