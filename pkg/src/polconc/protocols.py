"""Single-copy entanglement concentration on the two-arm interferometer setup.

Each arm carries four SPR slots (X = A or B):

* X1: rotation before the interferometer (the right unitary U'),
* X2: Ry(-2 theta) in path 0,
* X3: Ry(+2 delta) in path 1,
* X4: rotation on the path-0 output (the left unitary U).

Post-selecting path 0 in both arms applies the filter
U diag(cos theta, cos delta) U' on each photon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dilation import (
    OpticalNetlist,
    interferometer_elements,
    postselect,
    simulate_netlist,
)
from .errors import InvalidAngles, NotApplicable, OutOfRange, ProtocolFailed
from .lorentz import filter_from_lorentz, lorentz_normal_form
from .measures import concurrence, eof_from_concurrence, fidelity
from .optics import WavePlateSequence, ry, synthesize_spr
from .qstate import I2, as_density, as_ket, as_state, dagger, density_to_rmatrix, projector, schmidt_state

FIG2_MODES = ("PA", "LA", "PB", "LB")
SLOTS = tuple(f"{arm}{k}" for arm in "AB" for k in range(1, 5))
BELL_DIAGONAL_TOL = 1e-12
AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class PureConcentrationSpec:
    alpha: float
    beta: float

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not (0 <= a <= np.pi / 4 + 1e-15 and 0 <= b <= np.pi / 4 + 1e-15):
            raise InvalidAngles(f"alpha={a!r}, beta={b!r} must lie in [0, pi/4]")
        if a > b:
            raise InvalidAngles(f"alpha={a!r} exceeds beta={b!r}; concentration cannot raise alpha")

    @property
    def omega(self) -> float:
        if self.alpha == self.beta:
            return 0.0
        return float(np.arccos(np.clip(np.tan(self.alpha) / np.tan(self.beta), -1.0, 1.0)))

    @property
    def success_probability(self) -> float:
        if self.alpha == self.beta:
            return 1.0
        return float(np.sin(self.alpha) ** 2 / np.sin(self.beta) ** 2)


@dataclass(frozen=True, eq=False)
class FilterDecomposition:
    """filter = left @ diag(cos theta, cos delta) @ right."""

    left: np.ndarray = field(repr=False)
    theta: float
    delta: float
    right: np.ndarray = field(repr=False)

    def matrix(self) -> np.ndarray:
        return self.left @ np.diag([np.cos(self.theta), np.cos(self.delta)]) @ self.right

    @classmethod
    def diagonal(cls, h: float, v: float, right: np.ndarray | None = None) -> "FilterDecomposition":
        right = I2.copy() if right is None else np.asarray(right, dtype=complex)
        return cls(I2.copy(), float(np.arccos(np.clip(h, 0, 1))), float(np.arccos(np.clip(v, 0, 1))), right)

    @classmethod
    def from_filter(cls, f: np.ndarray) -> "FilterDecomposition":
        u, s, vh = np.linalg.svd(f)
        if s[0] > 1 + 1e-12:
            raise ProtocolFailed(f"filter singular value {s[0]!r} exceeds 1")
        return cls(u, float(np.arccos(min(s[0], 1.0))), float(np.arccos(min(s[1], 1.0))), vh)


def _slot_sequence(target: np.ndarray) -> WavePlateSequence | None:
    if np.allclose(target, I2, atol=1e-15, rtol=0):
        return None
    return synthesize_spr(target)


def _spr_settings(arm: str, dec: FilterDecomposition) -> dict[str, WavePlateSequence | None]:
    return {
        f"{arm}1": _slot_sequence(dec.right),
        f"{arm}2": _slot_sequence(ry(-2 * dec.theta)),
        f"{arm}3": _slot_sequence(ry(2 * dec.delta)),
        f"{arm}4": _slot_sequence(dec.left),
    }


@dataclass(frozen=True, eq=False)
class ConcentrationPlan:
    decomposition_a: FilterDecomposition
    decomposition_b: FilterDecomposition
    label: str = "custom"
    predicted_probability: float | None = None
    target: np.ndarray | None = field(default=None, repr=False)
    epsilon: float | None = None
    success_branch: tuple[int, int] = (0, 0)
    spr_settings: dict = field(init=False, repr=False)

    def __post_init__(self):
        for f in (self.filter_a, self.filter_b):
            s = np.linalg.svd(f, compute_uv=False)
            if s[0] > 1 + 1e-12:
                raise ProtocolFailed("filter is not a contraction; no POVM completion exists")
        settings = {**_spr_settings("A", self.decomposition_a), **_spr_settings("B", self.decomposition_b)}
        object.__setattr__(self, "spr_settings", settings)

    @property
    def filter_a(self) -> np.ndarray:
        return self.decomposition_a.matrix()

    @property
    def filter_b(self) -> np.ndarray:
        return self.decomposition_b.matrix()

    def kraus(self) -> np.ndarray:
        return np.kron(self.filter_a, self.filter_b)

    def netlist(self) -> OpticalNetlist:
        elements = []
        for arm, dec in (("A", self.decomposition_a), ("B", self.decomposition_b)):
            elements += interferometer_elements(
                dec.theta, dec.delta, arm, pre=dec.right, post=dec.left, post_path=0
            )
        return OpticalNetlist(FIG2_MODES, tuple(elements))

    def to_dict(self) -> dict:
        def seq(s):
            if s is None:
                return None
            p = s.params
            return {"xi": p.xi, "iota": p.iota, "theta": p.theta, "global_phase": s.global_phase}

        return {
            "label": self.label,
            "epsilon": self.epsilon,
            "predicted_probability": self.predicted_probability,
            "filter_A": _cmat(self.filter_a),
            "filter_B": _cmat(self.filter_b),
            "theta_A": self.decomposition_a.theta,
            "delta_A": self.decomposition_a.delta,
            "theta_B": self.decomposition_b.theta,
            "delta_B": self.decomposition_b.delta,
            "spr_settings": {k: seq(self.spr_settings[k]) for k in SLOTS},
            "success_branch": {"LA": self.success_branch[0], "LB": self.success_branch[1]},
        }


def _cmat(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


@dataclass(frozen=True, eq=False)
class ConcentrationOutcome:
    success_probability: float
    output_state: np.ndarray = field(repr=False)
    concurrence_before: float
    concurrence_after: float
    eof_before: float
    eof_after: float
    output_ket: np.ndarray | None = field(default=None, repr=False)
    fidelity: float | None = None

    @property
    def empty(self) -> bool:
        return self.success_probability < 1e-14


def identity_plan(label: str = "identity") -> ConcentrationPlan:
    return ConcentrationPlan(
        FilterDecomposition.diagonal(1, 1), FilterDecomposition.diagonal(1, 1), label, predicted_probability=1.0
    )


def plan_pure(spec: PureConcentrationSpec) -> ConcentrationPlan:
    """Filter diag(cos omega, 1) on photon A; slot A2 then holds Ry(-2 omega)."""
    return ConcentrationPlan(
        FilterDecomposition(I2.copy(), spec.omega, 0.0, I2.copy()),
        FilterDecomposition.diagonal(1, 1),
        "pure",
        predicted_probability=spec.success_probability,
        target=schmidt_state(spec.beta),
    )


def schmidt_form(psi) -> tuple[float, np.ndarray, np.ndarray]:
    """Schmidt angle alpha in [0, pi/4] and local unitaries (ua, ub) with (ua x ub) psi = cos a|HH> + sin a|VV>."""
    psi = as_ket(psi)
    u, s, vh = np.linalg.svd(psi.reshape(2, 2))
    return float(np.arctan2(s[1], s[0])), dagger(u), vh.conj()


def plan_pure_state(psi, beta: float) -> ConcentrationPlan:
    """Pure-state concentration for an arbitrary two-photon ket, rotating to Schmidt form in slots A1/B1."""
    alpha, ua, ub = schmidt_form(psi)
    if np.isclose(alpha, beta, atol=1e-13, rtol=0):
        alpha = beta
    spec = PureConcentrationSpec(alpha, beta)
    return ConcentrationPlan(
        FilterDecomposition(I2.copy(), spec.omega, 0.0, ua),
        FilterDecomposition(I2.copy(), 0.0, 0.0, ub),
        "pure",
        predicted_probability=spec.success_probability,
        target=schmidt_state(beta),
    )


def execute_plan(plan: ConcentrationPlan, state, check: bool = True) -> ConcentrationOutcome:
    """Simulate the two-arm setup and post-select path 0 in both arms.

    With ``check`` the result is compared with the direct Kraus action of
    the plan's filters and a mismatch beyond 1e-10 raises ProtocolFailed.
    """
    state = as_state(state)
    net = plan.netlist()
    out = simulate_netlist(net, state)
    prob, cond = postselect(net, out, {"LA": plan.success_branch[0], "LB": plan.success_branch[1]})
    if check:
        k = plan.kraus()
        direct = k @ state if state.ndim == 1 else k @ state @ dagger(k)
        if np.max(np.abs(_as_rho(direct) - _as_rho(cond))) > AGREEMENT_TOL:
            raise ProtocolFailed("circuit simulation disagrees with the filter algebra")
    c_before = concurrence(state)
    ket = None
    if prob < 1e-14:
        rho_out = np.zeros((4, 4), dtype=complex)
        c_after = 0.0
    elif cond.ndim == 1:
        ket = cond / np.sqrt(prob)
        rho_out = projector(ket)
        c_after = concurrence(ket)
    else:
        rho_out = cond / prob
        c_after = concurrence(rho_out)
    fid = None
    if plan.target is not None and prob >= 1e-14:
        fid = fidelity(rho_out, plan.target)
    return ConcentrationOutcome(
        float(prob),
        rho_out,
        float(c_before),
        float(c_after),
        float(eof_from_concurrence(c_before)),
        float(eof_from_concurrence(c_after)),
        ket,
        fid,
    )


def _as_rho(x: np.ndarray) -> np.ndarray:
    return projector(x) if x.ndim == 1 else x


def _scaled(f: np.ndarray) -> np.ndarray:
    return f / np.linalg.svd(f, compute_uv=False)[0]


def plan_mixed(rho) -> ConcentrationPlan:
    """Filters that bring the state to its Lorentz normal form.

    Bell-diagonal inputs get the identity plan. States without a diagonal
    normal form get the strongest member of the quasi-distillation family.
    """
    rho = as_density(rho)
    r = density_to_rmatrix(rho)
    if np.linalg.norm(r - np.diag(np.diag(r))) < BELL_DIAGONAL_TOL:
        return identity_plan("bell-diagonal")
    nf = lorentz_normal_form(r)
    if not nf.diagonalizable:
        return quasi_distill(rho)[-1]
    fa = _scaled(filter_from_lorentz(nf.L_A))
    fb = _scaled(filter_from_lorentz(nf.L_B))
    k = np.kron(fa, fb)
    prob = float(np.trace(k @ rho @ dagger(k)).real)
    return ConcentrationPlan(
        FilterDecomposition.from_filter(fa),
        FilterDecomposition.from_filter(fb),
        "mixed",
        predicted_probability=prob,
    )


def _suppressing_filter(n: np.ndarray | None, eps: float) -> FilterDecomposition:
    """U diag(1, eps) U^dagger, damping the pure state with Bloch vector ``n``."""
    if n is None:
        return FilterDecomposition.diagonal(1, 1)
    proj = 0.5 * (I2 + n[0] * np.array([[0, 1], [1, 0]]) + n[1] * np.array([[0, -1j], [1j, 0]])
                  + n[2] * np.diag([1, -1]))
    _, w = np.linalg.eigh(proj)
    # eigh orders eigenvalues ascending: column 0 is n-perp, column 1 is n
    return FilterDecomposition(w, 0.0, float(np.arccos(eps)), dagger(w))


def default_epsilon_grid(n: int = 20, smallest: float = 1e-3) -> np.ndarray:
    return np.geomspace(1.0, smallest, n)


def quasi_distill(rho, epsilons=None) -> list[ConcentrationPlan]:
    """Filter family of increasing strength for states without a diagonal normal form.

    Each photon is filtered by U diag(1, eps) U^dagger along the lightlike
    singular direction of its side; eps runs from 1 (no filtering) down to
    the smallest grid value. The output entanglement grows as eps shrinks
    while the success probability vanishes.
    """
    rho = as_density(rho)
    nf = lorentz_normal_form(density_to_rmatrix(rho))
    if nf.diagonalizable:
        raise NotApplicable("state has a diagonal Lorentz normal form; use plan_mixed")
    if nf.singular_direction_A is None and nf.singular_direction_B is None:
        raise ProtocolFailed("no lightlike singular direction found")
    grid = default_epsilon_grid() if epsilons is None else np.asarray(epsilons, dtype=float)
    if np.any(grid <= 0) or np.any(grid > 1):
        raise OutOfRange("quasi-distillation strengths must lie in (0, 1]")
    plans = []
    for eps in grid:
        fa = _suppressing_filter(nf.singular_direction_A, eps)
        fb = _suppressing_filter(nf.singular_direction_B, eps)
        k = np.kron(fa.matrix(), fb.matrix())
        prob = float(np.trace(k @ rho @ dagger(k)).real)
        plans.append(ConcentrationPlan(fa, fb, "quasi-distillation", predicted_probability=prob, epsilon=float(eps)))
    return plans


@dataclass(frozen=True)
class VbsParams:
    eta_HA: float
    eta_VA: float
    eta_HB: float
    eta_VB: float

    def __post_init__(self):
        for name in ("eta_HA", "eta_VA", "eta_HB", "eta_VB"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise OutOfRange(f"{name}={v!r} outside [0, 1]")

    def transmission_matrix(self) -> np.ndarray:
        return np.diag(
            [
                self.eta_HA * self.eta_HB,
                self.eta_HA * self.eta_VB,
                self.eta_VA * self.eta_HB,
                self.eta_VA * self.eta_VB,
            ]
        ).astype(complex)


def vbs_to_plan(v: VbsParams) -> ConcentrationPlan:
    """Four variable beam splitters as diagonal filters: cos theta = eta_H, cos delta = eta_V."""
    return ConcentrationPlan(
        FilterDecomposition.diagonal(v.eta_HA, v.eta_VA),
        FilterDecomposition.diagonal(v.eta_HB, v.eta_VB),
        "vbs",
    )
