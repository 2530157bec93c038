"""Simulated coincidence tomography on the post-selected output ports.

Each arm's analyser is an SPR followed by a PBS with a detector on each
port: outcome 0 is the transmitted (H) port, outcome 1 the reflected (V)
port. The SPR maps the +1 eigenstate of the chosen Pauli basis to |H>:
identity for Z (H/V), HWP at 22.5 degrees for X (D/A) and a synthesized
rotation for Y (R/L). Nine basis pairs give every two-photon correlator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import IncompleteSettings, InvalidShots
from .optics import WavePlateSequence, hwp_matrix, synthesize_spr
from .qstate import PAULI, as_density, dagger, rmatrix_to_density

BASES = ("Z", "X", "Y")
BASIS_ALIASES = {"H/V": "Z", "D/A": "X", "R/L": "Y", "Z": "Z", "X": "X", "Y": "Y"}
_PAULI_INDEX = {"X": 1, "Y": 2, "Z": 3}

_ANALYSER = {
    "Z": np.eye(2, dtype=complex),
    "X": hwp_matrix(np.pi / 8),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
}


def analyser_sequence(basis: str) -> WavePlateSequence:
    return synthesize_spr(_ANALYSER[BASIS_ALIASES[basis]])


def outcome_projectors(basis: str) -> np.ndarray:
    """Projectors for the transmitted (0) and reflected (1) detectors, as seen before the SPR."""
    u = analyser_sequence(basis).matrix()
    return np.array([dagger(u) @ np.diag(d).astype(complex) @ u for d in ([1, 0], [0, 1])])


@dataclass(frozen=True)
class MeasurementSetting:
    basis_a: str
    basis_b: str

    def __post_init__(self):
        for b in (self.basis_a, self.basis_b):
            if b not in BASIS_ALIASES:
                raise ValueError(f"unknown basis {b!r}")
        object.__setattr__(self, "basis_a", BASIS_ALIASES[self.basis_a])
        object.__setattr__(self, "basis_b", BASIS_ALIASES[self.basis_b])

    def projectors(self) -> np.ndarray:
        """Four two-photon projectors, outcome order (00, 01, 10, 11)."""
        pa, pb = outcome_projectors(self.basis_a), outcome_projectors(self.basis_b)
        return np.array([np.kron(pa[i], pb[j]) for i in range(2) for j in range(2)])


ALL_SETTINGS = tuple(MeasurementSetting(a, b) for a, b in itertools.product(BASES, BASES))


@dataclass(frozen=True)
class CountRecord:
    setting: MeasurementSetting
    counts: tuple
    total: float
    mode: str = "exact"
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "basis_A": self.setting.basis_a,
            "basis_B": self.setting.basis_b,
            "counts": [c if isinstance(c, int) else float(c) for c in self.counts],
            "total": self.total,
            "mode": self.mode,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CountRecord":
        counts = tuple(int(c) if d["mode"] == "sampled" else float(c) for c in d["counts"])
        return cls(MeasurementSetting(d["basis_A"], d["basis_B"]), counts, d["total"], d["mode"], d.get("seed"))


def born_probabilities(rho, setting: MeasurementSetting) -> np.ndarray:
    p = np.einsum("kab,ba->k", setting.projectors(), rho).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def simulate_counts(rho, settings=None, shots: int = 0, mode: str = "exact", seed: int | None = None):
    """Exact mode returns shots x Born probabilities (probabilities themselves when shots is 0).

    Sampled mode draws multinomial counts from one generator seeded with
    ``seed``, visiting the settings in order.
    """
    rho = as_density(rho)
    settings = ALL_SETTINGS if settings is None else tuple(settings)
    if isinstance(shots, bool) or int(shots) != shots or shots < 0:
        raise InvalidShots(f"shots must be a non-negative integer, got {shots!r}")
    shots = int(shots)
    if mode == "exact":
        total = shots if shots > 0 else 1
        return [
            CountRecord(s, tuple(float(x) for x in total * born_probabilities(rho, s)), total, "exact")
            for s in settings
        ]
    if mode != "sampled":
        raise ValueError(f"mode must be 'exact' or 'sampled', not {mode!r}")
    if shots == 0:
        raise InvalidShots("sampled mode needs shots > 0")
    if seed is None:
        raise InvalidShots("sampled mode needs a seed")
    rng = np.random.default_rng(seed)
    return [
        CountRecord(s, tuple(int(x) for x in rng.multinomial(shots, born_probabilities(rho, s))), shots, "sampled", seed)
        for s in settings
    ]


def project_to_state(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize the trace."""
    rho = (rho + dagger(rho)) / 2
    evals, evecs = np.linalg.eigh(rho)
    evals = np.clip(evals, 0.0, None)
    out = (evecs * evals) @ dagger(evecs)
    return out / evals.sum()


def reconstruct(records) -> np.ndarray:
    """Linear inversion through the R-matrix, then positivity repair.

    Records for the same setting are pooled. Single-photon terms R_i0 and
    R_0j are averaged over the three partner bases.
    """
    pooled: dict[tuple[str, str], np.ndarray] = {}
    for rec in records:
        key = (rec.setting.basis_a, rec.setting.basis_b)
        pooled[key] = pooled.get(key, 0) + np.asarray(rec.counts, dtype=float)
    missing = [s for s in ALL_SETTINGS if (s.basis_a, s.basis_b) not in pooled]
    if missing:
        raise IncompleteSettings(f"missing settings: {[(s.basis_a, s.basis_b) for s in missing]}")
    r = np.zeros((4, 4))
    r[0, 0] = 1.0
    sign_a = np.array([1, 1, -1, -1])
    sign_b = np.array([1, -1, 1, -1])
    for (ba, bb), n in pooled.items():
        if n.sum() <= 0:
            raise IncompleteSettings(f"setting {(ba, bb)} has no counts")
        f = n / n.sum()
        i, j = _PAULI_INDEX[ba], _PAULI_INDEX[bb]
        r[i, j] = f @ (sign_a * sign_b)
        r[i, 0] += f @ sign_a / 3
        r[0, j] += f @ sign_b / 3
    return project_to_state(rmatrix_to_density(r))


def pauli_expectation(rho, i: int, j: int) -> float:
    return float(np.trace(rho @ np.kron(PAULI[i], PAULI[j])).real)
