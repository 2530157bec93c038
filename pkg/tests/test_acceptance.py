"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected in the terminal summary.
"""

import json
import subprocess
import sys
import time

import numpy as np

from polconc.dilation import PovmPair, apply_povm, build_dilation
from polconc.lorentz import ETA, lorentz_normal_form
from polconc.measures import concurrence, eof_from_concurrence, entanglement_of_formation, trace_distance
from polconc.protocols import (
    PureConcentrationSpec,
    VbsParams,
    execute_plan,
    plan_mixed,
    plan_pure,
    quasi_distill,
    vbs_to_plan,
)
from polconc.qstate import (
    bell_diagonal_state,
    bell_state,
    dagger,
    density_to_rmatrix,
    projector,
    random_density,
    random_ket,
    random_unitary,
    schmidt_state,
)
from polconc.tomography import reconstruct, simulate_counts


class Gate:
    def __init__(self, report, name, budget):
        self.report, self.name, self.budget = report, name, budget
        self.values = {}

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        ok = exc_type is None and elapsed < self.budget
        stats = ", ".join(f"{k}={v:.3g}" for k, v in self.values.items())
        self.report(f"{'PASS' if ok else 'FAIL'} {self.name}: {stats} ({elapsed:.2f} s of {self.budget} s)")
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name} took {elapsed:.2f} s"
        return False


def _random_angles(n, seed):
    return np.random.default_rng(seed).uniform(-2 * np.pi, 2 * np.pi, size=(n, 2))


def test_ac01_dilation_identity(acceptance_report):
    pairs = _random_angles(1000, 1)
    with Gate(acceptance_report, "AC1 dilation identity", 1.0) as g:
        worst = max(build_dilation(PovmPair(t, v)).residual() for t, v in pairs)
        g.values["max_frobenius"] = worst
        assert worst < 1e-12


def test_ac02_povm_completeness(acceptance_report):
    pairs = _random_angles(1000, 1)
    with Gate(acceptance_report, "AC2 POVM completeness", 1.0) as g:
        worst = max(PovmPair(t, v).completeness_residual() for t, v in pairs)
        g.values["max_residual"] = worst
        assert worst < 1e-12


def test_ac03_pure_success_law(acceptance_report):
    grid = np.linspace(0, np.pi / 4, 20)
    with Gate(acceptance_report, "AC3 pure success law", 5.0) as g:
        worst_p, worst_f, cells = 0.0, 0.0, 0
        for i, alpha in enumerate(grid):
            for beta in grid[i:]:
                out = execute_plan(plan_pure(PureConcentrationSpec(alpha, beta)), schmidt_state(alpha))
                expected = 1.0 if alpha == beta else np.sin(alpha) ** 2 / np.sin(beta) ** 2
                worst_p = max(worst_p, abs(out.success_probability - expected))
                if not out.empty:
                    worst_f = max(worst_f, 1 - out.fidelity)
                cells += 1
        g.values.update(cells=cells, max_prob_error=worst_p, max_infidelity=worst_f)
        assert worst_p < 1e-10
        assert worst_f <= 1e-10


def test_ac04_worked_example(acceptance_report):
    with Gate(acceptance_report, "AC4 worked example", 1.0) as g:
        psi = np.array([np.sqrt(3) / 2, 0, 0, 0.5], dtype=complex)
        plan = plan_pure(PureConcentrationSpec(np.pi / 6, np.pi / 4))
        target = plan.spr_settings["A2"].matrix()
        omega = np.arccos(1 / np.sqrt(3))
        ry = np.array([[np.cos(omega), np.sin(omega)], [-np.sin(omega), np.cos(omega)]])
        assert np.abs(target - ry).max() < 1e-12
        out = execute_plan(plan, psi)
        g.values.update(concurrence=out.concurrence_after, probability=out.success_probability)
        assert abs(out.concurrence_after - 1) <= 1e-10
        assert abs(out.success_probability - 0.5) <= 1e-10


def test_ac05_kraus_circuit_equivalence(acceptance_report):
    rng = np.random.default_rng(5)
    with Gate(acceptance_report, "AC5 Kraus/circuit equivalence", 5.0) as g:
        worst_p = worst_s = 0.0
        for k in range(500):
            povm = PovmPair(*rng.uniform(0, np.pi / 2, 2), random_unitary(rng), random_unitary(rng))
            state = random_ket(rng) if k % 2 == 0 else random_density(rng)
            arm = "AB"[k % 4 // 2]
            for kr, cr in zip(apply_povm(povm, state, arm), apply_povm(povm, state, arm, "circuit")):
                worst_p = max(worst_p, abs(kr.probability - cr.probability))
                a, b = kr.conditional_state, cr.conditional_state
                if a.ndim == 1:
                    a, b = projector(a), projector(b)
                worst_s = max(worst_s, np.abs(a - b).max())
        g.values.update(max_prob_error=worst_p, max_state_error=worst_s)
        assert worst_p < 1e-10
        assert worst_s < 1e-10


def _random_set():
    rng = np.random.default_rng(6)
    return [random_density(rng) for _ in range(500)]


def test_ac06_lorentz_normal_form(acceptance_report):
    states = _random_set()
    rng = np.random.default_rng(60)
    with Gate(acceptance_report, "AC6 Lorentz normal form", 10.0) as g:
        worst_polt = worst_off = 0.0
        for rho in states:
            nf = lorentz_normal_form(density_to_rmatrix(rho))
            assert nf.diagonalizable
            for lt in (nf.L_A, nf.L_B):
                worst_polt = max(worst_polt, np.abs(lt @ ETA @ lt.T - ETA).max(), abs(np.linalg.det(lt) - 1))
                assert lt[0, 0] >= 1 - 1e-10
            worst_off = max(worst_off, nf.off_diagonal_mass())
        fixed = 0.0
        for _ in range(100):
            rho = bell_diagonal_state(rng.dirichlet(np.ones(4)))
            r = density_to_rmatrix(rho)
            nf = lorentz_normal_form(r)
            fixed = max(fixed, nf.off_diagonal_mass(),
                        np.abs(np.sort(np.abs(nf.sigma)) - np.sort(np.abs(np.diag(r)))).max())
            out = execute_plan(plan_mixed(rho), rho)
            fixed = max(fixed, np.abs(out.output_state - rho).max())
        g.values.update(max_polt_error=worst_polt, max_off_diagonal=worst_off, bell_diagonal_error=fixed)
        assert worst_polt < 1e-10
        assert worst_off < 1e-8
        assert fixed < 1e-8


def _random_contractions(rng, n):
    g = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    # largest singular value of a 2x2 matrix from its Frobenius norm and determinant
    fro2 = np.einsum("nab,nab->n", g, g.conj()).real
    det2 = np.abs(np.linalg.det(g)) ** 2
    smax = np.sqrt((fro2 + np.sqrt(np.clip(fro2**2 - 4 * det2, 0, None))) / 2)
    return g / smax[:, None, None]


_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def _filtered_concurrence(k, w0, prob):
    """Concurrence of K rho K^dagger / p for a stack of K, with rho = w0 w0^dagger.

    W = K w0 factors the filtered state, so the lambdas are the square roots
    of the eigenvalues of tau tau^dagger with tau = W^T (Y x Y) W.
    """
    w = (k @ w0) / np.sqrt(prob)[:, None, None]
    tau = np.swapaxes(w, -1, -2) @ _YY @ w
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(tau @ dagger(tau)), 0, None))[:, ::-1]
    return np.maximum(0.0, lam[:, 0] - lam[:, 1:].sum(axis=1))


def test_ac07_mixed_concentration(acceptance_report):
    states = _random_set()
    rng = np.random.default_rng(7)
    samples = 10_000
    with Gate(acceptance_report, "AC7 mixed concentration", 60.0) as g:
        worst_off, worst_eof, worst_beat, checked = 0.0, 0.0, -np.inf, 0
        for rho in states:
            out = execute_plan(plan_mixed(rho), rho)
            r = density_to_rmatrix(out.output_state)
            worst_off = max(worst_off, np.linalg.norm(r - np.diag(np.diag(r))))
            worst_eof = max(worst_eof, entanglement_of_formation(rho) - out.eof_after)

            evals, evecs = np.linalg.eigh(rho)
            w0 = evecs * np.sqrt(np.clip(evals, 0, None))
            k = np.einsum("nab,ncd->nacbd", _random_contractions(rng, samples),
                          _random_contractions(rng, samples)).reshape(samples, 4, 4)
            kw = k @ w0
            prob = np.einsum("nab,nab->n", kw, kw.conj()).real
            keep = prob >= out.success_probability
            if keep.any():
                c = _filtered_concurrence(k[keep], w0, prob[keep])
                if checked < 5:
                    filtered = k[keep][:10] @ rho @ dagger(k[keep][:10]) / prob[keep][:10, None, None]
                    assert np.abs(c[:10] - concurrence(filtered)).max() < 1e-7
                    checked += 1
                worst_beat = max(worst_beat, float(np.max(eof_from_concurrence(c) - out.eof_after)))
        g.values.update(max_off_diagonal=worst_off, max_eof_loss=worst_eof, max_mc_gain=worst_beat)
        assert worst_off < 1e-6
        assert worst_eof <= 1e-9
        assert worst_beat <= 1e-3


def test_ac08_vbs_equivalence(acceptance_report):
    rng = np.random.default_rng(8)
    with Gate(acceptance_report, "AC8 VBS equivalence", 2.0) as g:
        worst = 0.0
        for k in range(200):
            v = VbsParams(*rng.uniform(0, 1, 4))
            state = random_ket(rng) if k % 2 == 0 else random_density(rng)
            out = execute_plan(vbs_to_plan(v), state)
            t = v.transmission_matrix()
            direct = t @ state if state.ndim == 1 else t @ state @ dagger(t)
            direct = projector(direct) if state.ndim == 1 else direct
            worst = max(worst, np.abs(out.output_state * out.success_probability - direct).max())
        g.values["max_error"] = worst
        assert worst < 1e-12


def test_ac09_quasi_distillation(acceptance_report):
    rng = np.random.default_rng(9)
    hh = np.zeros((4, 4), dtype=complex)
    hh[0, 0] = 1
    u = np.kron(random_unitary(rng), random_unitary(rng))
    rho = u @ (0.3 * projector(bell_state("psi-")) + 0.7 * hh) @ dagger(u)
    with Gate(acceptance_report, "AC9 quasi-distillation", 5.0) as g:
        assert not lorentz_normal_form(density_to_rmatrix(rho)).diagonalizable
        outs = [execute_plan(p, rho) for p in quasi_distill(rho)]
        e = np.array([o.eof_after for o in outs])
        p = np.array([o.success_probability for o in outs])
        g.values.update(points=len(outs), eof_in=entanglement_of_formation(rho), eof_end=e[-1], prob_end=p[-1])
        assert len(outs) == 20
        assert np.all(np.diff(e) >= -1e-12)
        assert np.all(np.diff(p) <= 1e-12)
        assert e[-1] > entanglement_of_formation(rho)


def test_ac10_tomography(acceptance_report):
    rng = np.random.default_rng(10)
    with Gate(acceptance_report, "AC10 tomography round trip", 30.0) as g:
        worst = 0.0
        for _ in range(200):
            rho = random_density(rng)
            worst = max(worst, np.abs(reconstruct(simulate_counts(rho)) - rho).max())
        dists = []
        for seed in range(20):
            rho = random_density(rng)
            recs = simulate_counts(rho, shots=10**6, mode="sampled", seed=seed)
            dists.append(trace_distance(reconstruct(recs), rho))
        g.values.update(exact_max_error=worst, sampled_median_trace_distance=float(np.median(dists)))
        assert worst < 1e-10
        assert np.median(dists) <= 2e-2


def test_ac11_cli_determinism(acceptance_report, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "mode": "tomography", "input_state": {"family": "horodecki", "p": 0.4}, "protocol": "mixed",
        "tomography_mode": "sampled", "shots": 5000, "seed": 123,
    }))
    cmd = [sys.executable, "-m", "polconc", "tomography", "--config", str(cfg)]
    with Gate(acceptance_report, "AC11 CLI determinism", 5.0) as g:
        runs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
        csv_cmd = cmd + ["--format", "csv"]
        csv_runs = [subprocess.run(csv_cmd, capture_output=True, check=True).stdout for _ in range(2)]
        g.values["bytes"] = len(runs[0])
        assert runs[0] == runs[1]
        assert csv_runs[0] == csv_runs[1]
