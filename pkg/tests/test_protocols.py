import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polconc.errors import InvalidAngles, NotApplicable, OutOfRange, ProtocolFailed
from polconc.lorentz import lorentz_normal_form
from polconc.measures import concurrence, entanglement_of_formation
from polconc.protocols import (
    SLOTS,
    ConcentrationPlan,
    FilterDecomposition,
    PureConcentrationSpec,
    VbsParams,
    execute_plan,
    identity_plan,
    plan_mixed,
    plan_pure,
    plan_pure_state,
    quasi_distill,
    schmidt_form,
    vbs_to_plan,
)
from polconc.qstate import (
    bell_diagonal_state,
    bell_state,
    density_to_rmatrix,
    projector,
    random_density,
    random_ket,
    schmidt_state,
    werner_state,
)

quarter = st.floats(0, np.pi / 4)


def _horodecki(p):
    hh = np.zeros((4, 4), dtype=complex)
    hh[0, 0] = 1
    return p * projector(bell_state("psi-")) + (1 - p) * hh


def test_worked_example():
    spec = PureConcentrationSpec(np.pi / 6, np.pi / 4)
    assert spec.omega == pytest.approx(0.9553166181245092, abs=1e-14)
    assert spec.success_probability == pytest.approx(0.5, abs=1e-12)
    plan = plan_pure(spec)
    assert plan.spr_settings["A2"].elements[1].angle == pytest.approx(0.4776583090622546, abs=1e-14)
    out = execute_plan(plan, schmidt_state(np.pi / 6))
    assert out.success_probability == pytest.approx(0.5, abs=1e-10)
    assert out.concurrence_after == pytest.approx(1.0, abs=1e-10)
    assert out.fidelity >= 1 - 1e-10


def test_equal_angles_are_trivial():
    spec = PureConcentrationSpec(0.3, 0.3)
    assert spec.omega == 0 and spec.success_probability == 1
    out = execute_plan(plan_pure(spec), schmidt_state(0.3))
    assert out.success_probability == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha, beta", [(0.5, 0.3), (-0.1, 0.2), (0.2, 1.0)])
def test_invalid_angles(alpha, beta):
    with pytest.raises(InvalidAngles):
        PureConcentrationSpec(alpha, beta)


@settings(max_examples=100, deadline=None)
@given(a=quarter, b=quarter)
def test_pure_concentration_law(a, b):
    alpha, beta = sorted((a, b))
    spec = PureConcentrationSpec(alpha, beta)
    out = execute_plan(plan_pure(spec), schmidt_state(alpha))
    expected = 1.0 if alpha == beta else np.sin(alpha) ** 2 / np.sin(beta) ** 2
    assert abs(out.success_probability - expected) < 1e-10
    if not out.empty:
        assert out.fidelity >= 1 - 1e-10


def test_pure_state_with_local_rotations(rng):
    for _ in range(50):
        psi = random_ket(rng)
        alpha, ua, ub = schmidt_form(psi)
        np.testing.assert_allclose(np.kron(ua, ub) @ psi, schmidt_state(alpha), atol=1e-12)
        beta = rng.uniform(alpha, np.pi / 4)
        out = execute_plan(plan_pure_state(psi, beta), psi)
        assert abs(out.success_probability - np.sin(alpha) ** 2 / np.sin(beta) ** 2) < 1e-10
        assert out.fidelity >= 1 - 1e-10


def test_optimal_filter_is_not_beaten(rng):
    # perturbing the optimal filter never gives the target with higher probability
    alpha, beta = 0.3, np.pi / 4
    best = PureConcentrationSpec(alpha, beta).success_probability
    target = schmidt_state(beta)
    psi = schmidt_state(alpha)
    for _ in range(2000):
        fa = np.diag([np.cos(beta) / np.cos(alpha), np.sin(beta) / np.sin(alpha)]).astype(complex)
        fa = fa + 0.05 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        fb = np.eye(2) + 0.05 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        fa /= np.linalg.svd(fa, compute_uv=False)[0]
        fb /= np.linalg.svd(fb, compute_uv=False)[0]
        out = np.kron(fa, fb) @ psi
        p = np.vdot(out, out).real
        if abs(np.vdot(target, out)) ** 2 / p >= 1 - 1e-6:
            assert p <= best + 1e-6


def test_plan_serialization():
    plan = plan_pure(PureConcentrationSpec(np.pi / 6, np.pi / 4))
    d = plan.to_dict()
    assert set(d["spr_settings"]) == set(SLOTS)
    assert d["spr_settings"]["A2"]["theta"] == pytest.approx(0.9553166181245092, abs=1e-14)
    assert d["spr_settings"]["B2"] is None
    assert d["success_branch"] == {"LA": 0, "LB": 0}


def test_filter_decomposition_round_trip(rng):
    for _ in range(100):
        f = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        f /= np.linalg.svd(f, compute_uv=False)[0]
        np.testing.assert_allclose(FilterDecomposition.from_filter(f).matrix(), f, atol=1e-12)


def test_non_contraction_rejected():
    with pytest.raises(ProtocolFailed):
        ConcentrationPlan(FilterDecomposition.diagonal(1, 1), FilterDecomposition(2 * np.eye(2), 0, 0, np.eye(2)))


def test_bell_diagonal_uses_identity(rng):
    rho = bell_diagonal_state(rng.dirichlet(np.ones(4)))
    plan = plan_mixed(rho)
    assert plan.label == "bell-diagonal"
    out = execute_plan(plan, rho)
    assert out.success_probability == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.output_state, rho, atol=1e-12)


def test_mixed_concentration_gives_bell_diagonal(rng):
    for _ in range(30):
        rho = random_density(rng)
        plan = plan_mixed(rho)
        out = execute_plan(plan, rho)
        r = density_to_rmatrix(out.output_state)
        assert np.abs(r - np.diag(np.diag(r))).max() < 1e-6
        assert out.success_probability == pytest.approx(plan.predicted_probability, abs=1e-10)
        assert out.eof_after >= entanglement_of_formation(rho) - 1e-9


def test_mixed_on_pure_state_matches_pure_protocol(rng):
    alpha = 0.35
    out = execute_plan(plan_mixed(projector(schmidt_state(alpha))), projector(schmidt_state(alpha)))
    assert out.success_probability == pytest.approx(np.sin(alpha) ** 2 / np.sin(np.pi / 4) ** 2, abs=1e-8)
    assert out.concurrence_after == pytest.approx(1.0, abs=1e-8)


def test_werner_is_untouched():
    plan = plan_mixed(werner_state(0.7))
    assert plan.label == "bell-diagonal"


def test_quasi_distillation_family():
    rho = _horodecki(0.4)
    plans = quasi_distill(rho)
    outs = [execute_plan(p, rho) for p in plans]
    c = [o.concurrence_after for o in outs]
    p = [o.success_probability for o in outs]
    assert plans[0].epsilon == 1.0
    assert c[0] == pytest.approx(concurrence(rho), abs=1e-10)
    assert all(c2 >= c1 - 1e-12 for c1, c2 in zip(c, c[1:]))
    assert all(p2 <= p1 + 1e-12 for p1, p2 in zip(p, p[1:]))
    assert c[-1] > 0.99
    assert c[-1] > c[-2]


def test_quasi_distillation_not_for_diagonalizable(rng):
    with pytest.raises(NotApplicable):
        quasi_distill(random_density(rng))


def test_quasi_distillation_rejects_bad_strength():
    with pytest.raises(OutOfRange):
        quasi_distill(_horodecki(0.5), [0.5, 0.0])


def test_plan_mixed_falls_back_to_quasi_distillation():
    rho = _horodecki(0.6)
    assert not lorentz_normal_form(density_to_rmatrix(rho)).diagonalizable
    plan = plan_mixed(rho)
    assert plan.label == "quasi-distillation"
    assert execute_plan(plan, rho).concurrence_after > concurrence(rho)


def test_vbs_plan_matches_transmission(rng):
    for _ in range(50):
        v = VbsParams(*rng.uniform(0, 1, 4))
        np.testing.assert_allclose(vbs_to_plan(v).kraus(), v.transmission_matrix(), atol=1e-12)


def test_vbs_range_checked():
    with pytest.raises(OutOfRange):
        VbsParams(1.2, 0.5, 0.5, 0.5)


def test_identity_plan_leaves_state(rng):
    psi = random_ket(rng)
    out = execute_plan(identity_plan(), psi)
    assert out.success_probability == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.output_state, projector(psi), atol=1e-12)
