"""Run experiment configs and parameter sweeps; serialize results deterministically."""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import SCHEMA_VERSION, ExperimentConfig, encode_complex, set_path
from .dilation import OpticalNetlist, postselect, simulate_netlist, spr_elements
from .errors import ConfigInvalid, InvalidAngles, ProtocolFailed, StateInvalid
from .lorentz import lorentz_normal_form
from .measures import concurrence, eof_from_concurrence, fidelity, trace_distance
from .optics import OpticalElement, SprParams, ry, spr_matrix
from .protocols import (
    FIG2_MODES,
    VbsParams,
    execute_plan,
    plan_mixed,
    plan_pure_state,
    quasi_distill,
    schmidt_form,
    vbs_to_plan,
)
from .qstate import density_to_rmatrix, to_density
from .tomography import reconstruct, simulate_counts

log = logging.getLogger(__name__)

SCALAR_COLUMNS = (
    "success_probability",
    "concurrence_before",
    "concurrence_after",
    "eof_before",
    "eof_after",
    "fidelity",
)


def encode_state(state: np.ndarray) -> dict:
    state = np.asarray(state)
    if state.ndim == 1:
        return {"amplitudes": [encode_complex(z) for z in state]}
    return {"density": [[encode_complex(z) for z in row] for row in state]}


@dataclass
class ResultRecord:
    config: dict
    success_probability: float
    concurrence_before: float
    concurrence_after: float
    eof_before: float
    eof_after: float
    output_state: np.ndarray = field(repr=False)
    fidelity: float | None = None
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def scalars(self) -> dict:
        return {k: getattr(self, k) for k in SCALAR_COLUMNS}

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            **{k: (None if v is None else float(v)) for k, v in self.scalars().items()},
            "output_state": encode_state(self.output_state),
            "details": self.details,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        _check_finite(d)
        return d


def _check_finite(obj, path: str = "") -> None:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ProtocolFailed(f"non-finite value at {path or 'root'}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def _record(cfg, state, outcome, details) -> ResultRecord:
    return ResultRecord(
        cfg.to_dict(),
        outcome.success_probability,
        outcome.concurrence_before,
        outcome.concurrence_after,
        outcome.eof_before,
        outcome.eof_after,
        outcome.output_ket if outcome.output_ket is not None else outcome.output_state,
        outcome.fidelity,
        details,
    )


def _run_pure(cfg: ExperimentConfig, state: np.ndarray) -> ResultRecord:
    if state.ndim != 1:
        raise StateInvalid("pure mode needs a pure input state (amplitudes or pure-schmidt family)")
    beta = np.pi / 4 if cfg.beta is None else cfg.beta
    alpha, _, _ = schmidt_form(state)
    plan = plan_pure_state(state, beta)
    outcome = execute_plan(plan, state)
    details = {
        "alpha": alpha,
        "beta": beta,
        "omega": plan.decomposition_a.theta,
        "predicted_probability": plan.predicted_probability,
        "plan": plan.to_dict(),
    }
    return _record(cfg, state, outcome, details)


def _family_rows(rho, plans) -> list[dict]:
    rows = []
    for p in plans:
        o = execute_plan(p, rho)
        rows.append(
            {
                "epsilon": p.epsilon,
                "success_probability": o.success_probability,
                "concurrence_after": o.concurrence_after,
                "eof_after": o.eof_after,
            }
        )
    return rows


def _run_mixed(cfg: ExperimentConfig, state: np.ndarray) -> ResultRecord:
    rho = to_density(state)
    nf = lorentz_normal_form(density_to_rmatrix(rho))
    details: dict = {
        "diagonalizable": nf.diagonalizable,
        "lorentz_singular_values": [float(s) for s in nf.sigma],
    }
    if nf.diagonalizable:
        plan = plan_mixed(rho)
    else:
        plans = quasi_distill(rho, cfg.epsilons)
        details["quasi_distillation"] = _family_rows(rho, plans)
        if cfg.epsilon is None:
            plan = plans[-1]
        else:
            plan = quasi_distill(rho, [cfg.epsilon])[0]
    details["plan"] = plan.to_dict()
    outcome = execute_plan(plan, rho)
    r_out = density_to_rmatrix(outcome.output_state) if not outcome.empty else np.zeros((4, 4))
    details["output_rmatrix"] = r_out.tolist()
    return _record(cfg, state, outcome, details)


def _run_vbs(cfg: ExperimentConfig, state: np.ndarray) -> ResultRecord:
    v = VbsParams(*(float(cfg.vbs[k]) for k in ("eta_HA", "eta_VA", "eta_HB", "eta_VB")))
    plan = vbs_to_plan(v)
    outcome = execute_plan(plan, state)
    t = v.transmission_matrix()
    direct = t @ state if state.ndim == 1 else t @ state @ t.conj().T
    direct_rho = to_density(direct)
    norm = np.trace(direct_rho).real
    residual = 0.0
    if norm > 1e-14:
        residual = float(np.max(np.abs(direct_rho / norm - outcome.output_state)))
    details = {
        "plan": plan.to_dict(),
        "transmission_probability": float(norm),
        "max_deviation_from_transmission_matrix": residual,
    }
    return _record(cfg, state, outcome, details)


def _run_tomography(cfg: ExperimentConfig, state: np.ndarray) -> ResultRecord:
    c_before = concurrence(state)
    prob = 1.0
    analysed = to_density(state)
    if cfg.protocol is not None:
        if cfg.protocol == "pure":
            if state.ndim != 1:
                raise StateInvalid("pure protocol needs a pure input state")
            plan = plan_pure_state(state, np.pi / 4 if cfg.beta is None else cfg.beta)
        else:
            plan = plan_mixed(to_density(state))
        outcome = execute_plan(plan, state)
        if outcome.empty:
            raise ProtocolFailed("post-selected branch is empty; nothing to analyse")
        prob = outcome.success_probability
        analysed = outcome.output_state
    records = simulate_counts(analysed, shots=cfg.shots or 0, mode=cfg.tomography_mode, seed=cfg.seed)
    rec = reconstruct(records)
    c_rec = concurrence(rec)
    details = {
        "records": [r.to_dict() for r in records],
        "trace_distance": trace_distance(rec, analysed),
        "fidelity_to_true_state": fidelity(rec, analysed),
        "true_state": encode_state(analysed),
    }
    return ResultRecord(
        cfg.to_dict(), prob, float(c_before), float(c_rec), float(eof_from_concurrence(c_before)),
        float(eof_from_concurrence(c_rec)), rec, None, details,
    )


def _netlist_from_config(spec: dict) -> OpticalNetlist:
    modes = tuple(spec.get("modes", FIG2_MODES))
    elements = []
    for i, e in enumerate(spec.get("elements", [])):
        if not isinstance(e, dict) or "kind" not in e:
            raise ConfigInvalid(f"netlist element {i} needs a 'kind'")
        arm = e.get("arm", "A")
        path = e.get("path")
        kind = e["kind"]
        try:
            if kind == "spr":
                m = spr_matrix(SprParams(float(e.get("xi", 0)), float(e.get("iota", 0)), float(e.get("theta", 0))))
                elements += spr_elements(m, arm, path) or [OpticalElement("identity", arm=arm, path=path)]
            elif kind == "ry":
                elements += spr_elements(ry(float(e["angle"])), arm, path)
            else:
                elements.append(
                    OpticalElement(kind, float(e.get("angle", 0.0)), e.get("component", 1), arm=arm, path=path)
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"netlist element {i}: {exc}") from None
    net = OpticalNetlist(modes, tuple(elements))
    for el in net.elements:
        net.axes_for(el.arm)
    return net


def _run_circuit(cfg: ExperimentConfig, state: np.ndarray) -> ResultRecord:
    try:
        net = _netlist_from_config(cfg.netlist)
    except StateInvalid as exc:
        raise ConfigInvalid(str(exc)) from None
    out = simulate_netlist(net, state)
    loc = [m for m in net.modes if m.startswith("L")]
    branches = []
    success = None
    for values in itertools.product((0, 1), repeat=len(loc)):
        sel = dict(zip(loc, values))
        prob, cond = postselect(net, out, sel)
        entry = {"outcome": sel, "probability": prob}
        if prob >= 1e-14:
            cond = cond / (np.sqrt(prob) if cond.ndim == 1 else prob)
            entry["concurrence"] = concurrence(cond)
            entry["state"] = encode_state(cond)
        branches.append(entry)
        if not any(values):
            success = (prob, cond)
    prob, cond = success
    c_before = concurrence(state)
    c_after = concurrence(cond) if prob >= 1e-14 else 0.0
    details = {"netlist": net.to_dict(), "branches": branches}
    return ResultRecord(
        cfg.to_dict(), prob, float(c_before), float(c_after), float(eof_from_concurrence(c_before)),
        float(eof_from_concurrence(c_after)), cond if prob >= 1e-14 else np.zeros(4), None, details,
    )


_RUNNERS = {
    "pure": _run_pure,
    "mixed": _run_mixed,
    "vbs-compare": _run_vbs,
    "tomography": _run_tomography,
    "circuit": _run_circuit,
}


def run(cfg: ExperimentConfig) -> ResultRecord:
    start = time.perf_counter()
    state = cfg.state()
    record = _RUNNERS[cfg.mode](cfg, state)
    record.wall_time = time.perf_counter() - start
    log.info("%s run finished in %.3f s", cfg.mode, record.wall_time)
    return record


def _grid_values(p: dict) -> list[float]:
    if "values" in p:
        return [float(v) for v in p["values"]]
    num = int(p["num"])
    if num < 0:
        raise ConfigInvalid("sweep num must be non-negative")
    return [float(v) for v in np.linspace(float(p["start"]), float(p["stop"]), num)]


def point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def sweep(cfg: ExperimentConfig) -> tuple[list[str], list[dict]]:
    """One row per grid point in lexicographic grid order; out-of-range angle cells are marked skipped."""
    if cfg.sweep is None:
        raise ConfigInvalid("sweep needs a 'sweep' section")
    params = cfg.sweep["parameters"]
    names = [p["name"] for p in params]
    grids = [_grid_values(p) for p in params]
    header = names + ["status"] + list(SCALAR_COLUMNS)
    base = cfg.to_dict()
    base.pop("sweep")
    rows = []
    for index, point in enumerate(itertools.product(*grids)):
        d = copy.deepcopy(base)
        for name, value in zip(names, point):
            set_path(d, name, value)
        if cfg.seed is not None:
            d["seed"] = point_seed(cfg.seed, index)
        row = dict(zip(names, point))
        try:
            rec = run(ExperimentConfig.from_dict(d))
            row.update(status="ok", **rec.scalars())
        except InvalidAngles as exc:
            log.info("grid point %s skipped: %s", point, exc)
            row.update(status="skipped", **{k: None for k in SCALAR_COLUMNS})
        rows.append(row)
    return header, rows


def format_number(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def rows_to_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(row.get(h)) for h in header])
    return buf.getvalue()


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
